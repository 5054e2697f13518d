//! Top-k ranking and the per-user accuracy metrics P@k, R@k, F1@k, NDCG@k.
//!
//! Relevant sets are passed as sorted `u32` slices, which is how
//! [`InteractionMatrix`](crate::data::InteractionMatrix) stores positives.

use alloc::vec::Vec;
use core::cmp::Ordering;

use serde::{Deserialize, Serialize};

/// Normalizer for NDCG@k.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IdcgMode {
    /// Σ_{i=1..k} 1/log₂(i+1), independent of how many items are relevant.
    #[default]
    Full,
    /// Σ over the first min(k, |relevant|) positions only.
    Truncated,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedList {
    pub items: Vec<usize>,
    pub scores: Vec<f64>,
    /// Fewer than `k` candidates were available.
    pub short: bool,
}

/// The `k` highest-scoring items not excluded, best first. Ties go to the
/// lower item index.
pub fn top_k(scores: &[f64], k: usize, is_excluded: impl Fn(usize) -> bool) -> RankedList {
    let by_rank = |a: &usize, b: &usize| -> Ordering { scores[*b].total_cmp(&scores[*a]).then(a.cmp(b)) };
    let mut candidates: Vec<usize> = (0..scores.len()).filter(|&i| !is_excluded(i)).collect();
    let short = candidates.len() < k;
    if !short && k > 0 && candidates.len() > k {
        candidates.select_nth_unstable_by(k - 1, by_rank);
        candidates.truncate(k);
    }
    candidates.sort_unstable_by(by_rank);
    candidates.truncate(k);
    let scores = candidates.iter().map(|&i| scores[i]).collect();
    RankedList {
        items: candidates,
        scores,
        short,
    }
}

#[inline]
fn contains(relevant: &[u32], item: usize) -> bool {
    relevant.binary_search(&(item as u32)).is_ok()
}

/// Number of relevant items among the first `k` ranked.
pub fn hit_count(ranked: &[usize], relevant: &[u32], k: usize) -> usize {
    ranked.iter().take(k).filter(|&&i| contains(relevant, i)).count()
}

pub fn precision_at_k(ranked: &[usize], relevant: &[u32], k: usize) -> f64 {
    if k == 0 {
        return 0.0;
    }
    hit_count(ranked, relevant, k) as f64 / k as f64
}

/// `None` when nothing is relevant; such users are left out of averages.
pub fn recall_at_k(ranked: &[usize], relevant: &[u32], k: usize) -> Option<f64> {
    if relevant.is_empty() {
        return None;
    }
    Some(hit_count(ranked, relevant, k) as f64 / relevant.len() as f64)
}

pub fn f1_at_k(precision: f64, recall: f64) -> f64 {
    if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    }
}

#[inline]
fn discount(position: usize) -> f64 {
    // position is 0-based; rank i = position + 1 gets 1/log2(i + 1).
    1.0 / libm::log2(position as f64 + 2.0)
}

pub fn ndcg_at_k(ranked: &[usize], relevant: &[u32], k: usize, mode: IdcgMode) -> f64 {
    let ideal_len = match mode {
        IdcgMode::Full => k,
        IdcgMode::Truncated => k.min(relevant.len()),
    };
    let idcg: f64 = (0..ideal_len).map(discount).sum();
    if idcg == 0.0 {
        return 0.0;
    }
    let dcg: f64 = ranked
        .iter()
        .take(k)
        .enumerate()
        .filter(|(_, &i)| contains(relevant, i))
        .map(|(p, _)| discount(p))
        .sum();
    dcg / idcg
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn top_k_sorts_and_excludes() {
        let s = [0.9, 0.1, 0.5];
        assert_eq!(top_k(&s, 2, |_| false).items, [0, 2]);
        assert_eq!(top_k(&s, 2, |i| i == 0).items, [2, 1]);
        assert_eq!(top_k(&[0.3; 4], 2, |_| false).items, [0, 1]);
        let r = top_k(&s, 2, |_| false);
        assert_eq!(r.scores, [0.9, 0.5]);
        assert!(!r.short);
    }

    #[test]
    fn top_k_flags_short_lists() {
        let r = top_k(&[0.2, 0.4, 0.1], 3, |i| i == 1);
        assert!(r.short);
        assert_eq!(r.items, [0, 2]);
    }

    #[test]
    fn top_k_tie_break_after_selection() {
        let s = [0.5, 0.9, 0.5, 0.5, 0.1, 0.5];
        assert_eq!(top_k(&s, 3, |_| false).items, [1, 0, 2]);
    }

    #[test]
    fn precision_examples() {
        assert_eq!(precision_at_k(&[4, 5], &[4, 5, 9], 2), 1.0);
        assert_eq!(precision_at_k(&[0, 1, 2], &[0, 2], 3), 2.0 / 3.0);
        assert_eq!(precision_at_k(&[0, 1, 2], &[], 3), 0.0);
    }

    #[test]
    fn recall_examples() {
        assert_eq!(recall_at_k(&[3, 1, 0, 8, 9], &[1, 8], 5), Some(1.0));
        // ω = [a, b, c], I* = {a, d, e, f}
        assert_eq!(recall_at_k(&[0, 1, 2], &[0, 3, 4, 5], 3), Some(0.25));
        assert_eq!(recall_at_k(&[0, 1], &[7], 2), Some(0.0));
        assert_eq!(recall_at_k(&[0, 1], &[], 2), None);
    }

    #[test]
    fn f1_examples() {
        assert_eq!(f1_at_k(1.0, 1.0), 1.0);
        assert!((f1_at_k(0.37, 0.37) - 0.37).abs() < 1e-15);
        assert!((f1_at_k(0.5, 0.25) - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(f1_at_k(0.0, 0.0), 0.0);
    }

    #[test]
    fn ndcg_examples() {
        assert!((ndcg_at_k(&[1, 2, 3], &[1, 2, 3], 3, IdcgMode::Full) - 1.0).abs() < 1e-15);
        let second = ndcg_at_k(&[0, 1], &[1], 2, IdcgMode::Full);
        let expected = (1.0 / libm::log2(3.0)) / (1.0 + 1.0 / libm::log2(3.0));
        assert!((second - expected).abs() < 1e-15);
        assert!((second - 0.38685).abs() < 1e-5);
        assert_eq!(ndcg_at_k(&[0, 1], &[5], 2, IdcgMode::Full), 0.0);
    }

    #[test]
    fn truncated_idcg_lets_short_relevant_sets_reach_one() {
        let full = ndcg_at_k(&[4, 0, 1], &[4], 3, IdcgMode::Full);
        let truncated = ndcg_at_k(&[4, 0, 1], &[4], 3, IdcgMode::Truncated);
        assert!(full < 1.0);
        assert!((truncated - 1.0).abs() < 1e-15);
        assert_eq!(ndcg_at_k(&[4], &[], 1, IdcgMode::Truncated), 0.0);
    }
}
