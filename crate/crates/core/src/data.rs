//! Implicit-feedback interaction data.
//!
//! Raw ratings are binarized at a threshold, users with too few positives
//! are dropped, and the surviving interactions are split at random into
//! train / validation / test. The result is an [`InteractionMatrix`]: dense
//! user and item indices, the original ids, and per-split adjacency lists.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::DenseMatrix;
use crate::rng::SeededRng;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawRating {
    pub user: String,
    pub item: String,
    pub value: f64,
}

/// A positive (user, item) interaction keyed by original ids.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct ImplicitPair {
    pub user: String,
    pub item: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Split {
    Train,
    Valid,
    Test,
}

impl Split {
    pub const ALL: [Split; 3] = [Split::Train, Split::Valid, Split::Test];

    fn slot(self) -> usize {
        match self {
            Split::Train => 0,
            Split::Valid => 1,
            Split::Test => 2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitRatios {
    pub train: f64,
    pub valid: f64,
    pub test: f64,
}

impl Default for SplitRatios {
    fn default() -> Self {
        Self {
            train: 0.8,
            valid: 0.1,
            test: 0.1,
        }
    }
}

/// One labelled interaction in dense indices.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct LabelledInteraction {
    pub user: u32,
    pub item: u32,
    pub split: Split,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DatasetStats {
    pub users: usize,
    pub items: usize,
    pub interactions: usize,
    /// 1 − interactions / (users · items).
    pub sparsity: f64,
}

impl DatasetStats {
    pub fn new(users: usize, items: usize, interactions: usize) -> Self {
        let cells = users as f64 * items as f64;
        let sparsity = if cells > 0.0 { 1.0 - interactions as f64 / cells } else { 0.0 };
        Self {
            users,
            items,
            interactions,
            sparsity,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct InteractionMatrix {
    user_ids: Vec<String>,
    item_ids: Vec<String>,
    user_index: BTreeMap<String, u32>,
    item_index: BTreeMap<String, u32>,
    interactions: Vec<LabelledInteraction>,
    /// Sorted positives per user, one table per split.
    by_user: [Vec<Vec<u32>>; 3],
    /// Sorted training positives per item.
    train_by_item: Vec<Vec<u32>>,
}

impl InteractionMatrix {
    /// Builds a matrix from ids and labelled interactions. Ids must be unique,
    /// indices in range, and each (user, item) pair may appear only once.
    pub fn from_parts(
        user_ids: Vec<String>,
        item_ids: Vec<String>,
        mut interactions: Vec<LabelledInteraction>,
    ) -> Result<Self> {
        let user_index = index_of(&user_ids, "user")?;
        let item_index = index_of(&item_ids, "item")?;
        let (n, m) = (user_ids.len(), item_ids.len());
        interactions.sort();
        for pair in interactions.windows(2) {
            if pair[0].user == pair[1].user && pair[0].item == pair[1].item {
                return Err(Error::invalid(format!(
                    "duplicate interaction ({}, {})",
                    pair[0].user, pair[0].item
                )));
            }
        }
        let mut by_user: [Vec<Vec<u32>>; 3] = [vec![Vec::new(); n], vec![Vec::new(); n], vec![Vec::new(); n]];
        let mut train_by_item = vec![Vec::new(); m];
        for x in &interactions {
            if x.user as usize >= n || x.item as usize >= m {
                return Err(Error::invalid(format!(
                    "interaction ({}, {}) outside {n}x{m}",
                    x.user, x.item
                )));
            }
            by_user[x.split.slot()][x.user as usize].push(x.item);
            if x.split == Split::Train {
                train_by_item[x.item as usize].push(x.user);
            }
        }
        Ok(Self {
            user_ids,
            item_ids,
            user_index,
            item_index,
            interactions,
            by_user,
            train_by_item,
        })
    }

    /// Matrix with ids `"0".."n-1"` / `"0".."m-1"`, for generated data.
    pub fn from_indexed(n_users: usize, n_items: usize, interactions: Vec<LabelledInteraction>) -> Result<Self> {
        let ids = |k: usize| (0..k).map(|i| format!("{i}")).collect();
        Self::from_parts(ids(n_users), ids(n_items), interactions)
    }

    pub fn n_users(&self) -> usize {
        self.user_ids.len()
    }

    pub fn n_items(&self) -> usize {
        self.item_ids.len()
    }

    pub fn user_ids(&self) -> &[String] {
        &self.user_ids
    }

    pub fn item_ids(&self) -> &[String] {
        &self.item_ids
    }

    pub fn user_index(&self, id: &str) -> Option<usize> {
        self.user_index.get(id).map(|&u| u as usize)
    }

    pub fn item_index(&self, id: &str) -> Option<usize> {
        self.item_index.get(id).map(|&i| i as usize)
    }

    /// All interactions, sorted by (user, item).
    pub fn interactions(&self) -> &[LabelledInteraction] {
        &self.interactions
    }

    /// Sorted items user `u` interacted with in `split`.
    pub fn positives(&self, u: usize, split: Split) -> &[u32] {
        &self.by_user[split.slot()][u]
    }

    /// Sorted users that interacted with item `i` in the training split.
    pub fn train_users_of(&self, i: usize) -> &[u32] {
        &self.train_by_item[i]
    }

    pub fn is_positive(&self, u: usize, i: usize, split: Split) -> bool {
        self.positives(u, split).binary_search(&(i as u32)).is_ok()
    }

    pub fn count(&self, split: Split) -> usize {
        self.by_user[split.slot()].iter().map(Vec::len).sum()
    }

    pub fn stats(&self) -> DatasetStats {
        DatasetStats::new(self.n_users(), self.n_items(), self.interactions.len())
    }

    /// Dense training rows `R_u` for the given users (|users| × items).
    pub fn train_rows(&self, users: &[usize]) -> DenseMatrix {
        let m = self.n_items();
        let mut out = DenseMatrix::zeros(users.len(), m);
        for (r, &u) in users.iter().enumerate() {
            let row = out.row_mut(r);
            for &i in self.positives(u, Split::Train) {
                row[i as usize] = 1.0;
            }
        }
        out
    }

    /// Dense training columns `Rᵀ_i` for the given items (|items| × users).
    pub fn train_columns(&self, items: &[usize]) -> DenseMatrix {
        let n = self.n_users();
        let mut out = DenseMatrix::zeros(items.len(), n);
        for (r, &i) in items.iter().enumerate() {
            let row = out.row_mut(r);
            for &u in self.train_users_of(i) {
                row[u as usize] = 1.0;
            }
        }
        out
    }
}

fn index_of(ids: &[String], what: &str) -> Result<BTreeMap<String, u32>> {
    let mut map = BTreeMap::new();
    for (k, id) in ids.iter().enumerate() {
        if map.insert(id.clone(), k as u32).is_some() {
            return Err(Error::invalid(format!("duplicate {what} id {id:?}")));
        }
    }
    Ok(map)
}

/// Keeps ratings at or above `threshold` as positives, collapsing duplicate
/// (user, item) pairs. Input order of first occurrence is preserved.
pub fn binarize(ratings: &[RawRating], threshold: f64) -> Vec<ImplicitPair> {
    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    for r in ratings {
        if !(r.value >= threshold) {
            continue;
        }
        let pair = ImplicitPair {
            user: r.user.clone(),
            item: r.item.clone(),
        };
        if seen.insert(pair.clone()) {
            out.push(pair);
        }
    }
    out
}

/// Drops users with fewer than `min_count` positives.
///
/// Only users are filtered, so one pass reaches the fixpoint.
pub fn filter_min_interactions(pairs: Vec<ImplicitPair>, min_count: usize) -> Result<Vec<ImplicitPair>> {
    let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
    for p in &pairs {
        *counts.entry(p.user.as_str()).or_default() += 1;
    }
    let keep: BTreeSet<String> = counts
        .into_iter()
        .filter(|&(_, c)| c >= min_count)
        .map(|(u, _)| String::from(u))
        .collect();
    let out: Vec<ImplicitPair> = pairs.into_iter().filter(|p| keep.contains(&p.user)).collect();
    if out.is_empty() {
        return Err(Error::Empty(format!("no user has at least {min_count} interactions")));
    }
    Ok(out)
}

/// Randomly labels interactions train / valid / test and reindexes users and
/// items densely in order of first appearance.
pub fn split(pairs: &[ImplicitPair], ratios: SplitRatios, rng: &mut SeededRng) -> Result<InteractionMatrix> {
    let SplitRatios { train, valid, test } = ratios;
    if [train, valid, test].iter().any(|r| !(*r >= 0.0)) || libm::fabs(train + valid + test - 1.0) > 1e-9 {
        return Err(Error::invalid(format!(
            "split ratios must be non-negative and sum to 1, got {train}/{valid}/{test}"
        )));
    }
    if pairs.is_empty() {
        return Err(Error::Empty(String::from("no interactions to split")));
    }

    let mut user_ids = Vec::new();
    let mut item_ids = Vec::new();
    let mut users: BTreeMap<&str, u32> = BTreeMap::new();
    let mut items: BTreeMap<&str, u32> = BTreeMap::new();
    let mut indexed = Vec::with_capacity(pairs.len());
    let mut seen = BTreeSet::new();
    for p in pairs {
        let u = *users.entry(p.user.as_str()).or_insert_with(|| {
            user_ids.push(p.user.clone());
            (user_ids.len() - 1) as u32
        });
        let i = *items.entry(p.item.as_str()).or_insert_with(|| {
            item_ids.push(p.item.clone());
            (item_ids.len() - 1) as u32
        });
        if seen.insert((u, i)) {
            indexed.push((u, i));
        }
    }

    let total = indexed.len();
    let n_train = libm::round(train * total as f64) as usize;
    let n_valid = (libm::round(valid * total as f64) as usize).min(total - n_train);
    let mut order: Vec<usize> = (0..total).collect();
    rng.shuffle(&mut order);
    let mut labels = vec![Split::Test; total];
    for (rank, &k) in order.iter().enumerate() {
        labels[k] = if rank < n_train {
            Split::Train
        } else if rank < n_train + n_valid {
            Split::Valid
        } else {
            Split::Test
        };
    }
    let interactions = indexed
        .into_iter()
        .zip(labels)
        .map(|((user, item), split)| LabelledInteraction { user, item, split })
        .collect();
    InteractionMatrix::from_parts(user_ids, item_ids, interactions)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::Stream;

    fn rating(u: &str, i: &str, v: f64) -> RawRating {
        RawRating {
            user: u.into(),
            item: i.into(),
            value: v,
        }
    }

    fn pairs_for(users: usize, per_user: usize) -> Vec<ImplicitPair> {
        let mut out = Vec::new();
        for u in 0..users {
            for i in 0..per_user {
                out.push(ImplicitPair {
                    user: format!("u{u}"),
                    item: format!("i{}", (u * 7 + i) % 50),
                });
            }
        }
        out
    }

    #[test]
    fn binarize_threshold_is_inclusive() {
        let r = [rating("a", "x", 4.0), rating("a", "y", 3.9), rating("b", "x", 5.0)];
        let kept = binarize(&r, 4.0);
        assert_eq!(kept.len(), 2);
        assert_eq!(kept[0].item, "x");
        assert_eq!(kept[1].user, "b");
    }

    #[test]
    fn binarize_implicit_data_with_threshold_one_is_identity() {
        let r = [rating("a", "x", 1.0), rating("b", "y", 1.0), rating("a", "z", 1.0)];
        let kept = binarize(&r, 1.0);
        let expected: Vec<_> = r
            .iter()
            .map(|x| ImplicitPair {
                user: x.user.clone(),
                item: x.item.clone(),
            })
            .collect();
        assert_eq!(kept, expected);
    }

    #[test]
    fn binarize_collapses_duplicates() {
        let r = [rating("a", "x", 5.0), rating("a", "x", 4.5), rating("a", "x", 1.0)];
        assert_eq!(binarize(&r, 4.0).len(), 1);
    }

    #[test]
    fn filter_boundary_and_idempotence() {
        let mut pairs = Vec::new();
        for i in 0..19 {
            pairs.push(ImplicitPair {
                user: "short".into(),
                item: format!("{i}"),
            });
        }
        for i in 0..20 {
            pairs.push(ImplicitPair {
                user: "enough".into(),
                item: format!("{i}"),
            });
        }
        let once = filter_min_interactions(pairs, 20).unwrap();
        assert!(once.iter().all(|p| p.user == "enough"));
        assert_eq!(once.len(), 20);
        let twice = filter_min_interactions(once.clone(), 20).unwrap();
        assert_eq!(once, twice);
    }

    #[test]
    fn filter_to_nothing_is_an_error() {
        let pairs = pairs_for(3, 5);
        assert!(matches!(filter_min_interactions(pairs, 20), Err(Error::Empty(_))));
    }

    #[test]
    fn split_counts_are_exact_for_100() {
        let pairs = pairs_for(10, 10);
        let m = split(&pairs, SplitRatios::default(), &mut SeededRng::new(1, Stream::Split)).unwrap();
        assert_eq!(m.interactions().len(), 100);
        assert_eq!(m.count(Split::Train), 80);
        assert_eq!(m.count(Split::Valid), 10);
        assert_eq!(m.count(Split::Test), 10);
    }

    #[test]
    fn split_is_a_deterministic_partition() {
        let pairs = pairs_for(30, 17);
        let a = split(&pairs, SplitRatios::default(), &mut SeededRng::new(5, Stream::Split)).unwrap();
        let b = split(&pairs, SplitRatios::default(), &mut SeededRng::new(5, Stream::Split)).unwrap();
        assert_eq!(a, b);
        let c = split(&pairs, SplitRatios::default(), &mut SeededRng::new(6, Stream::Split)).unwrap();
        assert_ne!(a.interactions(), c.interactions());

        let mut all = BTreeSet::new();
        for u in 0..a.n_users() {
            for s in Split::ALL {
                for &i in a.positives(u, s) {
                    assert!(all.insert((u, i)), "({u}, {i}) in two splits");
                }
            }
        }
        let original: BTreeSet<_> = pairs.iter().cloned().collect();
        assert_eq!(all.len(), original.len());
        for (u, i) in all {
            let p = ImplicitPair {
                user: a.user_ids()[u].clone(),
                item: a.item_ids()[i as usize].clone(),
            };
            assert!(original.contains(&p));
        }
    }

    #[test]
    fn split_rejects_bad_ratios() {
        let pairs = pairs_for(2, 5);
        let bad = SplitRatios {
            train: 0.8,
            valid: 0.1,
            test: 0.2,
        };
        assert!(split(&pairs, bad, &mut SeededRng::new(1, Stream::Split)).is_err());
    }

    #[test]
    fn reindexing_is_a_bijection() {
        let pairs = pairs_for(12, 9);
        let m = split(&pairs, SplitRatios::default(), &mut SeededRng::new(2, Stream::Split)).unwrap();
        for (u, id) in m.user_ids().iter().enumerate() {
            assert_eq!(m.user_index(id), Some(u));
        }
        for (i, id) in m.item_ids().iter().enumerate() {
            assert_eq!(m.item_index(id), Some(i));
        }
        assert_eq!(m.user_index("nobody"), None);
    }

    #[test]
    fn stats_examples() {
        let ml = DatasetStats::new(6027, 3062, 574_026);
        assert!((ml.sparsity * 100.0 - 96.89).abs() < 0.005);
        let yelp = DatasetStats::new(12_705, 9245, 318_314);
        assert!((yelp.sparsity * 100.0 - 99.73).abs() < 0.005);
        assert_eq!(DatasetStats::new(1, 1, 1).sparsity, 0.0);
    }

    #[test]
    fn dense_slabs_reflect_training_split() {
        let xs = vec![
            LabelledInteraction { user: 0, item: 1, split: Split::Train },
            LabelledInteraction { user: 1, item: 0, split: Split::Train },
            LabelledInteraction { user: 1, item: 2, split: Split::Test },
        ];
        let m = InteractionMatrix::from_indexed(2, 3, xs).unwrap();
        let rows = m.train_rows(&[1, 0]);
        assert_eq!(rows.row(0), &[1.0, 0.0, 0.0]);
        assert_eq!(rows.row(1), &[0.0, 1.0, 0.0]);
        let cols = m.train_columns(&[2, 1]);
        assert_eq!(cols.row(0), &[0.0, 0.0]);
        assert_eq!(cols.row(1), &[1.0, 0.0]);
        assert!(m.is_positive(1, 2, Split::Test));
        assert!(!m.is_positive(1, 2, Split::Train));
    }

    #[test]
    fn from_parts_rejects_duplicates_and_out_of_range() {
        let dup = vec![
            LabelledInteraction { user: 0, item: 0, split: Split::Train },
            LabelledInteraction { user: 0, item: 0, split: Split::Test },
        ];
        assert!(InteractionMatrix::from_indexed(1, 1, dup).is_err());
        let oob = vec![LabelledInteraction { user: 0, item: 3, split: Split::Train }];
        assert!(InteractionMatrix::from_indexed(1, 2, oob).is_err());
    }
}
