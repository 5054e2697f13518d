//! Held-out evaluation of any scoring model.
//!
//! For each user with at least one positive in the evaluated split, known
//! interactions are excluded (training positives, plus validation positives
//! when evaluating on test), the remaining items are ranked, and P/R/F1/NDCG
//! are computed at every requested cutoff. Per-user values are averaged over
//! evaluated users, and the same averages are repeated over cold-start
//! buckets of users with at most `L` training positives.

use alloc::format;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::data::{InteractionMatrix, Split};
use crate::error::{Error, Result};
use crate::matrix::DenseMatrix;
use crate::metrics::{f1_at_k, hit_count, ndcg_at_k, top_k, IdcgMode};

/// Produces a score for every item, for a batch of users.
pub trait Scorer {
    fn n_users(&self) -> usize;
    fn n_items(&self) -> usize;
    /// `users.len() × n_items` scores; higher means more likely.
    fn score_users(&self, users: &[usize]) -> Result<DenseMatrix>;
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalOptions {
    pub ks: Vec<usize>,
    pub split: Split,
    pub idcg: IdcgMode,
    /// Bucket limits on training positives; `None` is unbounded.
    pub cold_start_limits: Vec<Option<usize>>,
    pub keep_per_user: bool,
    /// Users scored per call to the scorer.
    pub batch_users: usize,
}

impl Default for EvalOptions {
    fn default() -> Self {
        Self {
            ks: alloc::vec![1, 5, 10],
            split: Split::Test,
            idcg: IdcgMode::Full,
            cold_start_limits: alloc::vec![Some(10), Some(20), Some(40), Some(80), Some(160), None],
            keep_per_user: false,
            batch_users: 512,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricSet {
    pub k: usize,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub ndcg: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UserReport {
    pub user: usize,
    pub train_positives: usize,
    pub eval_positives: usize,
    pub short_list: bool,
    pub metrics: Vec<MetricSet>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ColdStartBucket {
    pub max_train_positives: Option<usize>,
    pub users: usize,
    pub metrics: Vec<MetricSet>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub split: Split,
    pub ks: Vec<usize>,
    pub idcg: IdcgMode,
    pub evaluated_users: usize,
    /// Users with no positives in the evaluated split.
    pub skipped_users: usize,
    pub averages: Vec<MetricSet>,
    pub cold_start: Vec<ColdStartBucket>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub per_user: Vec<UserReport>,
}

impl EvalReport {
    pub fn at(&self, k: usize) -> Option<&MetricSet> {
        self.averages.iter().find(|m| m.k == k)
    }
}

fn average(ks: &[usize], users: &[&UserReport]) -> Vec<MetricSet> {
    let n = users.len() as f64;
    ks.iter()
        .enumerate()
        .map(|(slot, &k)| {
            let mut m = MetricSet {
                k,
                precision: 0.0,
                recall: 0.0,
                f1: 0.0,
                ndcg: 0.0,
            };
            if users.is_empty() {
                return m;
            }
            for u in users {
                let x = &u.metrics[slot];
                m.precision += x.precision;
                m.recall += x.recall;
                m.f1 += x.f1;
                m.ndcg += x.ndcg;
            }
            m.precision /= n;
            m.recall /= n;
            m.f1 /= n;
            m.ndcg /= n;
            m
        })
        .collect()
}

/// Metrics for one user's ranked list against their relevant items.
pub fn user_metrics(ranked: &[usize], relevant: &[u32], ks: &[usize], idcg: IdcgMode) -> Vec<MetricSet> {
    ks.iter()
        .map(|&k| {
            let hits = hit_count(ranked, relevant, k) as f64;
            let precision = hits / k as f64;
            let recall = hits / relevant.len() as f64;
            MetricSet {
                k,
                precision,
                recall,
                f1: f1_at_k(precision, recall),
                ndcg: ndcg_at_k(ranked, relevant, k, idcg),
            }
        })
        .collect()
}

pub fn evaluate(scorer: &dyn Scorer, matrix: &InteractionMatrix, opts: &EvalOptions) -> Result<EvalReport> {
    if scorer.n_users() != matrix.n_users() || scorer.n_items() != matrix.n_items() {
        return Err(Error::invalid(format!(
            "model is {}x{} but the dataset is {}x{}",
            scorer.n_users(),
            scorer.n_items(),
            matrix.n_users(),
            matrix.n_items()
        )));
    }
    if opts.split == Split::Train {
        return Err(Error::invalid("evaluation split must be valid or test"));
    }
    if opts.ks.is_empty() || opts.ks.contains(&0) {
        return Err(Error::invalid(format!("cutoffs must be positive, got {:?}", opts.ks)));
    }
    let max_k = *opts.ks.iter().max().expect("non-empty");

    let evaluable: Vec<usize> = (0..matrix.n_users())
        .filter(|&u| !matrix.positives(u, opts.split).is_empty())
        .collect();
    if evaluable.is_empty() {
        return Err(Error::NoEvaluableUsers);
    }

    let mut reports = Vec::with_capacity(evaluable.len());
    for chunk in evaluable.chunks(opts.batch_users.max(1)) {
        let scores = scorer.score_users(chunk)?;
        for (row, &u) in chunk.iter().enumerate() {
            let train = matrix.positives(u, Split::Train);
            let valid = matrix.positives(u, Split::Valid);
            let exclude_valid = opts.split == Split::Test;
            let ranked = top_k(scores.row(row), max_k, |i| {
                let i = i as u32;
                train.binary_search(&i).is_ok() || (exclude_valid && valid.binary_search(&i).is_ok())
            });
            let relevant = matrix.positives(u, opts.split);
            reports.push(UserReport {
                user: u,
                train_positives: train.len(),
                eval_positives: relevant.len(),
                short_list: ranked.short,
                metrics: user_metrics(&ranked.items, relevant, &opts.ks, opts.idcg),
            });
        }
    }

    let all: Vec<&UserReport> = reports.iter().collect();
    let averages = average(&opts.ks, &all);
    let cold_start = opts
        .cold_start_limits
        .iter()
        .map(|&limit| {
            let members: Vec<&UserReport> = reports
                .iter()
                .filter(|r| limit.is_none_or(|l| r.train_positives <= l))
                .collect();
            ColdStartBucket {
                max_train_positives: limit,
                users: members.len(),
                metrics: average(&opts.ks, &members),
            }
        })
        .collect();

    Ok(EvalReport {
        split: opts.split,
        ks: opts.ks.clone(),
        idcg: opts.idcg,
        evaluated_users: reports.len(),
        skipped_users: matrix.n_users() - reports.len(),
        averages,
        cold_start,
        per_user: if opts.keep_per_user { reports } else { Vec::new() },
    })
}

/// Scores items by training popularity, identically for every user.
#[derive(Debug, Clone)]
pub struct PopularityScorer {
    n_users: usize,
    counts: Vec<f64>,
}

impl PopularityScorer {
    pub fn new(matrix: &InteractionMatrix) -> Self {
        Self {
            n_users: matrix.n_users(),
            counts: (0..matrix.n_items())
                .map(|i| matrix.train_users_of(i).len() as f64)
                .collect(),
        }
    }
}

impl Scorer for PopularityScorer {
    fn n_users(&self) -> usize {
        self.n_users
    }

    fn n_items(&self) -> usize {
        self.counts.len()
    }

    fn score_users(&self, users: &[usize]) -> Result<DenseMatrix> {
        let mut out = DenseMatrix::zeros(users.len(), self.counts.len());
        for r in 0..users.len() {
            out.row_mut(r).copy_from_slice(&self.counts);
        }
        Ok(out)
    }
}
