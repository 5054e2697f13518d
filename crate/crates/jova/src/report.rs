//! Output artifacts: evaluation reports, training logs, recommendation lists.

use std::fmt::Write as _;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use jova_core::data::{DatasetStats, InteractionMatrix};
use jova_core::eval::EvalReport;
use jova_core::train::EpochRecord;
use serde::{Deserialize, Serialize};

use crate::config::{BucketLimit, RunConfig};
use crate::error::{Error, Result};

/// `report.json`: the report with everything needed to reproduce it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportFile {
    pub config: RunConfig,
    pub seed: u64,
    pub dataset: String,
    pub model: String,
    pub report: EvalReport,
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| Error::format(path, e.to_string()))?;
    text.push('\n');
    write_text(path, &text)
}

pub fn stats_table(stats: &DatasetStats) -> String {
    format!(
        "{:>10} {:>10} {:>14} {:>10}\n{:>10} {:>10} {:>14} {:>9.2}%\n",
        "users",
        "items",
        "interactions",
        "sparsity",
        stats.users,
        stats.items,
        stats.interactions,
        stats.sparsity * 100.0
    )
}

/// Human-readable averages and cold-start curves.
pub fn report_table(report: &EvalReport) -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        "split {:?}, {} users evaluated, {} skipped, idcg {:?}",
        report.split, report.evaluated_users, report.skipped_users, report.idcg
    );
    let _ = writeln!(s, "{:>5} {:>10} {:>10} {:>10} {:>10}", "k", "P@k", "R@k", "F1@k", "NDCG@k");
    for m in &report.averages {
        let _ = writeln!(
            s,
            "{:>5} {:>10.4} {:>10.4} {:>10.4} {:>10.4}",
            m.k, m.precision, m.recall, m.f1, m.ndcg
        );
    }
    if !report.cold_start.is_empty() {
        let _ = writeln!(s, "\ncold start: users with at most L training positives");
        let _ = writeln!(
            s,
            "{:>5} {:>6} {:>5} {:>10} {:>10} {:>10} {:>10}",
            "L", "users", "k", "P@k", "R@k", "F1@k", "NDCG@k"
        );
        for b in &report.cold_start {
            for m in &b.metrics {
                let _ = writeln!(
                    s,
                    "{:>5} {:>6} {:>5} {:>10.4} {:>10.4} {:>10.4} {:>10.4}",
                    BucketLimit(b.max_train_positives).to_string(),
                    b.users,
                    m.k,
                    m.precision,
                    m.recall,
                    m.f1,
                    m.ndcg
                );
            }
        }
    }
    s
}

/// One row per (user, k), with original user ids.
pub fn per_user_tsv(report: &EvalReport, matrix: &InteractionMatrix) -> String {
    let mut s = String::from("user\ttrain_positives\teval_positives\tk\tprecision\trecall\tf1\tndcg\n");
    for u in &report.per_user {
        for m in &u.metrics {
            let _ = writeln!(
                s,
                "{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}",
                matrix.user_ids()[u.user],
                u.train_positives,
                u.eval_positives,
                m.k,
                m.precision,
                m.recall,
                m.f1,
                m.ndcg
            );
        }
    }
    s
}

/// Appends epoch records to a JSON-lines log.
pub struct TrainLog {
    path: std::path::PathBuf,
    out: BufWriter<File>,
}

impl TrainLog {
    pub fn create(path: &Path) -> Result<Self> {
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        Ok(Self {
            path: path.to_path_buf(),
            out: BufWriter::new(file),
        })
    }

    pub fn append(&mut self, record: &EpochRecord) -> Result<()> {
        let line = serde_json::to_string(record).map_err(|e| Error::format(&self.path, e.to_string()))?;
        writeln!(self.out, "{line}")
            .and_then(|_| self.out.flush())
            .map_err(|e| Error::io(&self.path, e))
    }
}

pub fn read_train_log(path: &Path) -> Result<Vec<EpochRecord>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    text.lines()
        .enumerate()
        .map(|(n, l)| serde_json::from_str(l).map_err(|e| Error::format(path, format!("line {}: {e}", n + 1))))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Recommendation {
    pub user: String,
    pub rank: usize,
    pub item: String,
    pub score: f64,
}

pub fn recommendations_tsv(recs: &[Recommendation]) -> String {
    let mut s = String::from("user\trank\titem\tscore\n");
    for r in recs {
        let _ = writeln!(s, "{}\t{}\t{}\t{}", r.user, r.rank, r.item, r.score);
    }
    s
}
