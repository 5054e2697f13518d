//! The four pipeline stages. Each takes a resolved [`RunConfig`], reads its
//! inputs from files, writes its outputs into `config.out`, and returns a
//! summary for the caller to print.

use std::path::{Path, PathBuf};

use jova_core::data::{binarize, filter_min_interactions, split, DatasetStats, InteractionMatrix, Split};
use jova_core::eval::{evaluate as evaluate_scores, EvalOptions, EvalReport, Scorer};
use jova_core::metrics::top_k;
use jova_core::model::JovaModel;
use jova_core::train::{train as train_model, EpochRecord};
use jova_core::{SeededRng, Stream};

use crate::config::RunConfig;
use crate::dataset::{read_dataset, write_dataset, Provenance};
use crate::error::{Error, Result};
use crate::ingest::ingest;
use crate::model_file::{read_model, write_model};
use crate::report::{
    per_user_tsv, recommendations_tsv, report_table, write_json, write_text, Recommendation, ReportFile, TrainLog,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    Prepare,
    Train,
    Evaluate,
    Recommend,
}

impl Stage {
    fn name(self) -> &'static str {
        match self {
            Stage::Prepare => "prepare",
            Stage::Train => "train",
            Stage::Evaluate => "evaluate",
            Stage::Recommend => "recommend",
        }
    }
}

/// Validates the config, creates the output directory and writes
/// `<stage>.config.toml` into it.
fn start(config: &RunConfig, stage: Stage) -> Result<()> {
    config.validate()?;
    std::fs::create_dir_all(&config.out).map_err(|e| Error::io(&config.out, e))?;
    let echo = config.out.join(format!("{}.config.toml", stage.name()));
    write_text(&echo, &config.to_toml()?)
}

#[derive(Debug, Clone, PartialEq)]
pub struct PrepareSummary {
    pub dataset: PathBuf,
    pub stats: DatasetStats,
    pub lines: usize,
    pub malformed_lines: Vec<u64>,
    pub ratings: usize,
    pub positives: usize,
    pub split_counts: [usize; 3],
}

pub fn prepare(config: &RunConfig) -> Result<PrepareSummary> {
    start(config, Stage::Prepare)?;
    let input = config
        .data
        .input
        .as_deref()
        .ok_or_else(|| Error::Config("data.input is not set".into()))?;
    let raw = ingest(input, config.data.format, &config.data.schema, config.data.max_malformed_fraction)?;
    let positives = binarize(&raw.ratings, config.data.threshold);
    let positive_count = positives.len();
    let kept = filter_min_interactions(positives, config.data.min_user_interactions)?;
    let matrix = split(&kept, config.data.ratios, &mut SeededRng::new(config.seed, Stream::Split))?;
    let provenance = Provenance {
        source: input.display().to_string(),
        threshold: config.data.threshold,
        min_user_interactions: config.data.min_user_interactions,
        ratios: config.data.ratios,
        seed: config.seed,
    };
    let dataset = config.dataset_path();
    write_dataset(&dataset, &matrix, &provenance)?;
    Ok(PrepareSummary {
        dataset,
        stats: matrix.stats(),
        lines: raw.total_lines,
        malformed_lines: raw.malformed_lines,
        ratings: raw.ratings.len(),
        positives: positive_count,
        split_counts: Split::ALL.map(|s| matrix.count(s)),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainSummary {
    pub model: PathBuf,
    pub log: PathBuf,
    pub epochs: usize,
    pub best_epoch: usize,
    pub best_valid_ndcg: Option<f64>,
}

pub fn train(config: &RunConfig, mut on_epoch: impl FnMut(&EpochRecord)) -> Result<TrainSummary> {
    start(config, Stage::Train)?;
    let (matrix, _) = read_dataset(&config.dataset_path())?;
    let model = JovaModel::new(
        matrix.n_users(),
        matrix.n_items(),
        &config.model.shape(),
        config.model.hyperparameters(),
        config.model.mode,
        config.seed,
    )?;
    let log_path = config.out.join("train_log.jsonl");
    let mut log = TrainLog::create(&log_path)?;
    let mut log_error = None;
    let outcome = train_model(model, &matrix, &config.train, |record| {
        if log_error.is_none() {
            log_error = log.append(record).err();
        }
        on_epoch(record);
    })?;
    if let Some(e) = log_error {
        return Err(e);
    }
    let model_path = config.model_path();
    write_model(&model_path, &outcome.model)?;
    Ok(TrainSummary {
        model: model_path,
        log: log_path,
        epochs: outcome.log.len(),
        best_epoch: outcome.best_epoch,
        best_valid_ndcg: outcome.best_valid_ndcg,
    })
}

fn load_pair(config: &RunConfig) -> Result<(InteractionMatrix, JovaModel)> {
    let dataset = config.dataset_path();
    let (matrix, _) = read_dataset(&dataset)?;
    let model = read_model(&config.model_path())?;
    model.check_dimensions(&matrix).map_err(|e| {
        Error::format(
            config.model_path(),
            format!("does not fit dataset {}: {e}", dataset.display()),
        )
    })?;
    Ok((matrix, model))
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvaluateSummary {
    pub report: EvalReport,
    pub table: String,
    pub files: Vec<PathBuf>,
}

pub fn evaluate(config: &RunConfig) -> Result<EvaluateSummary> {
    start(config, Stage::Evaluate)?;
    let (matrix, model) = load_pair(config)?;
    let opts = EvalOptions {
        ks: config.eval.ks.clone(),
        split: config.eval.split,
        idcg: config.eval.idcg,
        cold_start_limits: config.eval.cold_start.iter().map(|b| b.0).collect(),
        keep_per_user: config.eval.per_user,
        ..EvalOptions::default()
    };
    let report = evaluate_scores(&model.predictor(&matrix)?, &matrix, &opts)?;
    let table = report_table(&report);

    let json = config.out.join("report.json");
    let text = config.out.join("report.txt");
    let mut files = vec![json.clone(), text.clone()];
    if config.eval.per_user {
        let tsv = config.out.join("per_user.tsv");
        write_text(&tsv, &per_user_tsv(&report, &matrix))?;
        files.push(tsv);
    }
    let mut stored = report.clone();
    stored.per_user.clear();
    write_json(
        &json,
        &ReportFile {
            config: config.clone(),
            seed: config.seed,
            dataset: config.dataset_path().display().to_string(),
            model: config.model_path().display().to_string(),
            report: stored,
        },
    )?;
    write_text(&text, &table)?;
    Ok(EvaluateSummary { report, table, files })
}

/// Top-`k` unseen items (neither training nor validation positives) for
/// each user id, best first.
pub fn recommend(config: &RunConfig, users: &[String], k: usize, output: Option<&Path>) -> Result<Vec<Recommendation>> {
    start(config, Stage::Recommend)?;
    if k == 0 {
        return Err(Error::Config("k must be at least 1".into()));
    }
    let (matrix, model) = load_pair(config)?;
    let indices = users
        .iter()
        .map(|id| matrix.user_index(id).ok_or_else(|| Error::UnknownUser(id.clone())))
        .collect::<Result<Vec<usize>>>()?;
    let scores = model.predictor(&matrix)?.score_users(&indices)?;
    let mut recs = Vec::new();
    for (row, (&u, id)) in indices.iter().zip(users).enumerate() {
        let train = matrix.positives(u, Split::Train);
        let valid = matrix.positives(u, Split::Valid);
        let ranked = top_k(scores.row(row), k, |i| {
            let i = i as u32;
            train.binary_search(&i).is_ok() || valid.binary_search(&i).is_ok()
        });
        for (rank, (&item, &score)) in ranked.items.iter().zip(&ranked.scores).enumerate() {
            recs.push(Recommendation {
                user: id.clone(),
                rank: rank + 1,
                item: matrix.item_ids()[item].clone(),
                score,
            });
        }
    }
    if let Some(path) = output {
        write_text(path, &recommendations_tsv(&recs))?;
    }
    Ok(recs)
}
