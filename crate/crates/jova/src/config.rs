//! Run configuration: TOML file, then `key.path=value` overrides, then
//! explicit command-line flags.

use std::fmt;
use std::path::{Path, PathBuf};

use jova_core::data::{Split, SplitRatios};
use jova_core::metrics::IdcgMode;
use jova_core::model::{Hyperparameters, Mode, ModelShape};
use jova_core::train::TrainConfig;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::ingest::{Format, Schema};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    /// Directory every command writes into.
    pub out: PathBuf,
    pub data: DataConfig,
    pub model: ModelConfig,
    pub train: TrainConfig,
    pub eval: EvalConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            out: PathBuf::from("out"),
            data: DataConfig::default(),
            model: ModelConfig::default(),
            train: TrainConfig::default(),
            eval: EvalConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DataConfig {
    /// Raw rating file read by `prepare`.
    pub input: Option<PathBuf>,
    pub format: Format,
    pub schema: Schema,
    /// Ratings at or above this value are positives.
    pub threshold: f64,
    pub min_user_interactions: usize,
    pub ratios: SplitRatios,
    /// Largest tolerated fraction of malformed input lines.
    pub max_malformed_fraction: f64,
    /// Prepared dataset; defaults to `<out>/dataset.json`.
    pub dataset: Option<PathBuf>,
}

impl Default for DataConfig {
    fn default() -> Self {
        Self {
            input: None,
            format: Format::MovielensDat,
            schema: Schema::default(),
            threshold: 4.0,
            min_user_interactions: 20,
            ratios: SplitRatios::default(),
            max_malformed_fraction: 0.01,
            dataset: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelConfig {
    pub mode: Mode,
    pub hidden: Vec<usize>,
    pub latent_dim: usize,
    pub alpha: f64,
    pub beta: f64,
    pub lambda: f64,
    /// Model file; defaults to `<out>/model.jova`.
    pub path: Option<PathBuf>,
}

impl Default for ModelConfig {
    fn default() -> Self {
        let shape = ModelShape::default();
        let hyper = Hyperparameters::default();
        Self {
            mode: Mode::JovaHinge,
            hidden: shape.hidden,
            latent_dim: shape.latent_dim,
            alpha: hyper.alpha,
            beta: hyper.beta,
            lambda: hyper.lambda,
            path: None,
        }
    }
}

impl ModelConfig {
    pub fn shape(&self) -> ModelShape {
        ModelShape {
            hidden: self.hidden.clone(),
            latent_dim: self.latent_dim,
        }
    }

    pub fn hyperparameters(&self) -> Hyperparameters {
        Hyperparameters {
            alpha: self.alpha,
            beta: self.beta,
            lambda: self.lambda,
        }
    }
}

/// Upper bound on training positives for a cold-start bucket; written as an
/// integer or `"inf"`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BucketLimit(pub Option<usize>);

impl Serialize for BucketLimit {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self.0 {
            Some(l) => s.serialize_u64(l as u64),
            None => s.serialize_str("inf"),
        }
    }
}

impl<'de> Deserialize<'de> for BucketLimit {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Count(u64),
            Word(String),
        }
        match Raw::deserialize(d)? {
            Raw::Count(c) => Ok(BucketLimit(Some(c as usize))),
            Raw::Word(w) if w == "inf" => Ok(BucketLimit(None)),
            Raw::Word(w) => Err(serde::de::Error::custom(format!("expected a count or \"inf\", got {w:?}"))),
        }
    }
}

impl fmt::Display for BucketLimit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.0 {
            Some(l) => write!(f, "{l}"),
            None => f.write_str("inf"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalConfig {
    pub ks: Vec<usize>,
    pub split: Split,
    pub idcg: IdcgMode,
    pub cold_start: Vec<BucketLimit>,
    /// Also write `per_user.tsv`.
    pub per_user: bool,
    /// List length for `recommend`.
    pub recommend_k: usize,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self {
            ks: vec![1, 5, 10],
            split: Split::Test,
            idcg: IdcgMode::Full,
            cold_start: [Some(10), Some(20), Some(40), Some(80), Some(160), None]
                .into_iter()
                .map(BucketLimit)
                .collect(),
            per_user: false,
            recommend_k: 10,
        }
    }
}

impl RunConfig {
    /// Defaults overlaid with the file at `path`, if any.
    pub fn load(path: Option<&Path>) -> Result<Self> {
        match path {
            None => Ok(Self::default()),
            Some(p) => {
                let text = std::fs::read_to_string(p).map_err(|e| Error::io(p, e))?;
                Self::from_toml(&text).map_err(|e| Error::Config(format!("{}: {e}", p.display())))
            }
        }
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.message().to_string()))
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    /// Applies `key.path=value`, where `value` is read as a TOML value and
    /// falls back to a bare string.
    pub fn apply_override(&mut self, assignment: &str) -> Result<()> {
        let (key, raw) = assignment
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("override {assignment:?} is not key=value")))?;
        let key = key.trim();
        let raw = raw.trim();
        let value = toml::from_str::<toml::Table>(&format!("v = {raw}"))
            .ok()
            .and_then(|mut t| t.remove("v"))
            .unwrap_or_else(|| toml::Value::String(raw.to_string()));

        let mut tree = toml::Value::try_from(&*self).map_err(|e| Error::Config(e.to_string()))?;
        let mut node = &mut tree;
        let parts: Vec<&str> = key.split('.').collect();
        for (depth, part) in parts.iter().enumerate() {
            let table = node
                .as_table_mut()
                .ok_or_else(|| Error::Config(format!("{key:?}: {:?} is not a section", parts[..depth].join("."))))?;
            if depth + 1 == parts.len() {
                table.insert(part.to_string(), value);
                break;
            }
            node = table
                .entry(part.to_string())
                .or_insert_with(|| toml::Value::Table(toml::Table::new()));
        }
        *self = tree
            .try_into()
            .map_err(|e: toml::de::Error| Error::Config(format!("override {key:?}: {}", e.message())))?;
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        self.model.hyperparameters().validate()?;
        self.train.validate()?;
        if self.model.latent_dim == 0 || self.model.hidden.contains(&0) {
            return Err(Error::Config("layer widths must be positive".into()));
        }
        if self.eval.ks.is_empty() || self.eval.ks.contains(&0) {
            return Err(Error::Config(format!("eval.ks must be positive, got {:?}", self.eval.ks)));
        }
        if self.eval.recommend_k == 0 {
            return Err(Error::Config("eval.recommend_k must be positive".into()));
        }
        if !self.data.threshold.is_finite() {
            return Err(Error::Config("data.threshold must be finite".into()));
        }
        if !(0.0..=1.0).contains(&self.data.max_malformed_fraction) {
            return Err(Error::Config("data.max_malformed_fraction must be in [0, 1]".into()));
        }
        Ok(())
    }

    pub fn dataset_path(&self) -> PathBuf {
        self.data.dataset.clone().unwrap_or_else(|| self.out.join("dataset.json"))
    }

    pub fn model_path(&self) -> PathBuf {
        self.model.path.clone().unwrap_or_else(|| self.out.join("model.jova"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_round_trip() {
        let config = RunConfig::default();
        let text = config.to_toml().unwrap();
        assert_eq!(RunConfig::from_toml(&text).unwrap(), config);
        assert!(text.contains("\"inf\""));
    }

    #[test]
    fn edited_config_round_trips() {
        let mut config = RunConfig::default();
        config.data.input = Some(PathBuf::from("ratings.csv"));
        config.data.format = Format::Csv;
        config.model.mode = Mode::UserVaeOnly;
        config.train.early_stopping = false;
        config.eval.idcg = IdcgMode::Truncated;
        let text = config.to_toml().unwrap();
        assert_eq!(RunConfig::from_toml(&text).unwrap(), config);
    }

    #[test]
    fn partial_files_keep_defaults() {
        let config = RunConfig::from_toml("seed = 7\n[train]\nmax_epochs = 3\n").unwrap();
        assert_eq!(config.seed, 7);
        assert_eq!(config.train.max_epochs, 3);
        assert_eq!(config.train.learning_rate, 0.003);
        assert_eq!(config.model.hidden, [320, 320]);
        assert_eq!(config.model.latent_dim, 80);
        assert_eq!(config.model.lambda, 0.15);
        assert_eq!(config.eval.ks, [1, 5, 10]);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(RunConfig::from_toml("[model]\nlatent = 3\n").is_err());
    }

    #[test]
    fn overrides_reach_nested_fields() {
        let mut config = RunConfig::default();
        config.apply_override("train.max_epochs=5").unwrap();
        config.apply_override("model.mode = jova").unwrap();
        config.apply_override("model.hidden=[16, 8]").unwrap();
        config.apply_override("data.input=raw/ratings.dat").unwrap();
        config.apply_override("eval.cold_start=[5, \"inf\"]").unwrap();
        assert_eq!(config.train.max_epochs, 5);
        assert_eq!(config.model.mode, Mode::Jova);
        assert_eq!(config.model.hidden, [16, 8]);
        assert_eq!(config.data.input, Some(PathBuf::from("raw/ratings.dat")));
        assert_eq!(config.eval.cold_start, [BucketLimit(Some(5)), BucketLimit(None)]);
        assert!(config.apply_override("train.max_epochs=many").is_err());
        assert!(config.apply_override("no_equals").is_err());
        assert!(config.apply_override("train.nonsense=1").is_err());
    }

    #[test]
    fn validation_catches_bad_values() {
        let mut config = RunConfig::default();
        config.model.beta = -1.0;
        assert!(config.validate().is_err());
        let mut config = RunConfig::default();
        config.eval.ks = vec![0];
        assert!(config.validate().is_err());
        assert!(RunConfig::default().validate().is_ok());
    }
}
