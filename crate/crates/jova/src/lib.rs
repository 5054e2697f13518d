//! Files, ingestion and the batch command-line driver around [`jova_core`].
//!
//! The four stages communicate only through files in an output directory:
//!
//! * `prepare` reads a raw rating file and writes `dataset.json`,
//! * `train` writes `model.jova` and `train_log.jsonl`,
//! * `evaluate` writes `report.json`, `report.txt` and optionally
//!   `per_user.tsv`,
//! * `recommend` prints (or writes) ranked lists for chosen users.
//!
//! Each stage also echoes its fully resolved configuration as
//! `<stage>.config.toml`.

pub mod commands;
pub mod config;
pub mod dataset;
pub mod error;
pub mod ingest;
pub mod model_file;
pub mod report;

pub use error::{Error, Result};
