//! The prepared dataset file: versioned JSON holding the id maps and the
//! split-labelled interactions in dense indices.

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;

use jova_core::data::{DatasetStats, InteractionMatrix, LabelledInteraction, Split, SplitRatios};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const FORMAT: &str = "jova-dataset";
pub const VERSION: u32 = 1;

/// How the dataset was produced.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub source: String,
    pub threshold: f64,
    pub min_user_interactions: usize,
    pub ratios: SplitRatios,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct DatasetFile {
    format: String,
    version: u32,
    provenance: Provenance,
    stats: DatasetStats,
    user_ids: Vec<String>,
    item_ids: Vec<String>,
    /// `[user, item]` pairs per split.
    train: Vec<[u32; 2]>,
    valid: Vec<[u32; 2]>,
    test: Vec<[u32; 2]>,
}

pub fn write_dataset(path: &Path, matrix: &InteractionMatrix, provenance: &Provenance) -> Result<()> {
    let pairs = |split: Split| {
        matrix
            .interactions()
            .iter()
            .filter(|x| x.split == split)
            .map(|x| [x.user, x.item])
            .collect()
    };
    let file = DatasetFile {
        format: FORMAT.into(),
        version: VERSION,
        provenance: provenance.clone(),
        stats: matrix.stats(),
        user_ids: matrix.user_ids().to_vec(),
        item_ids: matrix.item_ids().to_vec(),
        train: pairs(Split::Train),
        valid: pairs(Split::Valid),
        test: pairs(Split::Test),
    };
    let out = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = BufWriter::new(out);
    serde_json::to_writer(&mut out, &file).map_err(|e| Error::format(path, e.to_string()))?;
    out.write_all(b"\n").and_then(|_| out.flush()).map_err(|e| Error::io(path, e))
}

pub fn read_dataset(path: &Path) -> Result<(InteractionMatrix, Provenance)> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let data: DatasetFile =
        serde_json::from_reader(BufReader::new(file)).map_err(|e| Error::format(path, format!("not a dataset file: {e}")))?;
    if data.format != FORMAT || data.version != VERSION {
        return Err(Error::format(
            path,
            format!("expected {FORMAT} version {VERSION}, found {} version {}", data.format, data.version),
        ));
    }
    let labelled = |pairs: Vec<[u32; 2]>, split| {
        pairs
            .into_iter()
            .map(move |[user, item]| LabelledInteraction { user, item, split })
    };
    let interactions = labelled(data.train, Split::Train)
        .chain(labelled(data.valid, Split::Valid))
        .chain(labelled(data.test, Split::Test))
        .collect();
    let matrix = InteractionMatrix::from_parts(data.user_ids, data.item_ids, interactions)
        .map_err(|e| Error::format(path, e.to_string()))?;
    if matrix.stats() != data.stats {
        return Err(Error::format(path, "stored statistics disagree with the interactions"));
    }
    Ok((matrix, data.provenance))
}
