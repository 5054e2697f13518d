//! Model files.
//!
//! ```text
//! JOVA-MODEL 1\n
//! {json header}\n
//! parameters as little-endian f64, user VAE then item VAE
//! ```
//!
//! The header records mode, seed, hyperparameters and every layer's shape
//! and activation, so the networks can be rebuilt before the parameters are
//! read back.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use jova_core::model::{Hyperparameters, JovaModel, Mode};
use jova_core::nn::gradcheck::Parameters;
use jova_core::nn::{Activation, MlpNetwork};
use jova_core::vae::VaeModel;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const MAGIC: &str = "JOVA-MODEL 1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct LayerSpec {
    input: usize,
    output: usize,
    activation: Activation,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct VaeSpec {
    encoder: Vec<LayerSpec>,
    decoder: Vec<LayerSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct Header {
    mode: Mode,
    seed: u64,
    hyperparameters: Hyperparameters,
    n_users: usize,
    n_items: usize,
    user_vae: VaeSpec,
    item_vae: VaeSpec,
    parameter_count: usize,
}

fn layer_specs(net: &MlpNetwork) -> Vec<LayerSpec> {
    net.layers()
        .iter()
        .map(|l| LayerSpec {
            input: l.input_width(),
            output: l.output_width(),
            activation: l.activation,
        })
        .collect()
}

fn vae_spec(vae: &VaeModel) -> VaeSpec {
    VaeSpec {
        encoder: layer_specs(vae.encoder()),
        decoder: layer_specs(vae.decoder()),
    }
}

fn network(path: &Path, specs: &[LayerSpec]) -> Result<MlpNetwork> {
    let first = specs.first().ok_or_else(|| Error::format(path, "network without layers"))?;
    let mut widths = vec![first.input];
    for (prev, next) in specs.iter().zip(&specs[1..]) {
        if prev.output != next.input {
            return Err(Error::format(path, "layer widths do not chain"));
        }
    }
    widths.extend(specs.iter().map(|s| s.output));
    let activations: Vec<Activation> = specs.iter().map(|s| s.activation).collect();
    Ok(MlpNetwork::zeros(&widths, &activations)?)
}

fn vae(path: &Path, spec: &VaeSpec) -> Result<VaeModel> {
    Ok(VaeModel::from_networks(network(path, &spec.encoder)?, network(path, &spec.decoder)?)?)
}

pub fn write_model(path: &Path, model: &JovaModel) -> Result<()> {
    let parameters = model.parameters();
    let header = Header {
        mode: model.mode(),
        seed: model.seed(),
        hyperparameters: *model.hyperparameters(),
        n_users: model.n_users(),
        n_items: model.n_items(),
        user_vae: vae_spec(model.user_vae()),
        item_vae: vae_spec(model.item_vae()),
        parameter_count: parameters.len(),
    };
    let json = serde_json::to_string(&header).map_err(|e| Error::format(path, e.to_string()))?;
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = BufWriter::new(file);
    let write = |out: &mut BufWriter<File>| -> std::io::Result<()> {
        writeln!(out, "{MAGIC}")?;
        writeln!(out, "{json}")?;
        for p in &parameters {
            out.write_all(&p.to_le_bytes())?;
        }
        out.flush()
    };
    write(&mut out).map_err(|e| Error::io(path, e))
}

pub fn read_model(path: &Path) -> Result<JovaModel> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = BufReader::new(file);
    let mut line = String::new();
    let next_line = |reader: &mut BufReader<File>, line: &mut String| -> Result<()> {
        line.clear();
        reader.read_line(line).map_err(|e| Error::io(path, e))?;
        Ok(())
    };
    next_line(&mut reader, &mut line)?;
    if line.trim_end() != MAGIC {
        return Err(Error::format(path, format!("not a model file (expected {MAGIC:?})")));
    }
    next_line(&mut reader, &mut line)?;
    let header: Header = serde_json::from_str(&line).map_err(|e| Error::format(path, format!("bad header: {e}")))?;

    let user_vae = vae(path, &header.user_vae)?;
    let item_vae = vae(path, &header.item_vae)?;
    if user_vae.input_dim() != header.n_items || item_vae.input_dim() != header.n_users {
        return Err(Error::format(path, "VAE widths disagree with the stated dimensions"));
    }
    let mut model = JovaModel::from_parts(user_vae, item_vae, header.hyperparameters, header.mode, header.seed)?;
    let expected = model.parameters().len();
    if expected != header.parameter_count {
        return Err(Error::format(
            path,
            format!("header declares {} parameters, layers need {expected}", header.parameter_count),
        ));
    }
    let mut bytes = Vec::new();
    reader.read_to_end(&mut bytes).map_err(|e| Error::io(path, e))?;
    if bytes.len() != expected * 8 {
        return Err(Error::format(
            path,
            format!("expected {} parameter bytes, found {}", expected * 8, bytes.len()),
        ));
    }
    let values: Vec<f64> = bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")))
        .collect();
    model.set_parameters(&values)?;
    Ok(model)
}
