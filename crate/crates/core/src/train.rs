//! The training loop: Adam over block mini-batches, with early stopping on
//! validation NDCG@10.

use alloc::format;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::batch::{make_blocks, BlockBatch, EpochNegatives};
use crate::data::{InteractionMatrix, Split};
use crate::error::{Error, Result};
use crate::eval::{evaluate, EvalOptions};
use crate::loss::block_loss;
use crate::metrics::IdcgMode;
use crate::model::{JovaModel, Mode};
use crate::nn::{Adam, AdamConfig};
use crate::rng::{SeededRng, Stream};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub max_epochs: usize,
    /// Epochs without a validation improvement before stopping.
    pub patience: usize,
    /// With `false`, always runs `max_epochs`.
    pub early_stopping: bool,
    pub block_users: usize,
    pub block_items: usize,
    /// Cutoff of the validation NDCG used for model selection.
    pub selection_k: usize,
    pub idcg: IdcgMode,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            learning_rate: 0.003,
            max_epochs: 200,
            patience: 10,
            early_stopping: true,
            block_users: 1500,
            block_items: 1500,
            selection_k: 10,
            idcg: IdcgMode::Full,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate >= 0.0) || !self.learning_rate.is_finite() {
            return Err(Error::invalid(format!(
                "learning rate must be finite and non-negative, got {}",
                self.learning_rate
            )));
        }
        if self.block_users == 0 || self.block_items == 0 {
            return Err(Error::invalid("block sizes must be at least 1"));
        }
        if self.selection_k == 0 {
            return Err(Error::invalid("selection cutoff must be at least 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    /// 1-based.
    pub epoch: usize,
    /// Sum of block objectives.
    pub train_loss: f64,
    pub user_elbo: f64,
    pub item_elbo: f64,
    pub hinge: f64,
    /// `None` when no user has validation positives.
    pub valid_ndcg: Option<f64>,
    pub improved: bool,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    /// Parameters from the best validation epoch, or the last epoch when
    /// there is nothing to validate on.
    pub model: JovaModel,
    pub log: Vec<EpochRecord>,
    /// 0 when no epoch ran.
    pub best_epoch: usize,
    pub best_valid_ndcg: Option<f64>,
}

fn validation_ndcg(model: &JovaModel, matrix: &InteractionMatrix, config: &TrainConfig) -> Result<Option<f64>> {
    let opts = EvalOptions {
        ks: alloc::vec![config.selection_k],
        split: Split::Valid,
        idcg: config.idcg,
        cold_start_limits: Vec::new(),
        ..EvalOptions::default()
    };
    let predictor = model.predictor(matrix)?;
    match evaluate(&predictor, matrix, &opts) {
        Ok(report) => Ok(report.averages.first().map(|m| m.ndcg)),
        Err(Error::NoEvaluableUsers) => Ok(None),
        Err(e) => Err(e),
    }
}

/// Trains `model` on the training split of `matrix`. All randomness derives
/// from the model's seed, so equal inputs give bit-identical results.
/// `on_epoch` sees each record as soon as the epoch finishes.
pub fn train(
    model: JovaModel,
    matrix: &InteractionMatrix,
    config: &TrainConfig,
    mut on_epoch: impl FnMut(&EpochRecord),
) -> Result<TrainOutcome> {
    config.validate()?;
    model.check_dimensions(matrix)?;
    if matrix.count(Split::Train) == 0 {
        return Err(Error::Empty("training split has no interactions".into()));
    }

    let seed = model.seed();
    let mut shuffle_rng = SeededRng::new(seed, Stream::Shuffle);
    let mut negative_rng = SeededRng::new(seed, Stream::Negatives);
    let mut noise_rng = SeededRng::new(seed, Stream::Noise);
    let uses_hinge = model.mode() == Mode::JovaHinge && model.hyperparameters().beta > 0.0;
    let trains_items = model.mode() != Mode::UserVaeOnly;

    let adam_config = AdamConfig::with_learning_rate(config.learning_rate);
    let mut model = model;
    let (mut user_adam, mut item_adam) = {
        let (user_vae, item_vae) = model.vaes_mut();
        let lengths = |slices: Vec<&mut [f64]>| slices.iter().map(|s| s.len()).collect::<Vec<_>>();
        (
            Adam::new(adam_config, lengths(user_vae.parameter_slices_mut())),
            Adam::new(adam_config, lengths(item_vae.parameter_slices_mut())),
        )
    };

    let mut log = Vec::new();
    let mut best: Option<(usize, f64, JovaModel)> = None;
    let mut since_best = 0;

    for epoch in 1..=config.max_epochs {
        let blocks = make_blocks(
            matrix.n_users(),
            matrix.n_items(),
            config.block_users,
            config.block_items,
            &mut shuffle_rng,
        )?;
        let negatives = uses_hinge.then(|| EpochNegatives::sample(matrix, &mut negative_rng));

        let (mut total, mut user_elbo, mut item_elbo, mut hinge) = (0.0, 0.0, 0.0, 0.0);
        for (b, block) in blocks.iter().enumerate() {
            let batch = BlockBatch::assemble(matrix, block, negatives.as_ref());
            let loss = block_loss(&model, &batch, &mut noise_rng)?;
            if !loss.total.is_finite() {
                return Err(Error::NonFiniteLoss { epoch, block: b });
            }
            total += loss.total;
            user_elbo += loss.user_elbo;
            item_elbo += loss.item_elbo;
            hinge += loss.hinge;

            let (user_vae, item_vae) = model.vaes_mut();
            user_adam.step(&mut user_vae.parameter_slices_mut(), &loss.user_grads.slices())?;
            if trains_items {
                if let Some(grads) = &loss.item_grads {
                    item_adam.step(&mut item_vae.parameter_slices_mut(), &grads.slices())?;
                }
            }
            if !model.is_finite() {
                return Err(Error::NonFiniteLoss { epoch, block: b });
            }
        }

        let valid_ndcg = validation_ndcg(&model, matrix, config)?;
        let improved = match (valid_ndcg, &best) {
            (Some(v), Some((_, b, _))) => v > *b,
            (Some(_), None) => true,
            (None, _) => false,
        };
        if improved {
            best = Some((epoch, valid_ndcg.expect("improved implies a score"), model.clone()));
            since_best = 0;
        } else {
            since_best += 1;
        }
        let record = EpochRecord {
            epoch,
            train_loss: total,
            user_elbo,
            item_elbo,
            hinge,
            valid_ndcg,
            improved,
        };
        on_epoch(&record);
        log.push(record);

        if valid_ndcg.is_some() && config.early_stopping && since_best >= config.patience {
            break;
        }
    }

    Ok(match best {
        Some((best_epoch, ndcg, best_model)) => TrainOutcome {
            model: best_model,
            log,
            best_epoch,
            best_valid_ndcg: Some(ndcg),
        },
        None => TrainOutcome {
            best_epoch: log.len(),
            model,
            log,
            best_valid_ndcg: None,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Hyperparameters, ModelShape};
    use crate::nn::gradcheck::Parameters;
    use crate::synthetic::{community_dataset, CommunityConfig};

    fn small() -> (InteractionMatrix, ModelShape) {
        let config = CommunityConfig {
            users: 40,
            items: 30,
            communities: 2,
            items_per_user: 8,
            ..CommunityConfig::default()
        };
        let matrix = community_dataset(&config, 5).unwrap();
        let shape = ModelShape {
            hidden: alloc::vec![16],
            latent_dim: 4,
        };
        (matrix, shape)
    }

    #[test]
    fn zero_learning_rate_keeps_parameters() {
        let (matrix, shape) = small();
        let model = JovaModel::new(40, 30, &shape, Hyperparameters::default(), Mode::JovaHinge, 3).unwrap();
        let before = model.parameters();
        let config = TrainConfig {
            learning_rate: 0.0,
            max_epochs: 3,
            early_stopping: false,
            ..TrainConfig::default()
        };
        let out = train(model, &matrix, &config, |_| {}).unwrap();
        let after = out.model.parameters();
        assert!(before.iter().zip(&after).all(|(a, b)| a.to_bits() == b.to_bits()));
    }

    #[test]
    fn training_is_deterministic() {
        let (matrix, shape) = small();
        let config = TrainConfig {
            max_epochs: 4,
            block_users: 16,
            block_items: 12,
            ..TrainConfig::default()
        };
        let run = || {
            let model = JovaModel::new(40, 30, &shape, Hyperparameters::default(), Mode::JovaHinge, 9).unwrap();
            train(model, &matrix, &config, |_| {}).unwrap()
        };
        let (a, b) = (run(), run());
        assert_eq!(a.log, b.log);
        assert_eq!(a.model, b.model);
    }

    #[test]
    fn patience_stops_early_and_keeps_the_best_epoch() {
        let (matrix, shape) = small();
        let model = JovaModel::new(40, 30, &shape, Hyperparameters::default(), Mode::Jova, 1).unwrap();
        let config = TrainConfig {
            learning_rate: 0.0,
            max_epochs: 50,
            patience: 2,
            ..TrainConfig::default()
        };
        let mut seen = 0;
        let out = train(model, &matrix, &config, |_| seen += 1).unwrap();
        // Nothing changes with lr = 0, so epoch 1 stays best.
        assert_eq!(out.log.len(), 3);
        assert_eq!(seen, 3);
        assert_eq!(out.best_epoch, 1);
        assert!(out.log[0].improved && !out.log[1].improved);
    }

    #[test]
    fn loss_falls_on_a_learnable_matrix() {
        let (matrix, shape) = small();
        let model = JovaModel::new(40, 30, &shape, Hyperparameters::default(), Mode::JovaHinge, 2).unwrap();
        let config = TrainConfig {
            max_epochs: 30,
            early_stopping: false,
            ..TrainConfig::default()
        };
        let out = train(model, &matrix, &config, |_| {}).unwrap();
        let first = out.log.first().unwrap().train_loss;
        let last = out.log.last().unwrap().train_loss;
        assert!(last < first, "{first} -> {last}");
    }

    #[test]
    fn invalid_configs_are_rejected() {
        let (matrix, shape) = small();
        let model = JovaModel::new(40, 30, &shape, Hyperparameters::default(), Mode::Jova, 1).unwrap();
        let bad = TrainConfig {
            block_users: 0,
            ..TrainConfig::default()
        };
        assert!(train(model.clone(), &matrix, &bad, |_| {}).is_err());
        let bad = TrainConfig {
            learning_rate: f64::NAN,
            ..TrainConfig::default()
        };
        assert!(train(model, &matrix, &bad, |_| {}).is_err());
    }
}
