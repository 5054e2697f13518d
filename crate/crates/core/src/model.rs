//! The joint model: a user-side VAE over rows of the interaction matrix and
//! an item-side VAE over its columns. Predictions average the two
//! reconstructions, `r̂ = ½ (R̂_user + R̂_itemᵀ)`.

use alloc::format;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::data::InteractionMatrix;
use crate::error::{Error, Result};
use crate::eval::Scorer;
use crate::matrix::DenseMatrix;
use crate::nn::gradcheck::Parameters;
use crate::rng::{SeededRng, Stream};
use crate::vae::{VaeModel, VaeShape};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    /// Both VAEs, ELBO losses only.
    Jova,
    /// Both VAEs, ELBO losses plus β-weighted hinge ranking loss.
    JovaHinge,
    /// Ablation: the user VAE alone.
    UserVaeOnly,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Hyperparameters {
    /// KL weight inside each VAE loss.
    pub alpha: f64,
    /// Weight of the hinge term.
    pub beta: f64,
    /// Hinge margin.
    pub lambda: f64,
}

impl Default for Hyperparameters {
    fn default() -> Self {
        Self {
            alpha: 0.01,
            beta: 0.01,
            lambda: 0.15,
        }
    }
}

impl Hyperparameters {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("alpha", self.alpha), ("beta", self.beta), ("lambda", self.lambda)] {
            if !(v >= 0.0) || !v.is_finite() {
                return Err(Error::invalid(format!("{name} must be finite and non-negative, got {v}")));
            }
        }
        Ok(())
    }
}

/// Hidden widths and latent size shared by both VAEs.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelShape {
    pub hidden: Vec<usize>,
    pub latent_dim: usize,
}

impl Default for ModelShape {
    fn default() -> Self {
        Self {
            hidden: alloc::vec![320, 320],
            latent_dim: 80,
        }
    }
}

impl ModelShape {
    fn vae(&self, input_dim: usize) -> VaeShape {
        VaeShape {
            input_dim,
            hidden: self.hidden.clone(),
            latent_dim: self.latent_dim,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JovaModel {
    user_vae: VaeModel,
    item_vae: VaeModel,
    hyper: Hyperparameters,
    mode: Mode,
    seed: u64,
}

impl JovaModel {
    /// Glorot-initialized model for an `n_users × n_items` matrix. The seed
    /// also drives every random stream the trainer uses.
    pub fn new(
        n_users: usize,
        n_items: usize,
        shape: &ModelShape,
        hyper: Hyperparameters,
        mode: Mode,
        seed: u64,
    ) -> Result<Self> {
        let mut rng = SeededRng::new(seed, Stream::Init);
        let user_vae = VaeModel::new(&shape.vae(n_items), &mut rng)?;
        let item_vae = VaeModel::new(&shape.vae(n_users), &mut rng)?;
        Self::from_parts(user_vae, item_vae, hyper, mode, seed)
    }

    pub fn zeros(
        n_users: usize,
        n_items: usize,
        shape: &ModelShape,
        hyper: Hyperparameters,
        mode: Mode,
    ) -> Result<Self> {
        let user_vae = VaeModel::zeros(&shape.vae(n_items))?;
        let item_vae = VaeModel::zeros(&shape.vae(n_users))?;
        Self::from_parts(user_vae, item_vae, hyper, mode, 0)
    }

    pub fn from_parts(
        user_vae: VaeModel,
        item_vae: VaeModel,
        hyper: Hyperparameters,
        mode: Mode,
        seed: u64,
    ) -> Result<Self> {
        hyper.validate()?;
        Ok(Self {
            user_vae,
            item_vae,
            hyper,
            mode,
            seed,
        })
    }

    pub fn user_vae(&self) -> &VaeModel {
        &self.user_vae
    }

    pub fn item_vae(&self) -> &VaeModel {
        &self.item_vae
    }

    pub(crate) fn vaes_mut(&mut self) -> (&mut VaeModel, &mut VaeModel) {
        (&mut self.user_vae, &mut self.item_vae)
    }

    pub fn hyperparameters(&self) -> &Hyperparameters {
        &self.hyper
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn n_users(&self) -> usize {
        self.item_vae.input_dim()
    }

    pub fn n_items(&self) -> usize {
        self.user_vae.input_dim()
    }

    pub fn is_finite(&self) -> bool {
        self.user_vae.is_finite() && self.item_vae.is_finite()
    }

    pub fn check_dimensions(&self, matrix: &InteractionMatrix) -> Result<()> {
        if matrix.n_users() != self.n_users() || matrix.n_items() != self.n_items() {
            return Err(Error::invalid(format!(
                "model expects {} users x {} items, dataset has {} x {}",
                self.n_users(),
                self.n_items(),
                matrix.n_users(),
                matrix.n_items()
            )));
        }
        Ok(())
    }

    /// A scorer that reconstructs every item column once and reuses it for
    /// all user batches.
    pub fn predictor<'a>(&'a self, matrix: &'a InteractionMatrix) -> Result<Predictor<'a>> {
        self.check_dimensions(matrix)?;
        let item_side = match self.mode {
            Mode::UserVaeOnly => None,
            Mode::Jova | Mode::JovaHinge => Some(reconstruct_items(&self.item_vae, matrix)?),
        };
        Ok(Predictor {
            model: self,
            matrix,
            item_side,
        })
    }

    /// Noiseless averaged predictions for `users` over all items.
    pub fn predict(&self, matrix: &InteractionMatrix, users: &[usize]) -> Result<PredictionMatrix> {
        let scores = self.predictor(matrix)?.score_users(users)?;
        Ok(PredictionMatrix::new(users.to_vec(), scores))
    }
}

impl Parameters for JovaModel {
    fn parameters(&self) -> Vec<f64> {
        let mut p = self.user_vae.parameters();
        p.extend(self.item_vae.parameters());
        p
    }

    fn set_parameters(&mut self, values: &[f64]) -> Result<()> {
        let n = self.user_vae.parameter_count();
        if values.len() != n + self.item_vae.parameter_count() {
            return Err(Error::invalid(format!(
                "expected {} parameters, got {}",
                n + self.item_vae.parameter_count(),
                values.len()
            )));
        }
        self.user_vae.set_parameters(&values[..n])?;
        self.item_vae.set_parameters(&values[n..])
    }
}

const RECONSTRUCT_CHUNK: usize = 512;

fn reconstruct_items(item_vae: &VaeModel, matrix: &InteractionMatrix) -> Result<DenseMatrix> {
    let (n, m) = (matrix.n_users(), matrix.n_items());
    let mut out = DenseMatrix::zeros(m, n);
    let items: Vec<usize> = (0..m).collect();
    for chunk in items.chunks(RECONSTRUCT_CHUNK) {
        let rec = item_vae.reconstruct(&matrix.train_columns(chunk))?;
        for (r, &i) in chunk.iter().enumerate() {
            out.row_mut(i).copy_from_slice(rec.row(r));
        }
    }
    Ok(out)
}

pub struct Predictor<'a> {
    model: &'a JovaModel,
    matrix: &'a InteractionMatrix,
    /// Item-side reconstruction, items × users.
    item_side: Option<DenseMatrix>,
}

impl Scorer for Predictor<'_> {
    fn n_users(&self) -> usize {
        self.model.n_users()
    }

    fn n_items(&self) -> usize {
        self.model.n_items()
    }

    fn score_users(&self, users: &[usize]) -> Result<DenseMatrix> {
        if let Some(&u) = users.iter().find(|&&u| u >= self.model.n_users()) {
            return Err(Error::invalid(format!("user index {u} out of range")));
        }
        let mut scores = self.model.user_vae.reconstruct(&self.matrix.train_rows(users))?;
        if let Some(items) = &self.item_side {
            for (r, &u) in users.iter().enumerate() {
                for (i, s) in scores.row_mut(r).iter_mut().enumerate() {
                    *s = 0.5 * (*s + items.get(i, u));
                }
            }
        }
        Ok(scores)
    }
}

/// Predicted scores for a subset of users over all items.
#[derive(Debug, Clone, PartialEq)]
pub struct PredictionMatrix {
    users: Vec<usize>,
    scores: DenseMatrix,
}

impl PredictionMatrix {
    /// Row `r` of `scores` holds user `users[r]`.
    pub fn new(users: Vec<usize>, scores: DenseMatrix) -> Self {
        assert_eq!(users.len(), scores.rows(), "one score row per user");
        Self { users, scores }
    }

    pub fn users(&self) -> &[usize] {
        &self.users
    }

    pub fn scores(&self) -> &DenseMatrix {
        &self.scores
    }

    pub fn row_of(&self, user: usize) -> Option<usize> {
        self.users.iter().position(|&u| u == user)
    }

    pub fn score(&self, user: usize, item: usize) -> Option<f64> {
        let r = self.row_of(user)?;
        (item < self.scores.cols()).then(|| self.scores.get(r, item))
    }
}
