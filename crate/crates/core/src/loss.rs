//! Block losses: the joint ELBO of both VAEs and the hinge ranking term.
//!
//! Per block, the user VAE's reconstruction term covers the block users'
//! cells in the block items' columns, and the item VAE's term the block
//! items' cells in the block users' columns. Each KL term is scaled by the
//! fraction of the row the block covers, so that over one epoch every row
//! contributes one full ELBO. With a single block this is exactly the sum of
//! per-row VAE losses over all users plus all items.

use alloc::vec;
use alloc::vec::Vec;

use crate::batch::BlockBatch;
use crate::error::{Error, Result};
use crate::model::{JovaModel, Mode, PredictionMatrix};
use crate::rng::SeededRng;
use crate::vae::{elbo_terms, ElboMask, Noise, VaeGradients};

#[derive(Debug, Clone)]
pub struct BlockLoss {
    /// Value of the objective that produced the gradients.
    pub total: f64,
    pub user_elbo: f64,
    pub item_elbo: f64,
    /// Unweighted hinge sum; zero when the hinge term is off.
    pub hinge: f64,
    pub user_grads: VaeGradients,
    /// `None` in user-only mode.
    pub item_grads: Option<VaeGradients>,
}

fn column_mask(width: usize, selected: &[usize]) -> Option<Vec<bool>> {
    if selected.len() == width {
        return None;
    }
    let mut mask = vec![false; width];
    for &s in selected {
        mask[s] = true;
    }
    Some(mask)
}

fn coverage(selected: usize, width: usize) -> f64 {
    selected as f64 / width as f64
}

#[inline]
fn sigmoid_slope(p: f64) -> f64 {
    p * (1.0 - p)
}

fn objective(model: &JovaModel, batch: &BlockBatch, rng: &mut SeededRng, with_items: bool, beta: Option<f64>) -> Result<BlockLoss> {
    let (n, m) = (model.n_users(), model.n_items());
    if batch.user_slab.cols() != m || batch.item_slab.cols() != n {
        return Err(Error::invalid(alloc::format!(
            "batch slabs are {}x{} / {}x{} for a {n}x{m} model",
            batch.user_slab.rows(),
            batch.user_slab.cols(),
            batch.item_slab.rows(),
            batch.item_slab.cols()
        )));
    }
    let alpha = model.hyperparameters().alpha;

    let user_cols = column_mask(m, &batch.items);
    let user_mask = ElboMask {
        columns: user_cols.as_deref(),
        active_rows: batch.users.len(),
        kl_scale: alpha * coverage(batch.items.len(), m),
    };
    let user_fwd = model.user_vae().forward(&batch.user_slab, Noise::Sample(rng))?;
    let user_terms = elbo_terms(&user_fwd, &batch.user_slab, &user_mask)?;
    let mut user_logits_grad = user_terms.logits_grad;

    if !with_items {
        let user_grads = model.user_vae().backward(user_fwd, &user_logits_grad, &user_mask)?;
        return Ok(BlockLoss {
            total: user_terms.loss,
            user_elbo: user_terms.loss,
            item_elbo: 0.0,
            hinge: 0.0,
            user_grads,
            item_grads: None,
        });
    }

    let item_cols = column_mask(n, &batch.users);
    let item_mask = ElboMask {
        columns: item_cols.as_deref(),
        active_rows: batch.items.len(),
        kl_scale: alpha * coverage(batch.users.len(), n),
    };
    let item_fwd = model.item_vae().forward(&batch.item_slab, Noise::Sample(rng))?;
    let item_terms = elbo_terms(&item_fwd, &batch.item_slab, &item_mask)?;
    let mut item_logits_grad = item_terms.logits_grad;

    let mut hinge = 0.0;
    if let Some(beta) = beta {
        let lambda = model.hyperparameters().lambda;
        let (ru, ri) = (&user_fwd.reconstruction, &item_fwd.reconstruction);
        for p in &batch.pairs {
            let up = ru.get(p.user_row, p.positive);
            let un = ru.get(p.user_row, p.negative);
            let ip = ri.get(p.positive_row, p.user);
            let inn = ri.get(p.negative_row, p.user);
            let margin = 0.5 * (un + inn) - 0.5 * (up + ip) + lambda;
            if margin > 0.0 {
                hinge += margin;
                let w = 0.5 * beta;
                let g = user_logits_grad.row_mut(p.user_row);
                g[p.negative] += w * sigmoid_slope(un);
                g[p.positive] -= w * sigmoid_slope(up);
                let gi = item_logits_grad.get(p.negative_row, p.user) + w * sigmoid_slope(inn);
                item_logits_grad.set(p.negative_row, p.user, gi);
                let gi = item_logits_grad.get(p.positive_row, p.user) - w * sigmoid_slope(ip);
                item_logits_grad.set(p.positive_row, p.user, gi);
            }
        }
    }

    let user_grads = model.user_vae().backward(user_fwd, &user_logits_grad, &user_mask)?;
    let item_grads = model.item_vae().backward(item_fwd, &item_logits_grad, &item_mask)?;
    let elbo = user_terms.loss + item_terms.loss;
    Ok(BlockLoss {
        total: match beta {
            Some(beta) => elbo + beta * hinge,
            None => elbo,
        },
        user_elbo: user_terms.loss,
        item_elbo: item_terms.loss,
        hinge,
        user_grads,
        item_grads: Some(item_grads),
    })
}

/// Sum of user-VAE and item-VAE losses over the block, with gradients for
/// both VAEs. Draws user noise, then item noise, from `rng`.
pub fn jova_loss(model: &JovaModel, batch: &BlockBatch, rng: &mut SeededRng) -> Result<BlockLoss> {
    objective(model, batch, rng, true, None)
}

/// [`jova_loss`] plus β times the hinge loss over the batch pairs, where
/// scores are the averaged predictions of the same forward passes. With
/// β = 0 this is exactly [`jova_loss`].
pub fn jova_hinge_loss(model: &JovaModel, batch: &BlockBatch, rng: &mut SeededRng) -> Result<BlockLoss> {
    if model.mode() != Mode::JovaHinge {
        return Err(Error::invalid(alloc::format!(
            "hinge loss needs a jova_hinge model, got {:?}",
            model.mode()
        )));
    }
    let beta = model.hyperparameters().beta;
    if beta == 0.0 {
        return jova_loss(model, batch, rng);
    }
    objective(model, batch, rng, true, Some(beta))
}

/// Loss for the model's training mode.
pub fn block_loss(model: &JovaModel, batch: &BlockBatch, rng: &mut SeededRng) -> Result<BlockLoss> {
    match model.mode() {
        Mode::Jova => jova_loss(model, batch, rng),
        Mode::JovaHinge => jova_hinge_loss(model, batch, rng),
        Mode::UserVaeOnly => objective(model, batch, rng, false, None),
    }
}

/// Σ max(0, r̂_uj − r̂_ui + λ) over aligned positive/negative pairs.
pub fn hinge_loss(
    predictions: &PredictionMatrix,
    positives: &[(usize, usize)],
    negatives: &[(usize, usize)],
    lambda: f64,
) -> Result<f64> {
    if positives.len() != negatives.len() {
        return Err(Error::invalid(alloc::format!(
            "{} positives paired with {} negatives",
            positives.len(),
            negatives.len()
        )));
    }
    let lookup = |(u, i): (usize, usize)| {
        predictions
            .score(u, i)
            .ok_or_else(|| Error::invalid(alloc::format!("no prediction for ({u}, {i})")))
    };
    let mut total = 0.0;
    for (&pos, &neg) in positives.iter().zip(negatives) {
        if pos.0 != neg.0 {
            return Err(Error::invalid(alloc::format!(
                "pair mixes users {} and {}",
                pos.0,
                neg.0
            )));
        }
        total += (lookup(neg)? - lookup(pos)? + lambda).max(0.0);
    }
    Ok(total)
}
