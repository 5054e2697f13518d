//! A single variational autoencoder over binary interaction vectors.
//!
//! The encoder maps an input row to `[μ | log σ²]` (tanh hidden layers, a
//! linear head), one latent sample is drawn by reparameterization, and the
//! decoder (tanh hidden layers, sigmoid head) returns Bernoulli logits. The
//! loss is the negative logistic log-likelihood plus an α-weighted KL term
//! against the standard normal prior.

use alloc::format;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::DenseMatrix;
use crate::nn::gradcheck::Parameters;
use crate::nn::{sigmoid, Activation, Gradients, MlpNetwork, Tape};
use crate::rng::SeededRng;

/// Layer widths of one VAE. The encoder runs `input → hidden… → 2·latent`
/// and the decoder mirrors it, `latent → hidden reversed… → input`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VaeShape {
    pub input_dim: usize,
    pub hidden: Vec<usize>,
    pub latent_dim: usize,
}

impl VaeShape {
    fn encoder_widths(&self) -> (Vec<usize>, Vec<Activation>) {
        let mut widths = Vec::with_capacity(self.hidden.len() + 2);
        widths.push(self.input_dim);
        widths.extend_from_slice(&self.hidden);
        widths.push(2 * self.latent_dim);
        let mut acts = alloc::vec![Activation::Tanh; self.hidden.len()];
        acts.push(Activation::Linear);
        (widths, acts)
    }

    fn decoder_widths(&self) -> (Vec<usize>, Vec<Activation>) {
        let mut widths = Vec::with_capacity(self.hidden.len() + 2);
        widths.push(self.latent_dim);
        widths.extend(self.hidden.iter().rev());
        widths.push(self.input_dim);
        let mut acts = alloc::vec![Activation::Tanh; self.hidden.len()];
        acts.push(Activation::Sigmoid);
        (widths, acts)
    }

    fn validate(&self) -> Result<()> {
        if self.input_dim == 0 || self.latent_dim == 0 || self.hidden.iter().any(|&h| h == 0) {
            return Err(Error::invalid(format!("VAE widths must be positive: {self:?}")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VaeModel {
    encoder: MlpNetwork,
    decoder: MlpNetwork,
    latent_dim: usize,
}

/// Where the latent sample comes from.
pub enum Noise<'a> {
    /// Fresh ε ~ N(0, I) from the stream.
    Sample(&'a mut SeededRng),
    /// ε = 0, so z = μ.
    Mean,
}

/// Everything one forward pass produces; consumed by [`VaeModel::backward`].
#[derive(Debug)]
pub struct VaeForward {
    pub mu: DenseMatrix,
    pub logvar: DenseMatrix,
    pub epsilon: DenseMatrix,
    pub z: DenseMatrix,
    pub reconstruction: DenseMatrix,
    encoder_tape: Tape,
    decoder_tape: Tape,
}

impl VaeForward {
    /// Decoder pre-sigmoid outputs.
    pub fn logits(&self) -> &DenseMatrix {
        self.decoder_tape.logits()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VaeGradients {
    pub encoder: Gradients,
    pub decoder: Gradients,
}

impl VaeGradients {
    pub fn zeros_like(vae: &VaeModel) -> Self {
        Self {
            encoder: Gradients::zeros_like(&vae.encoder),
            decoder: Gradients::zeros_like(&vae.decoder),
        }
    }

    /// Same order as [`VaeModel::parameter_slices_mut`].
    pub fn slices(&self) -> Vec<&[f64]> {
        let mut s = self.encoder.slices();
        s.extend(self.decoder.slices());
        s
    }

    pub fn flatten(&self) -> Vec<f64> {
        self.slices().concat()
    }
}

/// Which cells and rows of a batch enter the ELBO.
#[derive(Debug, Clone, Copy)]
pub struct ElboMask<'a> {
    /// Columns whose reconstruction term counts; `None` means all.
    pub columns: Option<&'a [bool]>,
    /// Only rows `0..active_rows` contribute reconstruction and KL terms;
    /// later rows are carried along for other losses.
    pub active_rows: usize,
    /// Weight on the KL sum (α, possibly scaled by block coverage).
    pub kl_scale: f64,
}

impl ElboMask<'_> {
    pub fn full(rows: usize, alpha: f64) -> Self {
        ElboMask {
            columns: None,
            active_rows: rows,
            kl_scale: alpha,
        }
    }
}

#[derive(Debug, Clone)]
pub struct ElboTerms {
    /// `reconstruction + kl_scale · kl`.
    pub loss: f64,
    /// Negative logistic log-likelihood over the masked cells.
    pub reconstruction: f64,
    /// Unscaled KL summed over active rows.
    pub kl: f64,
    /// Gradient of `loss` w.r.t. the decoder logits.
    pub logits_grad: DenseMatrix,
}

impl VaeModel {
    pub fn new(shape: &VaeShape, rng: &mut SeededRng) -> Result<Self> {
        shape.validate()?;
        let (ew, ea) = shape.encoder_widths();
        let (dw, da) = shape.decoder_widths();
        let encoder = MlpNetwork::glorot(&ew, &ea, rng)?;
        let decoder = MlpNetwork::glorot(&dw, &da, rng)?;
        Self::from_networks(encoder, decoder)
    }

    /// All weights and biases zero: μ = 0, log σ² = 0, reconstructions 0.5.
    pub fn zeros(shape: &VaeShape) -> Result<Self> {
        shape.validate()?;
        let (ew, ea) = shape.encoder_widths();
        let (dw, da) = shape.decoder_widths();
        Self::from_networks(MlpNetwork::zeros(&ew, &ea)?, MlpNetwork::zeros(&dw, &da)?)
    }

    pub fn from_networks(encoder: MlpNetwork, decoder: MlpNetwork) -> Result<Self> {
        let latent_dim = decoder.input_width();
        if encoder.output_width() != 2 * latent_dim {
            return Err(Error::invalid(format!(
                "encoder outputs {} values, decoder expects latent width {latent_dim}",
                encoder.output_width()
            )));
        }
        if decoder.output_width() != encoder.input_width() {
            return Err(Error::invalid(format!(
                "decoder reconstructs {} values, encoder reads {}",
                decoder.output_width(),
                encoder.input_width()
            )));
        }
        let head = decoder.layers()[decoder.layers().len() - 1].activation;
        if head != Activation::Sigmoid {
            return Err(Error::invalid(format!("decoder head must be sigmoid, got {head:?}")));
        }
        Ok(Self {
            encoder,
            decoder,
            latent_dim,
        })
    }

    pub fn encoder(&self) -> &MlpNetwork {
        &self.encoder
    }

    pub fn decoder(&self) -> &MlpNetwork {
        &self.decoder
    }

    pub fn latent_dim(&self) -> usize {
        self.latent_dim
    }

    pub fn input_dim(&self) -> usize {
        self.encoder.input_width()
    }

    pub fn parameter_count(&self) -> usize {
        self.encoder.parameter_count() + self.decoder.parameter_count()
    }

    pub fn parameter_slices_mut(&mut self) -> Vec<&mut [f64]> {
        let mut s = self.encoder.parameter_slices_mut();
        s.extend(self.decoder.parameter_slices_mut());
        s
    }

    pub fn is_finite(&self) -> bool {
        self.encoder.is_finite() && self.decoder.is_finite()
    }

    fn split_head(&self, head: &DenseMatrix) -> Result<(DenseMatrix, DenseMatrix)> {
        let d = self.latent_dim;
        Ok((head.columns(0..d)?, head.columns(d..2 * d)?))
    }

    /// Posterior parameters `(μ, log σ²)` for each input row.
    pub fn encode(&self, x: &DenseMatrix) -> Result<(DenseMatrix, DenseMatrix)> {
        self.split_head(&self.encoder.infer(x)?)
    }

    pub fn forward(&self, x: &DenseMatrix, noise: Noise<'_>) -> Result<VaeForward> {
        let (head, encoder_tape) = self.encoder.forward(x)?;
        let (mu, logvar) = self.split_head(&head)?;
        let epsilon = match noise {
            Noise::Sample(rng) => rng.standard_normal_matrix(mu.rows(), mu.cols()),
            Noise::Mean => DenseMatrix::zeros(mu.rows(), mu.cols()),
        };
        let z = reparameterize_with(&mu, &logvar, &epsilon)?;
        let (reconstruction, decoder_tape) = self.decoder.forward(&z)?;
        Ok(VaeForward {
            mu,
            logvar,
            epsilon,
            z,
            reconstruction,
            encoder_tape,
            decoder_tape,
        })
    }

    /// Noiseless reconstruction probabilities (z = μ).
    pub fn reconstruct(&self, x: &DenseMatrix) -> Result<DenseMatrix> {
        let (mu, _) = self.encode(x)?;
        self.decoder.infer(&mu)
    }

    /// Gradients for a loss whose derivative w.r.t. the decoder logits is
    /// `logits_grad`, plus `mask.kl_scale · KL` over the mask's active rows.
    pub fn backward(&self, fwd: VaeForward, logits_grad: &DenseMatrix, mask: &ElboMask<'_>) -> Result<VaeGradients> {
        let VaeForward {
            mu,
            logvar,
            epsilon,
            encoder_tape,
            decoder_tape,
            ..
        } = fwd;
        let (decoder, dz) = self.decoder.backward_logits(decoder_tape, logits_grad)?;

        let d = self.latent_dim;
        let mut head_grad = DenseMatrix::zeros(mu.rows(), 2 * d);
        for r in 0..mu.rows() {
            let kl = if r < mask.active_rows { mask.kl_scale } else { 0.0 };
            let (m, lv, e, g) = (mu.row(r), logvar.row(r), epsilon.row(r), dz.row(r));
            let out = head_grad.row_mut(r);
            for j in 0..d {
                let sigma = libm::exp(0.5 * lv[j]);
                out[j] = g[j] + kl * m[j];
                out[d + j] = g[j] * e[j] * 0.5 * sigma + kl * 0.5 * (sigma * sigma - 1.0);
            }
        }
        let (encoder, _) = self.encoder.backward(encoder_tape, &head_grad)?;
        Ok(VaeGradients { encoder, decoder })
    }
}

impl Parameters for VaeModel {
    fn parameters(&self) -> Vec<f64> {
        let mut p = self.encoder.parameters();
        p.extend(self.decoder.parameters());
        p
    }

    fn set_parameters(&mut self, values: &[f64]) -> Result<()> {
        let n = self.encoder.parameter_count();
        if values.len() != n + self.decoder.parameter_count() {
            return Err(Error::invalid(format!(
                "expected {} parameters, got {}",
                self.parameter_count(),
                values.len()
            )));
        }
        self.encoder.set_parameters(&values[..n])?;
        self.decoder.set_parameters(&values[n..])
    }
}

/// z = μ + exp(½ log σ²) ⊙ ε.
pub fn reparameterize_with(mu: &DenseMatrix, logvar: &DenseMatrix, epsilon: &DenseMatrix) -> Result<DenseMatrix> {
    if mu.shape() != logvar.shape() || mu.shape() != epsilon.shape() {
        return Err(Error::shape("reparameterize", mu.shape(), logvar.shape()));
    }
    let data = mu
        .as_slice()
        .iter()
        .zip(logvar.as_slice())
        .zip(epsilon.as_slice())
        .map(|((&m, &lv), &e)| m + libm::exp(0.5 * lv) * e)
        .collect();
    DenseMatrix::new(mu.rows(), mu.cols(), data)
}

/// One Monte Carlo sample of z ~ N(μ, σ²).
pub fn reparameterize(mu: &DenseMatrix, logvar: &DenseMatrix, rng: &mut SeededRng) -> Result<DenseMatrix> {
    let eps = rng.standard_normal_matrix(mu.rows(), mu.cols());
    reparameterize_with(mu, logvar, &eps)
}

/// KL(N(μ, σ²) ‖ N(0, I)) for each row.
pub fn kl_divergence(mu: &DenseMatrix, logvar: &DenseMatrix) -> Result<Vec<f64>> {
    if mu.shape() != logvar.shape() {
        return Err(Error::shape("kl_divergence", mu.shape(), logvar.shape()));
    }
    Ok((0..mu.rows())
        .map(|r| kl_row(mu.row(r), logvar.row(r)))
        .collect())
}

fn kl_row(mu: &[f64], logvar: &[f64]) -> f64 {
    0.5 * mu
        .iter()
        .zip(logvar)
        .map(|(&m, &lv)| m * m + libm::exp(lv) - 1.0 - lv)
        .sum::<f64>()
}

/// log(1 + eˣ) without overflow.
#[inline]
fn softplus(x: f64) -> f64 {
    x.max(0.0) + libm::log1p(libm::exp(-x.abs()))
}

/// Σᵢ xᵢ log σ(oᵢ) + (1 − xᵢ) log(1 − σ(oᵢ)), from logits.
pub fn logistic_log_likelihood(x: &[f64], logits: &[f64]) -> Result<f64> {
    if x.len() != logits.len() {
        return Err(Error::shape("logistic_log_likelihood", (1, x.len()), (1, logits.len())));
    }
    Ok(-x
        .iter()
        .zip(logits)
        .map(|(&xi, &o)| bernoulli_nll(xi, o))
        .sum::<f64>())
}

#[inline]
fn bernoulli_nll(x: f64, o: f64) -> f64 {
    // -log σ(o) = softplus(-o), -log(1 - σ(o)) = softplus(o)
    x * softplus(-o) + (1.0 - x) * softplus(o)
}

/// Masked ELBO loss terms and the gradient w.r.t. the decoder logits.
pub fn elbo_terms(fwd: &VaeForward, x: &DenseMatrix, mask: &ElboMask<'_>) -> Result<ElboTerms> {
    let logits = fwd.logits();
    if logits.shape() != x.shape() {
        return Err(Error::shape("elbo", x.shape(), logits.shape()));
    }
    if let Some(cols) = mask.columns {
        if cols.len() != x.cols() {
            return Err(Error::shape("elbo column mask", x.shape(), (1, cols.len())));
        }
    }
    if mask.active_rows > x.rows() {
        return Err(Error::invalid(format!(
            "{} active rows requested from a {}-row batch",
            mask.active_rows,
            x.rows()
        )));
    }
    let mut grad = DenseMatrix::zeros(x.rows(), x.cols());
    let mut reconstruction = 0.0;
    for r in 0..mask.active_rows {
        let (xr, or) = (x.row(r), logits.row(r));
        let gr = grad.row_mut(r);
        for c in 0..xr.len() {
            if mask.columns.is_some_and(|m| !m[c]) {
                continue;
            }
            reconstruction += bernoulli_nll(xr[c], or[c]);
            gr[c] = sigmoid(or[c]) - xr[c];
        }
    }
    let kl: f64 = (0..mask.active_rows)
        .map(|r| kl_row(fwd.mu.row(r), fwd.logvar.row(r)))
        .sum();
    Ok(ElboTerms {
        loss: reconstruction + mask.kl_scale * kl,
        reconstruction,
        kl,
        logits_grad: grad,
    })
}

/// −log p(x|z) + α·KL summed over batch rows, with one reparameterized
/// sample, and its gradients for encoder and decoder.
pub fn vae_loss(vae: &VaeModel, x: &DenseMatrix, alpha: f64, rng: &mut SeededRng) -> Result<(f64, VaeGradients)> {
    if !(alpha >= 0.0) {
        return Err(Error::invalid(format!("alpha must be non-negative, got {alpha}")));
    }
    let fwd = vae.forward(x, Noise::Sample(rng))?;
    let mask = ElboMask::full(x.rows(), alpha);
    let terms = elbo_terms(&fwd, x, &mask)?;
    let grads = vae.backward(fwd, &terms.logits_grad, &mask)?;
    Ok((terms.loss, grads))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::gradcheck::{central_differences, max_relative_error};
    use crate::rng::Stream;
    use alloc::vec;

    fn shape(input: usize, hidden: &[usize], latent: usize) -> VaeShape {
        VaeShape {
            input_dim: input,
            hidden: hidden.to_vec(),
            latent_dim: latent,
        }
    }

    fn binary(rng: &mut SeededRng, rows: usize, cols: usize) -> DenseMatrix {
        let data = (0..rows * cols).map(|_| if rng.uniform() < 0.4 { 1.0 } else { 0.0 }).collect();
        DenseMatrix::new(rows, cols, data).unwrap()
    }

    #[test]
    fn zero_encoder_gives_standard_posterior() {
        let vae = VaeModel::zeros(&shape(5, &[4], 3)).unwrap();
        let x = DenseMatrix::filled(2, 5, 1.0);
        let (mu, logvar) = vae.encode(&x).unwrap();
        assert!(mu.as_slice().iter().all(|&v| v == 0.0));
        assert!(logvar.as_slice().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn encode_is_deterministic_and_sigma_positive() {
        let mut rng = SeededRng::new(4, Stream::Init);
        let vae = VaeModel::new(&shape(6, &[5, 5], 2), &mut rng).unwrap();
        let x = binary(&mut rng, 3, 6);
        let (mu1, lv1) = vae.encode(&x).unwrap();
        let (mu2, lv2) = vae.encode(&x).unwrap();
        assert_eq!(mu1, mu2);
        assert_eq!(lv1, lv2);
        assert!(lv1.as_slice().iter().all(|&v| v.is_finite() && libm::exp(0.5 * v) > 0.0));
    }

    #[test]
    fn invariant_widths_are_enforced() {
        let enc = MlpNetwork::zeros(&[4, 6], &[Activation::Linear]).unwrap();
        let dec = MlpNetwork::zeros(&[2, 4], &[Activation::Sigmoid]).unwrap();
        assert!(VaeModel::from_networks(enc.clone(), dec).is_err());
        let dec = MlpNetwork::zeros(&[3, 5], &[Activation::Sigmoid]).unwrap();
        assert!(VaeModel::from_networks(enc.clone(), dec).is_err());
        let dec = MlpNetwork::zeros(&[3, 4], &[Activation::Tanh]).unwrap();
        assert!(VaeModel::from_networks(enc.clone(), dec).is_err());
        let dec = MlpNetwork::zeros(&[3, 4], &[Activation::Sigmoid]).unwrap();
        assert!(VaeModel::from_networks(enc, dec).is_ok());
    }

    #[test]
    fn reparameterize_noiseless_and_collapsed() {
        let mu = DenseMatrix::from_rows(&[[0.3, -1.2]]).unwrap();
        let lv = DenseMatrix::from_rows(&[[0.4, 2.0]]).unwrap();
        let z = reparameterize_with(&mu, &lv, &DenseMatrix::zeros(1, 2)).unwrap();
        assert_eq!(z, mu);

        let tiny = DenseMatrix::filled(1, 2, -50.0);
        let mut rng = SeededRng::new(1, Stream::Noise);
        let z = reparameterize(&mu, &tiny, &mut rng).unwrap();
        assert!(z.max_abs_diff(&mu).unwrap() < 1e-10);
    }

    #[test]
    fn reparameterized_standard_normal_has_unit_variance() {
        let mu = DenseMatrix::zeros(1000, 1000);
        let lv = DenseMatrix::zeros(1000, 1000);
        let z = reparameterize(&mu, &lv, &mut SeededRng::new(8, Stream::Noise)).unwrap();
        let n = z.as_slice().len() as f64;
        let mean = z.as_slice().iter().sum::<f64>() / n;
        let var = z.as_slice().iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
        assert!((0.99..=1.01).contains(&var), "{var}");
    }

    #[test]
    fn kl_closed_form_values() {
        let zero = kl_divergence(&DenseMatrix::zeros(1, 3), &DenseMatrix::zeros(1, 3)).unwrap();
        assert_eq!(zero, vec![0.0]);
        let one = kl_divergence(
            &DenseMatrix::from_rows(&[[1.0]]).unwrap(),
            &DenseMatrix::from_rows(&[[0.0]]).unwrap(),
        )
        .unwrap();
        assert!((one[0] - 0.5).abs() < 1e-15);
        let var = kl_divergence(
            &DenseMatrix::from_rows(&[[0.0]]).unwrap(),
            &DenseMatrix::from_rows(&[[1.0]]).unwrap(),
        )
        .unwrap();
        assert!((var[0] - 0.5 * (core::f64::consts::E - 2.0)).abs() < 1e-15);
        assert!((var[0] - 0.35914).abs() < 1e-5);
    }

    #[test]
    fn log_likelihood_values() {
        let ll = logistic_log_likelihood(&[1.0, 0.0], &[0.0, 0.0]).unwrap();
        assert!((ll - 2.0 * libm::log(0.5)).abs() < 1e-15);
        assert!((ll + 1.38629).abs() < 1e-5);
        let confident = logistic_log_likelihood(&[1.0], &[50.0]).unwrap();
        assert!(confident.abs() < 1e-20 && confident <= 0.0);
        let saturated = logistic_log_likelihood(&[1.0, 0.0], &[-800.0, 800.0]).unwrap();
        assert!(saturated.is_finite() && saturated < -1000.0);
        assert!(logistic_log_likelihood(&[1.0], &[0.0, 1.0]).is_err());
    }

    #[test]
    fn zero_weight_loss_is_cells_times_log2() {
        let vae = VaeModel::zeros(&shape(3, &[4, 4], 2)).unwrap();
        let x = binary(&mut SeededRng::new(2, Stream::Init), 4, 3);
        let (loss, _) = vae_loss(&vae, &x, 0.01, &mut SeededRng::new(0, Stream::Noise)).unwrap();
        assert!((loss - 12.0 * core::f64::consts::LN_2).abs() < 1e-12, "{loss}");
        assert!((loss - 8.3178).abs() < 1e-4);
    }

    #[test]
    fn alpha_zero_is_pure_reconstruction() {
        let mut rng = SeededRng::new(13, Stream::Init);
        let vae = VaeModel::new(&shape(5, &[4], 2), &mut rng).unwrap();
        let x = binary(&mut rng, 3, 5);
        let (loss, _) = vae_loss(&vae, &x, 0.0, &mut SeededRng::new(1, Stream::Noise)).unwrap();
        let fwd = vae.forward(&x, Noise::Sample(&mut SeededRng::new(1, Stream::Noise))).unwrap();
        let nll: f64 = (0..3)
            .map(|r| -logistic_log_likelihood(x.row(r), fwd.logits().row(r)).unwrap())
            .sum();
        assert!((loss - nll).abs() < 1e-12);
    }

    #[test]
    fn loss_is_monotone_in_alpha() {
        let mut rng = SeededRng::new(17, Stream::Init);
        let vae = VaeModel::new(&shape(5, &[4], 2), &mut rng).unwrap();
        let x = binary(&mut rng, 3, 5);
        let mut prev = f64::NEG_INFINITY;
        for alpha in [0.0, 0.001, 0.01, 0.1, 1.0, 10.0] {
            let (loss, _) = vae_loss(&vae, &x, alpha, &mut SeededRng::new(5, Stream::Noise)).unwrap();
            assert!(loss >= prev);
            prev = loss;
        }
        assert!(vae_loss(&vae, &x, -0.1, &mut SeededRng::new(5, Stream::Noise)).is_err());
    }

    #[test]
    fn gradients_match_finite_differences() {
        let mut rng = SeededRng::new(23, Stream::Init);
        let mut vae = VaeModel::new(&shape(6, &[5, 4], 2), &mut rng).unwrap();
        let x = binary(&mut rng, 4, 6);
        let alpha = 0.3;
        let (_, grads) = vae_loss(&vae, &x, alpha, &mut SeededRng::new(99, Stream::Noise)).unwrap();
        let numeric = central_differences(&mut vae, 1e-5, |v| {
            Ok(vae_loss(v, &x, alpha, &mut SeededRng::new(99, Stream::Noise))?.0)
        })
        .unwrap();
        let err = max_relative_error(&grads.flatten(), &numeric);
        assert!(err < 1e-4, "max relative error {err}");
    }

    #[test]
    fn masked_elbo_counts_only_selected_cells() {
        let mut rng = SeededRng::new(31, Stream::Init);
        let vae = VaeModel::new(&shape(4, &[3], 2), &mut rng).unwrap();
        let x = binary(&mut rng, 3, 4);
        let fwd = vae.forward(&x, Noise::Mean).unwrap();
        let cols = [true, false, true, false];
        let mask = ElboMask {
            columns: Some(&cols),
            active_rows: 2,
            kl_scale: 0.5,
        };
        let terms = elbo_terms(&fwd, &x, &mask).unwrap();
        let mut expected = 0.0;
        for r in 0..2 {
            for c in [0, 2] {
                expected -= logistic_log_likelihood(&[x.get(r, c)], &[fwd.logits().get(r, c)]).unwrap();
            }
        }
        assert!((terms.reconstruction - expected).abs() < 1e-12);
        let kls = kl_divergence(&fwd.mu, &fwd.logvar).unwrap();
        assert!((terms.kl - (kls[0] + kls[1])).abs() < 1e-12);
        assert!(terms.logits_grad.row(2).iter().all(|&g| g == 0.0));
        assert_eq!(terms.logits_grad.get(0, 1), 0.0);
    }

    #[test]
    fn reconstructions_are_probabilities() {
        let mut rng = SeededRng::new(37, Stream::Init);
        let vae = VaeModel::new(&shape(8, &[6], 3), &mut rng).unwrap();
        let x = binary(&mut rng, 5, 8);
        let r = vae.reconstruct(&x).unwrap();
        assert!(r.as_slice().iter().all(|&p| p > 0.0 && p < 1.0));
    }
}
