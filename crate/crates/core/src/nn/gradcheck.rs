//! Central-difference gradient checking.
//!
//! Relative error between an analytic value `a` and a numeric value `n` is
//! `|a − n| / max(|a|, |n|, RELATIVE_ERROR_FLOOR)`: components smaller than
//! the floor are compared absolutely, since central differences of an O(10)
//! loss carry round-off around 1e-10 regardless of the gradient's size.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::matrix::DenseMatrix;
use crate::nn::MlpNetwork;

pub const RELATIVE_ERROR_FLOOR: f64 = 1e-3;

/// Anything with a flat, ordered parameter vector.
pub trait Parameters {
    fn parameters(&self) -> Vec<f64>;
    fn set_parameters(&mut self, values: &[f64]) -> Result<()>;
}

impl Parameters for MlpNetwork {
    fn parameters(&self) -> Vec<f64> {
        MlpNetwork::parameters(self)
    }

    fn set_parameters(&mut self, values: &[f64]) -> Result<()> {
        MlpNetwork::set_parameters(self, values)
    }
}

pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    let scale = analytic.abs().max(numeric.abs()).max(RELATIVE_ERROR_FLOOR);
    (analytic - numeric).abs() / scale
}

pub fn max_relative_error(analytic: &[f64], numeric: &[f64]) -> f64 {
    assert_eq!(analytic.len(), numeric.len(), "gradient vectors differ in length");
    analytic
        .iter()
        .zip(numeric)
        .map(|(&a, &n)| relative_error(a, n))
        .fold(0.0, f64::max)
}

/// Numeric gradient of `loss` w.r.t. every parameter of `model`, by central
/// differences with step `h`. Parameters are restored afterwards.
pub fn central_differences<P: Parameters>(
    model: &mut P,
    h: f64,
    mut loss: impl FnMut(&P) -> Result<f64>,
) -> Result<Vec<f64>> {
    if !(h > 0.0) {
        return Err(Error::invalid("finite-difference step must be positive"));
    }
    let base = model.parameters();
    let mut probe = base.clone();
    let mut numeric = Vec::with_capacity(base.len());
    for i in 0..base.len() {
        probe[i] = base[i] + h;
        model.set_parameters(&probe)?;
        let plus = loss(model)?;
        probe[i] = base[i] - h;
        model.set_parameters(&probe)?;
        let minus = loss(model)?;
        probe[i] = base[i];
        numeric.push((plus - minus) / (2.0 * h));
    }
    model.set_parameters(&base)?;
    Ok(numeric)
}

/// Compares `backward` against central differences for a scalar loss of the
/// network output. `loss` returns the value and its gradient w.r.t. the output.
pub fn finite_diff_check(
    net: &MlpNetwork,
    loss: impl Fn(&DenseMatrix) -> (f64, DenseMatrix),
    input: &DenseMatrix,
    h: f64,
) -> Result<f64> {
    if !(h > 0.0) {
        return Err(Error::invalid("finite-difference step must be positive"));
    }
    let (output, tape) = net.forward(input)?;
    let (_, output_grad) = loss(&output);
    let (grads, _) = net.backward(tape, &output_grad)?;
    let analytic = grads.flatten();

    let mut probe = net.clone();
    let numeric = central_differences(&mut probe, h, |n| Ok(loss(&n.infer(input)?).0))?;
    Ok(max_relative_error(&analytic, &numeric))
}
