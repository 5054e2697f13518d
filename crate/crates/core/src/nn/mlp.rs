use alloc::format;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::DenseMatrix;
use crate::rng::SeededRng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    Linear,
    Tanh,
    Sigmoid,
}

impl Activation {
    #[inline]
    pub fn apply(self, x: f64) -> f64 {
        match self {
            Activation::Linear => x,
            Activation::Tanh => libm::tanh(x),
            Activation::Sigmoid => sigmoid(x),
        }
    }

    /// Derivative expressed through the activation's output `y`.
    #[inline]
    fn derivative_from_output(self, y: f64) -> f64 {
        match self {
            Activation::Linear => 1.0,
            Activation::Tanh => 1.0 - y * y,
            Activation::Sigmoid => y * (1.0 - y),
        }
    }
}

/// Logistic function, evaluated without overflow for large `|x|`.
#[inline]
pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + libm::exp(-x))
    } else {
        let e = libm::exp(x);
        e / (1.0 + e)
    }
}

/// One affine map followed by an activation. `weight` is `in × out`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Layer {
    pub weight: DenseMatrix,
    pub bias: Vec<f64>,
    pub activation: Activation,
}

impl Layer {
    pub fn input_width(&self) -> usize {
        self.weight.rows()
    }

    pub fn output_width(&self) -> usize {
        self.weight.cols()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpNetwork {
    layers: Vec<Layer>,
}

/// Forward intermediates for one pass. `backward` takes it by value, so a
/// tape can only ever be consumed once:
///
/// ```compile_fail
/// # use jova_core::nn::{Activation, MlpNetwork};
/// # use jova_core::DenseMatrix;
/// let net = MlpNetwork::zeros(&[2, 2], &[Activation::Linear]).unwrap();
/// let x = DenseMatrix::zeros(1, 2);
/// let (y, tape) = net.forward(&x).unwrap();
/// net.backward(tape, &y).unwrap();
/// net.backward(tape, &y).unwrap();
/// ```
#[derive(Debug)]
pub struct Tape {
    /// `inputs[l]` is the input of layer `l`.
    inputs: Vec<DenseMatrix>,
    /// Pre-activation of the last layer.
    logits: DenseMatrix,
    /// Post-activation of the last layer.
    output: DenseMatrix,
}

impl Tape {
    pub fn logits(&self) -> &DenseMatrix {
        &self.logits
    }

    pub fn output(&self) -> &DenseMatrix {
        &self.output
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LayerGradient {
    pub weight: DenseMatrix,
    pub bias: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub layers: Vec<LayerGradient>,
}

impl Gradients {
    pub fn zeros_like(net: &MlpNetwork) -> Self {
        Self {
            layers: net
                .layers
                .iter()
                .map(|l| LayerGradient {
                    weight: DenseMatrix::zeros(l.weight.rows(), l.weight.cols()),
                    bias: alloc::vec![0.0; l.bias.len()],
                })
                .collect(),
        }
    }

    /// Parameter-ordered slices: each layer's weight, then its bias.
    pub fn slices(&self) -> Vec<&[f64]> {
        let mut out = Vec::with_capacity(self.layers.len() * 2);
        for l in &self.layers {
            out.push(l.weight.as_slice());
            out.push(l.bias.as_slice());
        }
        out
    }

    pub fn flatten(&self) -> Vec<f64> {
        self.slices().concat()
    }

    pub fn is_zero(&self) -> bool {
        self.slices().iter().all(|s| s.iter().all(|&v| v == 0.0))
    }
}

impl MlpNetwork {
    pub fn new(layers: Vec<Layer>) -> Result<Self> {
        if layers.is_empty() {
            return Err(Error::invalid("network needs at least one layer"));
        }
        for (i, l) in layers.iter().enumerate() {
            if l.weight.rows() == 0 || l.weight.cols() == 0 {
                return Err(Error::invalid(format!("layer {i} has an empty weight matrix")));
            }
            if l.bias.len() != l.output_width() {
                return Err(Error::invalid(format!(
                    "layer {i} bias has {} entries, weight has {} outputs",
                    l.bias.len(),
                    l.output_width()
                )));
            }
        }
        for (i, pair) in layers.windows(2).enumerate() {
            if pair[0].output_width() != pair[1].input_width() {
                return Err(Error::invalid(format!(
                    "layer {i} outputs {} values but layer {} expects {}",
                    pair[0].output_width(),
                    i + 1,
                    pair[1].input_width()
                )));
            }
        }
        Ok(Self { layers })
    }

    /// All-zero network. `widths` lists input width then each layer's output.
    pub fn zeros(widths: &[usize], activations: &[Activation]) -> Result<Self> {
        Self::build(widths, activations, |_, _| 0.0)
    }

    /// Glorot-uniform weights, zero biases.
    pub fn glorot(widths: &[usize], activations: &[Activation], rng: &mut SeededRng) -> Result<Self> {
        Self::build(widths, activations, |fan_in, fan_out| {
            let limit = libm::sqrt(6.0 / (fan_in + fan_out) as f64);
            (rng.uniform() * 2.0 - 1.0) * limit
        })
    }

    fn build(
        widths: &[usize],
        activations: &[Activation],
        mut init: impl FnMut(usize, usize) -> f64,
    ) -> Result<Self> {
        if widths.len() != activations.len() + 1 {
            return Err(Error::invalid(format!(
                "{} widths cannot describe {} layers",
                widths.len(),
                activations.len()
            )));
        }
        let layers = widths
            .windows(2)
            .zip(activations)
            .map(|(w, &activation)| {
                let (fan_in, fan_out) = (w[0], w[1]);
                let data = (0..fan_in * fan_out).map(|_| init(fan_in, fan_out)).collect();
                Ok(Layer {
                    weight: DenseMatrix::new(fan_in, fan_out, data)?,
                    bias: alloc::vec![0.0; fan_out],
                    activation,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(layers)
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub fn input_width(&self) -> usize {
        self.layers[0].input_width()
    }

    pub fn output_width(&self) -> usize {
        self.layers[self.layers.len() - 1].output_width()
    }

    pub fn parameter_count(&self) -> usize {
        self.layers.iter().map(|l| l.weight.as_slice().len() + l.bias.len()).sum()
    }

    pub fn parameters(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.parameter_count());
        for l in &self.layers {
            out.extend_from_slice(l.weight.as_slice());
            out.extend_from_slice(&l.bias);
        }
        out
    }

    pub fn set_parameters(&mut self, values: &[f64]) -> Result<()> {
        if values.len() != self.parameter_count() {
            return Err(Error::invalid(format!(
                "expected {} parameters, got {}",
                self.parameter_count(),
                values.len()
            )));
        }
        let mut rest = values;
        for slot in self.parameter_slices_mut() {
            let (head, tail) = rest.split_at(slot.len());
            slot.copy_from_slice(head);
            rest = tail;
        }
        Ok(())
    }

    /// Same order as [`Gradients::slices`].
    pub fn parameter_slices_mut(&mut self) -> Vec<&mut [f64]> {
        let mut out = Vec::with_capacity(self.layers.len() * 2);
        for l in &mut self.layers {
            out.push(l.weight.as_mut_slice());
            out.push(l.bias.as_mut_slice());
        }
        out
    }

    pub fn is_finite(&self) -> bool {
        self.layers
            .iter()
            .all(|l| l.weight.is_finite() && l.bias.iter().all(|b| b.is_finite()))
    }

    fn check_input(&self, input: &DenseMatrix) -> Result<()> {
        if input.cols() != self.input_width() {
            return Err(Error::shape(
                "network input",
                input.shape(),
                (self.input_width(), self.layers[0].output_width()),
            ));
        }
        Ok(())
    }

    pub fn forward(&self, input: &DenseMatrix) -> Result<(DenseMatrix, Tape)> {
        self.check_input(input)?;
        let mut inputs = Vec::with_capacity(self.layers.len());
        let mut current = input.clone();
        let last = self.layers.len() - 1;
        for (l, layer) in self.layers.iter().enumerate() {
            let mut pre = current.matmul(&layer.weight)?;
            pre.add_row_vector(&layer.bias)?;
            let act = layer.activation;
            let post = pre.map(|v| act.apply(v));
            inputs.push(current);
            if l == last {
                let tape = Tape {
                    inputs,
                    logits: pre,
                    output: post.clone(),
                };
                return Ok((post, tape));
            }
            current = post;
        }
        unreachable!("network has at least one layer")
    }

    /// Forward pass without recording a tape.
    pub fn infer(&self, input: &DenseMatrix) -> Result<DenseMatrix> {
        self.check_input(input)?;
        let mut current = input.matmul(&self.layers[0].weight)?;
        current.add_row_vector(&self.layers[0].bias)?;
        let act = self.layers[0].activation;
        current.as_mut_slice().iter_mut().for_each(|v| *v = act.apply(*v));
        for layer in &self.layers[1..] {
            current = current.matmul(&layer.weight)?;
            current.add_row_vector(&layer.bias)?;
            let act = layer.activation;
            current.as_mut_slice().iter_mut().for_each(|v| *v = act.apply(*v));
        }
        Ok(current)
    }

    /// Reverse pass from the gradient of the loss w.r.t. the network output.
    /// Returns parameter gradients and the gradient w.r.t. the input.
    pub fn backward(&self, tape: Tape, output_grad: &DenseMatrix) -> Result<(Gradients, DenseMatrix)> {
        if output_grad.shape() != tape.output.shape() {
            return Err(Error::shape("backward", output_grad.shape(), tape.output.shape()));
        }
        let act = self.layers[self.layers.len() - 1].activation;
        let mut delta = output_grad.clone();
        for (d, &y) in delta.as_mut_slice().iter_mut().zip(tape.output.as_slice()) {
            *d *= act.derivative_from_output(y);
        }
        self.backward_from_logits(tape, delta)
    }

    /// Reverse pass from the gradient w.r.t. the last layer's pre-activation.
    pub fn backward_logits(&self, tape: Tape, logits_grad: &DenseMatrix) -> Result<(Gradients, DenseMatrix)> {
        if logits_grad.shape() != tape.logits.shape() {
            return Err(Error::shape("backward_logits", logits_grad.shape(), tape.logits.shape()));
        }
        self.backward_from_logits(tape, logits_grad.clone())
    }

    fn backward_from_logits(&self, tape: Tape, mut delta: DenseMatrix) -> Result<(Gradients, DenseMatrix)> {
        let mut grads = Vec::with_capacity(self.layers.len());
        let mut inputs = tape.inputs;
        for l in (0..self.layers.len()).rev() {
            let layer = &self.layers[l];
            let input = inputs.pop().expect("one recorded input per layer");
            grads.push(LayerGradient {
                weight: input.matmul_tn(&delta)?,
                bias: delta.column_sums(),
            });
            let mut input_grad = delta.matmul_nt(&layer.weight)?;
            if l > 0 {
                let act = self.layers[l - 1].activation;
                for (g, &y) in input_grad.as_mut_slice().iter_mut().zip(input.as_slice()) {
                    *g *= act.derivative_from_output(y);
                }
            }
            delta = input_grad;
        }
        grads.reverse();
        Ok((Gradients { layers: grads }, delta))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::gradcheck::finite_diff_check;
    use crate::rng::Stream;
    use alloc::vec;

    #[test]
    fn identity_linear_layer_passes_input_through() {
        let net = MlpNetwork::new(vec![Layer {
            weight: DenseMatrix::identity(3),
            bias: vec![0.0; 3],
            activation: Activation::Linear,
        }])
        .unwrap();
        let x = DenseMatrix::from_rows(&[[0.1, -2.0, 5.0], [1.0, 2.0, 3.0]]).unwrap();
        assert_eq!(net.forward(&x).unwrap().0, x);
    }

    #[test]
    fn zero_sigmoid_layer_outputs_half() {
        let net = MlpNetwork::zeros(&[4, 3], &[Activation::Sigmoid]).unwrap();
        let x = DenseMatrix::filled(2, 4, 0.7);
        let (y, _) = net.forward(&x).unwrap();
        assert!(y.as_slice().iter().all(|&v| v == 0.5));
    }

    #[test]
    fn scalar_tanh() {
        let net = MlpNetwork::new(vec![Layer {
            weight: DenseMatrix::from_rows(&[[1.0]]).unwrap(),
            bias: vec![0.0],
            activation: Activation::Tanh,
        }])
        .unwrap();
        let (y, _) = net.forward(&DenseMatrix::from_rows(&[[0.5]]).unwrap()).unwrap();
        assert!((y.get(0, 0) - 0.46211715726000974).abs() < 1e-15);
    }

    #[test]
    fn width_mismatch_is_rejected() {
        let net = MlpNetwork::zeros(&[4, 3], &[Activation::Tanh]).unwrap();
        assert!(matches!(net.forward(&DenseMatrix::zeros(1, 5)), Err(Error::Shape { .. })));
        assert!(MlpNetwork::new(vec![
            Layer {
                weight: DenseMatrix::zeros(2, 3),
                bias: vec![0.0; 3],
                activation: Activation::Tanh
            },
            Layer {
                weight: DenseMatrix::zeros(4, 1),
                bias: vec![0.0],
                activation: Activation::Linear
            },
        ])
        .is_err());
    }

    #[test]
    fn zero_output_grad_gives_zero_gradients() {
        let mut rng = SeededRng::new(5, Stream::Init);
        let net = MlpNetwork::glorot(&[3, 4, 2], &[Activation::Tanh, Activation::Sigmoid], &mut rng).unwrap();
        let x = DenseMatrix::filled(2, 3, 0.3);
        let (y, tape) = net.forward(&x).unwrap();
        let (grads, _) = net.backward(tape, &DenseMatrix::zeros(y.rows(), y.cols())).unwrap();
        assert!(grads.is_zero());
    }

    #[test]
    fn scalar_linear_chain_rule() {
        let net = MlpNetwork::new(vec![Layer {
            weight: DenseMatrix::from_rows(&[[0.7]]).unwrap(),
            bias: vec![0.1],
            activation: Activation::Linear,
        }])
        .unwrap();
        let (_, tape) = net.forward(&DenseMatrix::from_rows(&[[2.0]]).unwrap()).unwrap();
        let (grads, dx) = net.backward(tape, &DenseMatrix::from_rows(&[[1.0]]).unwrap()).unwrap();
        assert_eq!(grads.layers[0].weight.get(0, 0), 2.0);
        assert_eq!(grads.layers[0].bias[0], 1.0);
        assert_eq!(dx.get(0, 0), 0.7);
    }

    #[test]
    fn output_grad_shape_is_checked() {
        let net = MlpNetwork::zeros(&[2, 2], &[Activation::Linear]).unwrap();
        let (_, tape) = net.forward(&DenseMatrix::zeros(3, 2)).unwrap();
        assert!(net.backward(tape, &DenseMatrix::zeros(2, 2)).is_err());
    }

    #[test]
    fn activation_ranges() {
        let mut rng = SeededRng::new(9, Stream::Init);
        for _ in 0..10_000 {
            let x = (rng.uniform() - 0.5) * 60.0;
            let s = Activation::Sigmoid.apply(x);
            let t = Activation::Tanh.apply(x);
            assert!(s >= 0.0 && s <= 1.0);
            assert!((-1.0..=1.0).contains(&t));
            if x.abs() < 15.0 {
                assert!(s > 0.0 && s < 1.0 && t > -1.0 && t < 1.0);
            }
        }
    }

    #[test]
    fn backward_matches_finite_differences_for_each_activation_mix() {
        let mut rng = SeededRng::new(21, Stream::Init);
        let mixes = [
            [Activation::Tanh, Activation::Tanh, Activation::Sigmoid],
            [Activation::Sigmoid, Activation::Tanh, Activation::Linear],
            [Activation::Linear, Activation::Sigmoid, Activation::Tanh],
        ];
        for acts in mixes {
            let net = MlpNetwork::glorot(&[4, 5, 3, 2], &acts, &mut rng).unwrap();
            let x = rng.standard_normal_matrix(3, 4);
            let target = rng.standard_normal_matrix(3, 2);
            let err = finite_diff_check(
                &net,
                |y| {
                    let diff = y.sub(&target).unwrap();
                    let loss = 0.5 * diff.as_slice().iter().map(|d| d * d).sum::<f64>();
                    (loss, diff)
                },
                &x,
                1e-5,
            )
            .unwrap();
            assert!(err < 1e-4, "{acts:?}: max relative error {err}");
        }
    }

    #[test]
    fn parameters_round_trip() {
        let mut rng = SeededRng::new(2, Stream::Init);
        let mut net = MlpNetwork::glorot(&[3, 2, 2], &[Activation::Tanh, Activation::Linear], &mut rng).unwrap();
        let p = net.parameters();
        assert_eq!(p.len(), net.parameter_count());
        let doubled: Vec<f64> = p.iter().map(|v| v * 2.0).collect();
        net.set_parameters(&doubled).unwrap();
        assert_eq!(net.parameters(), doubled);
        assert!(net.set_parameters(&doubled[1..]).is_err());
    }
}
