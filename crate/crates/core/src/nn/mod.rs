//! Feed-forward networks with exact taped gradients, Adam, and a
//! finite-difference checker.

pub mod adam;
pub mod gradcheck;
mod mlp;

pub use adam::{Adam, AdamConfig};
pub use mlp::{sigmoid, Activation, Gradients, Layer, LayerGradient, MlpNetwork, Tape};
