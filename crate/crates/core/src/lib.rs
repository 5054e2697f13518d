//! Joint variational autoencoders for top-k recommendation from implicit feedback.
//!
//! A user-side VAE reconstructs the interaction matrix row by row while an
//! item-side VAE reconstructs it column by column. Their reconstructions are
//! averaged into one prediction matrix, and the pair is trained jointly on
//! both ELBO losses, optionally with a pairwise hinge ranking term.
//!
//! The crate is `no_std` (it needs `alloc`) and does no IO. File formats,
//! ingestion of raw rating files and the command-line driver live in the
//! `jova` crate.
//!
//! Module map:
//!
//! * [`matrix`], [`rng`]: dense row-major matrices and seeded random streams.
//! * [`nn`]: feed-forward networks with taped reverse-mode gradients, Adam,
//!   and a central-difference gradient checker.
//! * [`vae`]: one VAE (encoder, reparameterization, logistic decoder, ELBO).
//! * [`data`]: the split-labelled interaction matrix and the preparation
//!   steps (binarize, filter, split, stats).
//! * [`model`], [`batch`], [`loss`], [`train`]: the joint model, block
//!   mini-batches, losses and the trainer.
//! * [`metrics`], [`eval`]: top-k ranking metrics and evaluation reports.
#![no_std]

extern crate alloc;

pub mod batch;
pub mod data;
pub mod error;
pub mod eval;
pub mod loss;
pub mod matrix;
pub mod metrics;
pub mod model;
pub mod nn;
pub mod rng;
pub mod synthetic;
pub mod train;
pub mod vae;

pub use error::{Error, Result};
pub use matrix::DenseMatrix;
pub use rng::{SeededRng, Stream};
