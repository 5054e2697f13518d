//! Seeded random streams.
//!
//! A run has one user-facing seed. Each consumer (splitting, initialization,
//! shuffling, negative sampling, reparameterization noise) draws from its own
//! ChaCha stream derived from that seed, so adding draws in one place never
//! shifts the sequence seen by another.

use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::matrix::DenseMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Stream {
    Split = 1,
    Init = 2,
    Shuffle = 3,
    Negatives = 4,
    Noise = 5,
    Synthetic = 6,
}

#[derive(Debug, Clone)]
pub struct SeededRng {
    seed: u64,
    inner: ChaCha8Rng,
}

impl SeededRng {
    pub fn new(seed: u64, stream: Stream) -> Self {
        let mut inner = ChaCha8Rng::seed_from_u64(seed);
        inner.set_stream(stream as u64);
        Self { seed, inner }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Uniform draw from `[0, 1)`.
    pub fn uniform(&mut self) -> f64 {
        self.inner.random::<f64>()
    }

    /// Uniform integer from `0..n`. `n` must be positive.
    pub fn below(&mut self, n: usize) -> usize {
        self.inner.random_range(0..n)
    }

    pub fn standard_normal(&mut self) -> f64 {
        StandardNormal.sample(&mut self.inner)
    }

    /// A `rows × cols` matrix of i.i.d. N(0, 1) draws, filled row-major.
    pub fn standard_normal_matrix(&mut self, rows: usize, cols: usize) -> DenseMatrix {
        let data: Vec<f64> = (0..rows * cols).map(|_| self.standard_normal()).collect();
        DenseMatrix::new(rows, cols, data).expect("length matches shape")
    }

    pub fn shuffle<T>(&mut self, items: &mut [T]) {
        items.shuffle(&mut self.inner);
    }
}

impl RngCore for SeededRng {
    fn next_u32(&mut self) -> u32 {
        self.inner.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.inner.fill_bytes(dst)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn same_seed_same_stream() {
        let a = SeededRng::new(42, Stream::Noise).standard_normal_matrix(7, 9);
        let b = SeededRng::new(42, Stream::Noise).standard_normal_matrix(7, 9);
        assert_eq!(a.as_slice(), b.as_slice());
    }

    #[test]
    fn streams_are_independent() {
        let a = SeededRng::new(42, Stream::Noise).standard_normal_matrix(1, 8);
        let b = SeededRng::new(42, Stream::Init).standard_normal_matrix(1, 8);
        assert_ne!(a.as_slice(), b.as_slice());
    }

    #[test]
    fn normal_moments() {
        let m = SeededRng::new(7, Stream::Noise).standard_normal_matrix(1000, 1000);
        let n = m.as_slice().len() as f64;
        let mean = m.as_slice().iter().sum::<f64>() / n;
        let var = m.as_slice().iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
        assert!((-0.01..=0.01).contains(&mean), "mean {mean}");
        assert!((0.99..=1.01).contains(&var), "variance {var}");
    }

    #[test]
    fn below_stays_in_range() {
        let mut rng = SeededRng::new(1, Stream::Negatives);
        assert!((0..1000).all(|_| rng.below(3) < 3));
    }
}
