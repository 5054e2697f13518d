use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdamConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl AdamConfig {
    pub fn with_learning_rate(learning_rate: f64) -> Self {
        Self {
            learning_rate,
            ..Self::default()
        }
    }
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            learning_rate: 0.003,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

/// Adam with bias-corrected moment estimates.
///
/// Moments are stored per parameter slice, mirroring whatever slice layout
/// the owner hands to [`Adam::step`].
#[derive(Debug, Clone)]
pub struct Adam {
    config: AdamConfig,
    first: Vec<Vec<f64>>,
    second: Vec<Vec<f64>>,
    steps: u64,
}

impl Adam {
    pub fn new(config: AdamConfig, slice_lengths: impl IntoIterator<Item = usize>) -> Self {
        let first: Vec<Vec<f64>> = slice_lengths.into_iter().map(|n| vec![0.0; n]).collect();
        let second = first.clone();
        Self {
            config,
            first,
            second,
            steps: 0,
        }
    }

    pub fn config(&self) -> &AdamConfig {
        &self.config
    }

    pub fn steps(&self) -> u64 {
        self.steps
    }

    pub fn step(&mut self, params: &mut [&mut [f64]], grads: &[&[f64]]) -> Result<()> {
        if params.len() != self.first.len() || grads.len() != self.first.len() {
            return Err(Error::invalid(format!(
                "adam tracks {} slices, got {} parameter and {} gradient slices",
                self.first.len(),
                params.len(),
                grads.len()
            )));
        }
        for (i, ((p, g), m)) in params.iter().zip(grads).zip(&self.first).enumerate() {
            if p.len() != m.len() || g.len() != m.len() {
                return Err(Error::invalid(format!(
                    "slice {i}: state has {} entries, parameters {}, gradients {}",
                    m.len(),
                    p.len(),
                    g.len()
                )));
            }
        }

        self.steps += 1;
        let AdamConfig {
            learning_rate,
            beta1,
            beta2,
            epsilon,
        } = self.config;
        let t = self.steps as i32;
        let correction1 = 1.0 - libm::pow(beta1, t as f64);
        let correction2 = 1.0 - libm::pow(beta2, t as f64);

        for ((p, g), (m, v)) in params
            .iter_mut()
            .zip(grads)
            .zip(self.first.iter_mut().zip(self.second.iter_mut()))
        {
            for i in 0..p.len() {
                let gi = g[i];
                m[i] = beta1 * m[i] + (1.0 - beta1) * gi;
                v[i] = beta2 * v[i] + (1.0 - beta2) * gi * gi;
                let m_hat = m[i] / correction1;
                let v_hat = v[i] / correction2;
                let update = learning_rate * m_hat / (libm::sqrt(v_hat) + epsilon);
                // Subtracting a signed zero can flip the sign of a zero parameter.
                if update != 0.0 {
                    p[i] -= update;
                }
            }
        }
        Ok(())
    }
}
