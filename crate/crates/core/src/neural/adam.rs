use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::Param;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdamConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            learning_rate: 6.25e-4,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

/// Moment estimates keyed by parameter name.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct AdamState {
    pub step: u64,
    pub m: BTreeMap<String, Vec<f64>>,
    pub v: BTreeMap<String, Vec<f64>>,
}

impl AdamState {
    pub fn new() -> Self {
        Self::default()
    }

    /// One bias-corrected update of every trainable parameter. Fails without
    /// touching anything if a gradient is non-finite.
    pub fn update<'a>(
        &mut self,
        cfg: &AdamConfig,
        params: impl IntoIterator<Item = &'a mut Param>,
    ) -> Result<()> {
        let mut params: Vec<&mut Param> = params.into_iter().filter(|p| p.trainable()).collect();
        for p in &mut params {
            p.ensure_grad();
            if !p.grad.is_finite() {
                return Err(Error::NonFinite(format!("gradient of {}", p.name)));
            }
        }
        self.step += 1;
        let t = self.step as i32;
        let c1 = 1.0 - cfg.beta1.powi(t);
        let c2 = 1.0 - cfg.beta2.powi(t);
        for p in params {
            let n = p.len();
            let m = self.m.entry(p.name.clone()).or_insert_with(|| vec![0.0; n]);
            let v = self.v.entry(p.name.clone()).or_insert_with(|| vec![0.0; n]);
            if m.len() != n || v.len() != n {
                return Err(Error::ShapeMismatch {
                    op: "adam",
                    left: p.value.shape().to_vec(),
                    right: vec![m.len()],
                });
            }
            let g = p.grad.data();
            let theta = p.value.data_mut();
            for i in 0..n {
                m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * g[i];
                v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * g[i] * g[i];
                let mh = m[i] / c1;
                let vh = v[i] / c2;
                theta[i] -= cfg.learning_rate * mh / (vh.sqrt() + cfg.epsilon);
            }
        }
        Ok(())
    }
}
