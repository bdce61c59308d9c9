//! A small neural toolkit with hand-written backward passes.
//!
//! Every layer caches what it needs during `forward` and produces input
//! gradients in `backward`, accumulating parameter gradients into its
//! [`Param`]s. Layers operate on batches: the leading tensor axis is the batch.

mod activation;
mod adam;
mod attention;
mod batchnorm;
mod conv;
mod dense;
mod dropout;
mod gradcheck;
mod loss;
mod lstm;
mod param;
mod tensor;

pub use activation::{Activation, ActivationLayer, Flatten};
pub use adam::{AdamConfig, AdamState};
pub use attention::Attention;
pub use batchnorm::BatchNorm;
pub use conv::{Conv2d, MaxPool2};
pub use dense::Dense;
pub use dropout::Dropout;
pub use gradcheck::{grad_check, BlockError, Differentiable, GradCheckOptions, GradCheckReport};
pub use loss::{
    add_l2_grad, cross_entropy, l2_penalty, softmax, softmax_cross_entropy, LOG_EPS,
};
pub use lstm::{BiLstm, LstmParams};
pub use param::{Param, ParamKind};
pub use tensor::Tensor;

use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::Result;

/// Forward-pass context: training flag and the explicit random source.
pub struct Ctx<'a> {
    pub train: bool,
    pub rng: &'a mut ChaCha8Rng,
}

/// Layer kind and hyperparameters, recorded in checkpoints.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LayerSpec {
    Dense { inputs: usize, outputs: usize },
    Conv2d { in_channels: usize, filters: usize, kernel: usize, stride: usize },
    Maxpool { size: usize },
    Batchnorm { channels: usize },
    Dropout { rate: f64 },
    Bilstm { inputs: usize, hidden: usize },
    Attention { hidden: usize },
    Relu,
    Linear,
    Flatten,
    Softmax,
}

pub trait Layer: Send {
    fn forward(&mut self, x: &Tensor, ctx: &mut Ctx) -> Result<Tensor>;
    /// Gradient w.r.t. the last forward input; accumulates parameter gradients.
    fn backward(&mut self, grad: &Tensor) -> Result<Tensor>;
    fn spec(&self) -> LayerSpec;
    fn params(&self) -> Vec<&Param> {
        Vec::new()
    }
    fn params_mut(&mut self) -> Vec<&mut Param> {
        Vec::new()
    }
}

/// Layers applied in order.
#[derive(Default)]
pub struct Sequential {
    layers: Vec<Box<dyn Layer>>,
}

impl Sequential {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, layer: impl Layer + 'static) {
        self.layers.push(Box::new(layer));
    }

    pub fn len(&self) -> usize {
        self.layers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.layers.is_empty()
    }

    pub fn specs(&self) -> Vec<LayerSpec> {
        self.layers.iter().map(|l| l.spec()).collect()
    }
}

impl Layer for Sequential {
    fn forward(&mut self, x: &Tensor, ctx: &mut Ctx) -> Result<Tensor> {
        let mut cur = x.clone();
        for layer in &mut self.layers {
            cur = layer.forward(&cur, ctx)?;
        }
        Ok(cur)
    }

    fn backward(&mut self, grad: &Tensor) -> Result<Tensor> {
        let mut g = grad.clone();
        for layer in self.layers.iter_mut().rev() {
            g = layer.backward(&g)?;
        }
        Ok(g)
    }

    fn spec(&self) -> LayerSpec {
        LayerSpec::Flatten
    }

    fn params(&self) -> Vec<&Param> {
        self.layers.iter().flat_map(|l| l.params()).collect()
    }

    fn params_mut(&mut self) -> Vec<&mut Param> {
        self.layers.iter_mut().flat_map(|l| l.params_mut()).collect()
    }
}

/// Uniform Glorot bound `sqrt(6 / (fan_in + fan_out))`.
pub(crate) fn glorot_bound(fan_in: usize, fan_out: usize) -> f64 {
    (6.0 / (fan_in + fan_out) as f64).sqrt()
}
