use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::Tensor;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ParamKind {
    /// Subject to the L2 penalty.
    Weight,
    Bias,
    /// Batch-norm scale and shift.
    Norm,
    /// Non-trainable state such as running statistics.
    Buffer,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Param {
    pub name: String,
    pub kind: ParamKind,
    pub value: Tensor,
    #[serde(skip, default = "empty_tensor")]
    pub grad: Tensor,
}

fn empty_tensor() -> Tensor {
    Tensor::zeros(&[0])
}

impl Param {
    pub fn new(name: impl Into<String>, kind: ParamKind, value: Tensor) -> Self {
        let grad = Tensor::zeros(value.shape());
        Self {
            name: name.into(),
            kind,
            value,
            grad,
        }
    }

    pub fn zeros(name: impl Into<String>, kind: ParamKind, shape: &[usize]) -> Self {
        Self::new(name, kind, Tensor::zeros(shape))
    }

    pub fn filled(name: impl Into<String>, kind: ParamKind, shape: &[usize], v: f64) -> Self {
        Self::new(name, kind, Tensor::from_fn(shape, |_| v))
    }

    pub fn uniform(name: impl Into<String>, shape: &[usize], bound: f64, rng: &mut ChaCha8Rng) -> Self {
        Self::new(
            name,
            ParamKind::Weight,
            Tensor::from_fn(shape, |_| rng.gen_range(-bound..bound)),
        )
    }

    pub fn trainable(&self) -> bool {
        self.kind != ParamKind::Buffer
    }

    pub fn zero_grad(&mut self) {
        if self.grad.shape() != self.value.shape() {
            self.grad = Tensor::zeros(self.value.shape());
        } else {
            self.grad.fill(0.0);
        }
    }

    /// Allocates a zero gradient if the current one has the wrong shape.
    pub fn ensure_grad(&mut self) {
        if self.grad.shape() != self.value.shape() {
            self.grad = Tensor::zeros(self.value.shape());
        }
    }

    pub fn len(&self) -> usize {
        self.value.len()
    }

    pub fn is_empty(&self) -> bool {
        self.value.is_empty()
    }
}
