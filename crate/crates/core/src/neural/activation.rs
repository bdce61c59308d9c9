use serde::{Deserialize, Serialize};

use super::{Ctx, Layer, LayerSpec, Tensor};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    #[default]
    Relu,
    Linear,
}

impl std::str::FromStr for Activation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "relu" => Ok(Self::Relu),
            "linear" => Ok(Self::Linear),
            other => Err(Error::invalid(format!("unknown activation `{other}`"))),
        }
    }
}

pub struct ActivationLayer {
    kind: Activation,
    input: Option<Tensor>,
}

impl ActivationLayer {
    pub fn new(kind: Activation) -> Self {
        Self { kind, input: None }
    }
}

impl Layer for ActivationLayer {
    fn forward(&mut self, x: &Tensor, _ctx: &mut Ctx) -> Result<Tensor> {
        match self.kind {
            Activation::Linear => Ok(x.clone()),
            Activation::Relu => {
                self.input = Some(x.clone());
                let mut y = x.clone();
                y.data_mut().iter_mut().for_each(|v| *v = v.max(0.0));
                Ok(y)
            }
        }
    }

    fn backward(&mut self, grad: &Tensor) -> Result<Tensor> {
        match self.kind {
            Activation::Linear => Ok(grad.clone()),
            Activation::Relu => {
                let x = self
                    .input
                    .as_ref()
                    .ok_or_else(|| Error::invalid("relu backward before forward"))?;
                let mut g = grad.clone();
                for (gv, &xv) in g.data_mut().iter_mut().zip(x.data()) {
                    if xv <= 0.0 {
                        *gv = 0.0;
                    }
                }
                Ok(g)
            }
        }
    }

    fn spec(&self) -> LayerSpec {
        match self.kind {
            Activation::Relu => LayerSpec::Relu,
            Activation::Linear => LayerSpec::Linear,
        }
    }
}

/// `[B, ...] -> [B, prod(...)]`.
#[derive(Default)]
pub struct Flatten {
    shape: Vec<usize>,
}

impl Layer for Flatten {
    fn forward(&mut self, x: &Tensor, _ctx: &mut Ctx) -> Result<Tensor> {
        self.shape = x.shape().to_vec();
        x.clone().reshape(&[x.batch(), x.item_len()])
    }

    fn backward(&mut self, grad: &Tensor) -> Result<Tensor> {
        grad.clone().reshape(&self.shape)
    }

    fn spec(&self) -> LayerSpec {
        LayerSpec::Flatten
    }
}
