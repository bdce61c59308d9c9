use super::{Ctx, Layer, LayerSpec, Param, ParamKind, Tensor};
use crate::error::{Error, Result};

pub const BN_EPS: f64 = 1e-5;
pub const BN_MOMENTUM: f64 = 0.1;

/// Per-channel batch normalisation over `[B, C]` or `[B, C, H, W]` inputs.
///
/// Training uses batch statistics and updates the running estimates;
/// inference uses the running estimates.
pub struct BatchNorm {
    pub gamma: Param,
    pub beta: Param,
    pub running_mean: Param,
    pub running_var: Param,
    eps: f64,
    cache: Option<Cache>,
}

struct Cache {
    shape: Vec<usize>,
    xhat: Vec<f64>,
    inv_std: Vec<f64>,
    train: bool,
}

impl BatchNorm {
    pub fn new(name: &str, channels: usize) -> Self {
        Self::with_eps(name, channels, BN_EPS)
    }

    pub fn with_eps(name: &str, channels: usize, eps: f64) -> Self {
        Self {
            gamma: Param::filled(format!("{name}.gamma"), ParamKind::Norm, &[channels], 1.0),
            beta: Param::zeros(format!("{name}.beta"), ParamKind::Norm, &[channels]),
            running_mean: Param::zeros(format!("{name}.running_mean"), ParamKind::Buffer, &[channels]),
            running_var: Param::filled(format!("{name}.running_var"), ParamKind::Buffer, &[channels], 1.0),
            eps,
            cache: None,
        }
    }

    pub fn channels(&self) -> usize {
        self.gamma.len()
    }

    /// `(batch, channels, spatial)` for a supported input shape.
    fn layout(&self, shape: &[usize]) -> Result<(usize, usize, usize)> {
        let ok = matches!(shape.len(), 2 | 4) && shape[1] == self.channels();
        if !ok {
            return Err(Error::ShapeMismatch {
                op: "batchnorm",
                left: shape.to_vec(),
                right: vec![self.channels()],
            });
        }
        let spatial = shape[2..].iter().product();
        Ok((shape[0], shape[1], spatial))
    }
}

impl Layer for BatchNorm {
    fn forward(&mut self, x: &Tensor, ctx: &mut Ctx) -> Result<Tensor> {
        let (batch, c_n, sp) = self.layout(x.shape())?;
        let n = batch * sp;
        if ctx.train && batch < 2 {
            return Err(Error::invalid(format!(
                "batch norm needs at least 2 samples per training batch, got {batch}"
            )));
        }
        let xd = x.data();
        let idx = |b: usize, c: usize, s: usize| (b * c_n + c) * sp + s;
        let mut mean = vec![0.0; c_n];
        let mut var = vec![0.0; c_n];
        if ctx.train {
            for c in 0..c_n {
                let mut sum = 0.0;
                for b in 0..batch {
                    for s in 0..sp {
                        sum += xd[idx(b, c, s)];
                    }
                }
                let m = sum / n as f64;
                let mut ss = 0.0;
                for b in 0..batch {
                    for s in 0..sp {
                        let d = xd[idx(b, c, s)] - m;
                        ss += d * d;
                    }
                }
                mean[c] = m;
                var[c] = ss / n as f64;
            }
            let rm = self.running_mean.value.data_mut();
            for c in 0..c_n {
                rm[c] = (1.0 - BN_MOMENTUM) * rm[c] + BN_MOMENTUM * mean[c];
            }
            let rv = self.running_var.value.data_mut();
            for c in 0..c_n {
                let unbiased = if n > 1 { var[c] * n as f64 / (n - 1) as f64 } else { var[c] };
                rv[c] = (1.0 - BN_MOMENTUM) * rv[c] + BN_MOMENTUM * unbiased;
            }
        } else {
            mean.copy_from_slice(self.running_mean.value.data());
            var.copy_from_slice(self.running_var.value.data());
        }
        let inv_std: Vec<f64> = var.iter().map(|v| 1.0 / (v + self.eps).sqrt()).collect();
        let gamma = self.gamma.value.data();
        let beta = self.beta.value.data();
        let mut xhat = vec![0.0; x.len()];
        let mut out = vec![0.0; x.len()];
        for b in 0..batch {
            for c in 0..c_n {
                for s in 0..sp {
                    let i = idx(b, c, s);
                    xhat[i] = (xd[i] - mean[c]) * inv_std[c];
                    out[i] = gamma[c] * xhat[i] + beta[c];
                }
            }
        }
        self.cache = Some(Cache {
            shape: x.shape().to_vec(),
            xhat,
            inv_std,
            train: ctx.train,
        });
        Tensor::new(x.shape().to_vec(), out)
    }

    fn backward(&mut self, grad: &Tensor) -> Result<Tensor> {
        let cache = self
            .cache
            .as_ref()
            .ok_or_else(|| Error::invalid("batchnorm backward before forward"))?;
        if grad.shape() != cache.shape.as_slice() {
            return Err(Error::ShapeMismatch {
                op: "batchnorm backward",
                left: grad.shape().to_vec(),
                right: cache.shape.clone(),
            });
        }
        let (batch, c_n, sp) = self.layout(&cache.shape)?;
        let n = (batch * sp) as f64;
        let idx = |b: usize, c: usize, s: usize| (b * c_n + c) * sp + s;
        let gd = grad.data();
        let gamma = self.gamma.value.data();
        let mut dx = vec![0.0; grad.len()];
        let mut dgamma = vec![0.0; c_n];
        let mut dbeta = vec![0.0; c_n];
        for c in 0..c_n {
            let (mut sum_g, mut sum_gx) = (0.0, 0.0);
            for b in 0..batch {
                for s in 0..sp {
                    let i = idx(b, c, s);
                    sum_g += gd[i];
                    sum_gx += gd[i] * cache.xhat[i];
                }
            }
            dbeta[c] = sum_g;
            dgamma[c] = sum_gx;
            let scale = gamma[c] * cache.inv_std[c];
            for b in 0..batch {
                for s in 0..sp {
                    let i = idx(b, c, s);
                    dx[i] = if cache.train {
                        scale * (gd[i] - sum_g / n - cache.xhat[i] * sum_gx / n)
                    } else {
                        scale * gd[i]
                    };
                }
            }
        }
        for (g, d) in self.gamma.grad.data_mut().iter_mut().zip(&dgamma) {
            *g += d;
        }
        for (g, d) in self.beta.grad.data_mut().iter_mut().zip(&dbeta) {
            *g += d;
        }
        Tensor::new(cache.shape.clone(), dx)
    }

    fn spec(&self) -> LayerSpec {
        LayerSpec::Batchnorm {
            channels: self.channels(),
        }
    }

    fn params(&self) -> Vec<&Param> {
        vec![&self.gamma, &self.beta, &self.running_mean, &self.running_var]
    }

    fn params_mut(&mut self) -> Vec<&mut Param> {
        vec![
            &mut self.gamma,
            &mut self.beta,
            &mut self.running_mean,
            &mut self.running_var,
        ]
    }
}
