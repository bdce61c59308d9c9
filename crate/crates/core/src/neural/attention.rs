use rand_chacha::ChaCha8Rng;

use super::tensor::{axpy, dot};
use super::{glorot_bound, Ctx, Layer, LayerSpec, Param, ParamKind, Tensor};
use crate::error::{Error, Result};

/// Additive attention pooling over `[B, T, h]`:
/// `u_t = w . tanh(W o_t + b)`, `alpha = softmax(u)`, `y = sum_t alpha_t o_t`.
pub struct Attention {
    pub w: Param,
    pub b: Param,
    pub v: Param,
    cache: Option<Cache>,
}

struct Cache {
    input: Tensor,
    /// `tanh(W o_t + b)` per batch and step, `[B, T, h]`.
    hidden: Vec<f64>,
    alpha: Vec<f64>,
}

impl Attention {
    pub fn new(name: &str, hidden: usize, rng: &mut ChaCha8Rng) -> Self {
        Self {
            w: Param::uniform(format!("{name}.w"), &[hidden, hidden], glorot_bound(hidden, hidden), rng),
            b: Param::zeros(format!("{name}.b"), ParamKind::Bias, &[hidden]),
            v: Param::uniform(format!("{name}.v"), &[hidden], glorot_bound(hidden, 1), rng),
            cache: None,
        }
    }

    pub fn hidden(&self) -> usize {
        self.b.len()
    }

    /// Attention weights `[B, T]` from the last forward pass.
    pub fn last_weights(&self) -> Option<Tensor> {
        let c = self.cache.as_ref()?;
        let s = c.input.shape();
        Tensor::new(vec![s[0], s[1]], c.alpha.clone()).ok()
    }
}

impl Layer for Attention {
    fn forward(&mut self, x: &Tensor, _ctx: &mut Ctx) -> Result<Tensor> {
        let h = self.hidden();
        if x.rank() != 3 || x.shape()[2] != h || x.shape()[1] == 0 {
            return Err(Error::ShapeMismatch {
                op: "attention",
                left: x.shape().to_vec(),
                right: vec![h],
            });
        }
        let (batch, steps) = (x.shape()[0], x.shape()[1]);
        let w = self.w.value.data();
        let bias = self.b.value.data();
        let v = self.v.value.data();
        let mut hidden = vec![0.0; batch * steps * h];
        let mut alpha = vec![0.0; batch * steps];
        let mut out = vec![0.0; batch * h];
        for b in 0..batch {
            let seq = x.item(b);
            let scores = &mut alpha[b * steps..(b + 1) * steps];
            for t in 0..steps {
                let o = &seq[t * h..(t + 1) * h];
                let hid = &mut hidden[(b * steps + t) * h..(b * steps + t + 1) * h];
                for (r, hr) in hid.iter_mut().enumerate() {
                    let row = &w[r * h..(r + 1) * h];
                    *hr = (bias[r] + dot(row, o)).tanh();
                }
                scores[t] = dot(hid, v);
            }
            let m = scores.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let mut z = 0.0;
            for s in scores.iter_mut() {
                *s = (*s - m).exp();
                z += *s;
            }
            for s in scores.iter_mut() {
                *s /= z;
            }
            let y = &mut out[b * h..(b + 1) * h];
            for t in 0..steps {
                for (yj, oj) in y.iter_mut().zip(&seq[t * h..(t + 1) * h]) {
                    *yj += scores[t] * oj;
                }
            }
        }
        self.cache = Some(Cache {
            input: x.clone(),
            hidden,
            alpha,
        });
        Tensor::new(vec![batch, h], out)
    }

    fn backward(&mut self, grad: &Tensor) -> Result<Tensor> {
        let c = self
            .cache
            .as_ref()
            .ok_or_else(|| Error::invalid("attention backward before forward"))?;
        let h = self.hidden();
        let (batch, steps) = (c.input.shape()[0], c.input.shape()[1]);
        if grad.shape() != [batch, h] {
            return Err(Error::ShapeMismatch {
                op: "attention backward",
                left: grad.shape().to_vec(),
                right: vec![batch, h],
            });
        }
        let w = self.w.value.data().to_vec();
        let v = self.v.value.data().to_vec();
        let mut dx = vec![0.0; c.input.len()];
        let mut dw = vec![0.0; h * h];
        let mut db = vec![0.0; h];
        let mut dv = vec![0.0; h];
        let mut dpre = vec![0.0; h];
        for b in 0..batch {
            let seq = c.input.item(b);
            let gy = grad.item(b);
            let alpha = &c.alpha[b * steps..(b + 1) * steps];
            // d alpha_t = gy . o_t, then through the softmax.
            let dalpha: Vec<f64> = (0..steps)
                .map(|t| gy.iter().zip(&seq[t * h..(t + 1) * h]).map(|(a, b)| a * b).sum())
                .collect();
            let dot: f64 = alpha.iter().zip(&dalpha).map(|(a, d)| a * d).sum();
            for t in 0..steps {
                let du = alpha[t] * (dalpha[t] - dot);
                let o = &seq[t * h..(t + 1) * h];
                let hid = &c.hidden[(b * steps + t) * h..(b * steps + t + 1) * h];
                let dxt = &mut dx[(b * steps + t) * h..(b * steps + t + 1) * h];
                for j in 0..h {
                    dxt[j] += alpha[t] * gy[j];
                    dv[j] += du * hid[j];
                    dpre[j] = du * v[j] * (1.0 - hid[j] * hid[j]);
                    db[j] += dpre[j];
                }
                for r in 0..h {
                    let dp = dpre[r];
                    if dp == 0.0 {
                        continue;
                    }
                    axpy(dp, o, &mut dw[r * h..(r + 1) * h]);
                    axpy(dp, &w[r * h..(r + 1) * h], dxt);
                }
            }
        }
        for (g, d) in self.w.grad.data_mut().iter_mut().zip(&dw) {
            *g += d;
        }
        for (g, d) in self.b.grad.data_mut().iter_mut().zip(&db) {
            *g += d;
        }
        for (g, d) in self.v.grad.data_mut().iter_mut().zip(&dv) {
            *g += d;
        }
        Tensor::new(c.input.shape().to_vec(), dx)
    }

    fn spec(&self) -> LayerSpec {
        LayerSpec::Attention {
            hidden: self.hidden(),
        }
    }

    fn params(&self) -> Vec<&Param> {
        vec![&self.w, &self.b, &self.v]
    }

    fn params_mut(&mut self) -> Vec<&mut Param> {
        vec![&mut self.w, &mut self.b, &mut self.v]
    }
}
