use rand_chacha::ChaCha8Rng;

use super::tensor::{axpy, dot};
use super::{glorot_bound, Ctx, Layer, LayerSpec, Param, ParamKind, Tensor};
use crate::error::{Error, Result};

pub const FORGET_BIAS: f64 = 1.0;

/// Weights of one LSTM direction. Gate rows are ordered input, forget, cell, output.
pub struct LstmParams {
    /// `[4h, d]`
    pub wx: Param,
    /// `[4h, h]`
    pub wh: Param,
    /// `[4h]`
    pub b: Param,
}

struct Step {
    x: Vec<f64>,
    h_prev: Vec<f64>,
    c_prev: Vec<f64>,
    /// Activated gates `[i, f, g, o]`, each of length h.
    gates: Vec<f64>,
    tanh_c: Vec<f64>,
}

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

impl LstmParams {
    pub fn new(name: &str, inputs: usize, hidden: usize, rng: &mut ChaCha8Rng) -> Self {
        let mut b = Param::zeros(format!("{name}.b"), ParamKind::Bias, &[4 * hidden]);
        b.value.data_mut()[hidden..2 * hidden].fill(FORGET_BIAS);
        Self {
            wx: Param::uniform(
                format!("{name}.wx"),
                &[4 * hidden, inputs],
                glorot_bound(inputs, 4 * hidden),
                rng,
            ),
            wh: Param::uniform(
                format!("{name}.wh"),
                &[4 * hidden, hidden],
                glorot_bound(hidden, 4 * hidden),
                rng,
            ),
            b,
        }
    }

    pub fn hidden(&self) -> usize {
        self.wh.value.shape()[1]
    }

    pub fn inputs(&self) -> usize {
        self.wx.value.shape()[1]
    }

    fn step(&self, x: &[f64], h_prev: &[f64], c_prev: &[f64]) -> (Vec<f64>, Vec<f64>, Step) {
        let (h, d) = (self.hidden(), self.inputs());
        let wx = self.wx.value.data();
        let wh = self.wh.value.data();
        let mut z = self.b.value.data().to_vec();
        for (r, zr) in z.iter_mut().enumerate() {
            let rx = &wx[r * d..(r + 1) * d];
            let rh = &wh[r * h..(r + 1) * h];
            *zr += dot(rx, x) + dot(rh, h_prev);
        }
        let mut gates = z;
        for (k, g) in gates.iter_mut().enumerate() {
            *g = if (2 * h..3 * h).contains(&k) { g.tanh() } else { sigmoid(*g) };
        }
        let mut c = vec![0.0; h];
        let mut tanh_c = vec![0.0; h];
        let mut hn = vec![0.0; h];
        for j in 0..h {
            c[j] = gates[h + j] * c_prev[j] + gates[j] * gates[2 * h + j];
            tanh_c[j] = c[j].tanh();
            hn[j] = gates[3 * h + j] * tanh_c[j];
        }
        let step = Step {
            x: x.to_vec(),
            h_prev: h_prev.to_vec(),
            c_prev: c_prev.to_vec(),
            gates,
            tanh_c,
        };
        (hn, c, step)
    }

    /// Runs one sequence `[T, d]`, returning hidden states in time order.
    fn run(&self, seq: &[f64], steps: usize, reverse: bool) -> (Vec<f64>, Vec<Step>) {
        let (h, d) = (self.hidden(), self.inputs());
        let mut out = vec![0.0; steps * h];
        let mut hs = vec![0.0; h];
        let mut cs = vec![0.0; h];
        let mut cache = Vec::with_capacity(steps);
        for s in 0..steps {
            let t = if reverse { steps - 1 - s } else { s };
            let (hn, cn, st) = self.step(&seq[t * d..(t + 1) * d], &hs, &cs);
            out[t * h..(t + 1) * h].copy_from_slice(&hn);
            hs = hn;
            cs = cn;
            cache.push(st);
        }
        (out, cache)
    }

    /// BPTT for one sequence. `grad` is `[T, h]` in time order; returns `[T, d]`.
    fn backprop(&mut self, cache: &[Step], grad: &[f64], reverse: bool) -> Vec<f64> {
        let (h, d) = (self.hidden(), self.inputs());
        let steps = cache.len();
        let mut dx = vec![0.0; steps * d];
        let mut dh_next = vec![0.0; h];
        let mut dc_next = vec![0.0; h];
        let mut dz = vec![0.0; 4 * h];
        let wx = self.wx.value.data();
        let wh = self.wh.value.data();
        for s in (0..steps).rev() {
            let t = if reverse { steps - 1 - s } else { s };
            let st = &cache[s];
            let g = &st.gates;
            for j in 0..h {
                let dh = grad[t * h + j] + dh_next[j];
                let (i, f, gg, o) = (g[j], g[h + j], g[2 * h + j], g[3 * h + j]);
                let tc = st.tanh_c[j];
                let dc = dh * o * (1.0 - tc * tc) + dc_next[j];
                dz[j] = dc * gg * i * (1.0 - i);
                dz[h + j] = dc * st.c_prev[j] * f * (1.0 - f);
                dz[2 * h + j] = dc * i * (1.0 - gg * gg);
                dz[3 * h + j] = dh * tc * o * (1.0 - o);
                dc_next[j] = dc * f;
            }
            let gwx = self.wx.grad.data_mut();
            for r in 0..4 * h {
                axpy(dz[r], &st.x, &mut gwx[r * d..(r + 1) * d]);
            }
            let gwh = self.wh.grad.data_mut();
            for r in 0..4 * h {
                axpy(dz[r], &st.h_prev, &mut gwh[r * h..(r + 1) * h]);
            }
            for (gb, z) in self.b.grad.data_mut().iter_mut().zip(&dz) {
                *gb += z;
            }
            let dxt = &mut dx[t * d..(t + 1) * d];
            dh_next.fill(0.0);
            for r in 0..4 * h {
                let z = dz[r];
                if z == 0.0 {
                    continue;
                }
                axpy(z, &wx[r * d..(r + 1) * d], dxt);
                axpy(z, &wh[r * h..(r + 1) * h], &mut dh_next);
            }
        }
        dx
    }

    fn params(&self) -> [&Param; 3] {
        [&self.wx, &self.wh, &self.b]
    }

    fn params_mut(&mut self) -> [&mut Param; 3] {
        [&mut self.wx, &mut self.wh, &mut self.b]
    }
}

/// Bidirectional LSTM over `[B, T, d]`. The output at each step is the sum of
/// the forward and backward hidden states, `[B, T, h]`.
pub struct BiLstm {
    pub forward: LstmParams,
    pub backward: LstmParams,
    cache: Vec<(Vec<Step>, Vec<Step>)>,
    in_shape: Vec<usize>,
}

impl BiLstm {
    pub fn new(name: &str, inputs: usize, hidden: usize, rng: &mut ChaCha8Rng) -> Self {
        Self {
            forward: LstmParams::new(&format!("{name}.fwd"), inputs, hidden, rng),
            backward: LstmParams::new(&format!("{name}.bwd"), inputs, hidden, rng),
            cache: Vec::new(),
            in_shape: Vec::new(),
        }
    }

    pub fn hidden(&self) -> usize {
        self.forward.hidden()
    }
}

impl Layer for BiLstm {
    fn forward(&mut self, x: &Tensor, _ctx: &mut Ctx) -> Result<Tensor> {
        let d = self.forward.inputs();
        if x.rank() != 3 || x.shape()[2] != d {
            return Err(Error::ShapeMismatch {
                op: "bilstm",
                left: x.shape().to_vec(),
                right: vec![d],
            });
        }
        let (batch, steps) = (x.shape()[0], x.shape()[1]);
        if steps == 0 {
            return Err(Error::invalid("bilstm input sequence is empty"));
        }
        let h = self.hidden();
        let mut out = Vec::with_capacity(batch * steps * h);
        self.cache.clear();
        for b in 0..batch {
            let seq = x.item(b);
            let (hf, cf) = self.forward.run(seq, steps, false);
            let (hb, cb) = self.backward.run(seq, steps, true);
            out.extend(hf.iter().zip(&hb).map(|(a, b)| a + b));
            self.cache.push((cf, cb));
        }
        self.in_shape = x.shape().to_vec();
        Tensor::new(vec![batch, steps, h], out)
    }

    fn backward(&mut self, grad: &Tensor) -> Result<Tensor> {
        if self.cache.is_empty() {
            return Err(Error::invalid("bilstm backward before forward"));
        }
        let (batch, steps) = (self.in_shape[0], self.in_shape[1]);
        let h = self.hidden();
        if grad.shape() != [batch, steps, h] {
            return Err(Error::ShapeMismatch {
                op: "bilstm backward",
                left: grad.shape().to_vec(),
                right: vec![batch, steps, h],
            });
        }
        let cache = std::mem::take(&mut self.cache);
        let mut dx = Vec::with_capacity(batch * steps * self.forward.inputs());
        for (b, (cf, cb)) in cache.iter().enumerate() {
            let g = grad.item(b);
            let df = self.forward.backprop(cf, g, false);
            let db = self.backward.backprop(cb, g, true);
            dx.extend(df.iter().zip(&db).map(|(a, b)| a + b));
        }
        self.cache = cache;
        Tensor::new(self.in_shape.clone(), dx)
    }

    fn spec(&self) -> LayerSpec {
        LayerSpec::Bilstm {
            inputs: self.forward.inputs(),
            hidden: self.hidden(),
        }
    }

    fn params(&self) -> Vec<&Param> {
        let mut v = self.forward.params().to_vec();
        v.extend(self.backward.params());
        v
    }

    fn params_mut(&mut self) -> Vec<&mut Param> {
        let mut v: Vec<&mut Param> = self.forward.params_mut().into_iter().collect();
        v.extend(self.backward.params_mut());
        v
    }
}
