use rand_chacha::ChaCha8Rng;

use super::{BranchMask, Example, FeatureBundle, InputDims, ModelConfig, TrainConfig};
use crate::error::{Error, Result};
use crate::neural::{
    softmax, ActivationLayer, Activation, Attention, BatchNorm, BiLstm, Conv2d, Ctx, Dense,
    Dropout, Flatten, Layer, LayerSpec, MaxPool2, Param, Sequential, Tensor,
};

/// BiLSTM followed by attention pooling.
struct AttentiveLstm {
    lstm: BiLstm,
    att: Attention,
}

impl Layer for AttentiveLstm {
    fn forward(&mut self, x: &Tensor, ctx: &mut Ctx) -> Result<Tensor> {
        let o = self.lstm.forward(x, ctx)?;
        self.att.forward(&o, ctx)
    }

    fn backward(&mut self, grad: &Tensor) -> Result<Tensor> {
        let g = self.att.backward(grad)?;
        self.lstm.backward(&g)
    }

    fn spec(&self) -> LayerSpec {
        self.lstm.spec()
    }

    fn params(&self) -> Vec<&Param> {
        let mut v = self.lstm.params();
        v.extend(self.att.params());
        v
    }

    fn params_mut(&mut self) -> Vec<&mut Param> {
        let mut v = self.lstm.params_mut();
        v.extend(self.att.params_mut());
        v
    }
}

pub struct ForwardOutput {
    pub logits: Tensor,
    pub probabilities: Tensor,
    /// Concatenated branch outputs `[B, |x_fuse|]`.
    pub fused: Tensor,
    /// Attention weights `[B, T]` when branch a is enabled.
    pub attention: Option<Tensor>,
}

pub struct FusionModel {
    mask: BranchMask,
    dims: InputDims,
    model_config: ModelConfig,
    train_config: TrainConfig,
    a: Option<AttentiveLstm>,
    b: Option<Sequential>,
    c: Option<Sequential>,
    d: Option<Sequential>,
    head: Sequential,
    widths: Vec<usize>,
}

/// Spatial size after each conv block, or an error if the input cannot pass.
pub(crate) fn conv_trace(cfg: &ModelConfig, h: usize, w: usize) -> Result<Vec<(usize, usize)>> {
    if h == 0 || w == 0 {
        return Err(Error::invalid(format!("MFCC image {h}x{w} is empty")));
    }
    let mut trace = vec![(h, w)];
    let (mut h, mut w) = (h, w);
    for _ in &cfg.conv_filters {
        h = h.div_ceil(cfg.conv_stride);
        w = w.div_ceil(cfg.conv_stride);
        if cfg.conv_pool {
            h = MaxPool2::out_dim(h);
            w = MaxPool2::out_dim(w);
        }
        trace.push((h, w));
    }
    Ok(trace)
}

impl FusionModel {
    pub fn new(
        mask: BranchMask,
        dims: InputDims,
        model_config: &ModelConfig,
        train_config: &TrainConfig,
        rng: &mut ChaCha8Rng,
    ) -> Result<Self> {
        model_config.validate()?;
        if !mask.any() {
            return Err(Error::invalid("branch mask enables no branch"));
        }
        let units = model_config.branch_units;
        let mut widths = Vec::new();

        let a = if mask.a {
            if dims.liwc == 0 {
                return Err(Error::invalid("branch a needs a non-empty sequence"));
            }
            let h = model_config.lstm_hidden;
            widths.push(h);
            Some(AttentiveLstm {
                lstm: BiLstm::new("a.lstm", 1, h, rng),
                att: Attention::new("a.attention", h, rng),
            })
        } else {
            None
        };

        let dense_branch = |name: &str, inputs: usize, rng: &mut ChaCha8Rng| {
            let mut s = Sequential::new();
            s.push(Dense::new(name, inputs, units, rng));
            s.push(ActivationLayer::new(Activation::Relu));
            s
        };

        let b = if mask.b {
            if dims.acoustic == 0 {
                return Err(Error::invalid("branch b needs a non-empty input"));
            }
            widths.push(units);
            Some(dense_branch("b.dense", dims.acoustic, rng))
        } else {
            None
        };

        let c = if mask.c {
            let [orders, rows, frames] = dims.mfcc;
            let trace = conv_trace(model_config, rows, frames)?;
            let mut s = Sequential::new();
            let mut channels = orders;
            for (i, &filters) in model_config.conv_filters.iter().enumerate() {
                s.push(Conv2d::new(
                    &format!("c.conv{}", i + 1),
                    channels,
                    filters,
                    model_config.conv_kernel,
                    model_config.conv_stride,
                    rng,
                )?);
                s.push(BatchNorm::new(&format!("c.bn{}", i + 1), filters));
                s.push(ActivationLayer::new(Activation::Relu));
                s.push(Dropout::new(model_config.conv_dropout)?);
                if model_config.conv_pool {
                    s.push(MaxPool2::new());
                }
                channels = filters;
            }
            s.push(Flatten::default());
            let (h, w) = trace[trace.len() - 1];
            widths.push(channels * h * w);
            Some(s)
        } else {
            None
        };

        let d = if mask.d {
            if dims.embedding == 0 {
                return Err(Error::invalid("branch d needs a non-empty embedding"));
            }
            widths.push(units);
            Some(dense_branch("d.dense", dims.embedding, rng))
        } else {
            None
        };

        let mut head = Sequential::new();
        let mut prev: usize = widths.iter().sum();
        for i in 0..train_config.hidden_layers {
            head.push(Dense::new(&format!("head.fc{}", i + 1), prev, train_config.hidden_nodes, rng));
            head.push(ActivationLayer::new(train_config.activation));
            head.push(Dropout::new(train_config.dropout)?);
            prev = train_config.hidden_nodes;
        }
        head.push(Dense::new("head.out", prev, 2, rng));

        Ok(Self {
            mask,
            dims,
            model_config: model_config.clone(),
            train_config: train_config.clone(),
            a,
            b,
            c,
            d,
            head,
            widths,
        })
    }

    pub fn mask(&self) -> BranchMask {
        self.mask
    }

    pub fn dims(&self) -> InputDims {
        self.dims
    }

    pub fn model_config(&self) -> &ModelConfig {
        &self.model_config
    }

    pub fn train_config(&self) -> &TrainConfig {
        &self.train_config
    }

    /// Output widths of the enabled branches, in `[a, b, c, d]` order.
    pub fn branch_widths(&self) -> &[usize] {
        &self.widths
    }

    pub fn fused_width(&self) -> usize {
        self.widths.iter().sum()
    }

    pub fn specs(&self) -> Vec<LayerSpec> {
        let mut v = Vec::new();
        if let Some(a) = &self.a {
            v.push(a.lstm.spec());
            v.push(a.att.spec());
        }
        for s in [&self.b, &self.c, &self.d].into_iter().flatten() {
            v.extend(s.specs());
        }
        v.extend(self.head.specs());
        v.push(LayerSpec::Softmax);
        v
    }

    pub fn params(&self) -> Vec<&Param> {
        let mut v = Vec::new();
        if let Some(a) = &self.a {
            v.extend(a.params());
        }
        for s in [&self.b, &self.c, &self.d].into_iter().flatten() {
            v.extend(s.params());
        }
        v.extend(self.head.params());
        v
    }

    pub fn params_mut(&mut self) -> Vec<&mut Param> {
        let mut v = Vec::new();
        if let Some(a) = &mut self.a {
            v.extend(a.params_mut());
        }
        for s in [&mut self.b, &mut self.c, &mut self.d].into_iter().flatten() {
            v.extend(s.params_mut());
        }
        v.extend(self.head.params_mut());
        v
    }

    pub fn zero_grad(&mut self) {
        for p in self.params_mut() {
            p.zero_grad();
        }
    }

    fn branch_inputs(&self, batch: &[&FeatureBundle]) -> Result<[Option<Tensor>; 4]> {
        let n = batch.len();
        let mut out: [Option<Tensor>; 4] = Default::default();
        if self.mask.a {
            let t = self.dims.liwc;
            let mut data = Vec::with_capacity(n * t);
            for f in batch {
                let v = f.liwc_input()?;
                check_len(f, 'a', v.len(), t)?;
                data.extend_from_slice(v);
            }
            out[0] = Some(Tensor::new(vec![n, t, 1], data)?);
        }
        if self.mask.b {
            let m = self.dims.acoustic;
            let mut data = Vec::with_capacity(n * m);
            for f in batch {
                let v = f.acoustic_input(self.model_config.acoustic_spectral)?;
                check_len(f, 'b', v.len(), m)?;
                data.extend(v);
            }
            out[1] = Some(Tensor::new(vec![n, m], data)?);
        }
        if self.mask.c {
            let [o, r, fr] = self.dims.mfcc;
            let mut data = Vec::with_capacity(n * o * r * fr);
            for f in batch {
                let m = f.mfcc_input()?;
                if m.image_shape() != self.dims.mfcc {
                    return Err(Error::invalid(format!(
                        "segment {} has MFCC shape {:?}, expected {:?}",
                        f.id,
                        m.image_shape(),
                        self.dims.mfcc
                    )));
                }
                data.extend_from_slice(&m.data);
            }
            out[2] = Some(Tensor::new(vec![n, o, r, fr], data)?);
        }
        if self.mask.d {
            let m = self.dims.embedding;
            let mut data = Vec::with_capacity(n * m);
            for f in batch {
                let v = f.embedding_input()?;
                check_len(f, 'd', v.len(), m)?;
                data.extend_from_slice(v);
            }
            out[3] = Some(Tensor::new(vec![n, m], data)?);
        }
        Ok(out)
    }

    pub fn forward(&mut self, batch: &[&FeatureBundle], ctx: &mut Ctx) -> Result<ForwardOutput> {
        if batch.is_empty() {
            return Err(Error::invalid("empty batch"));
        }
        let [xa, xb, xc, xd] = self.branch_inputs(batch)?;
        let mut parts = Vec::with_capacity(4);
        let mut attention = None;
        if let (Some(layer), Some(x)) = (&mut self.a, &xa) {
            parts.push(layer.forward(x, ctx)?);
            attention = layer.att.last_weights();
        }
        for (branch, x) in [(&mut self.b, &xb), (&mut self.c, &xc), (&mut self.d, &xd)] {
            if let (Some(layer), Some(x)) = (branch, x) {
                parts.push(layer.forward(x, ctx)?);
            }
        }
        let refs: Vec<&Tensor> = parts.iter().collect();
        let fused = Tensor::concat_features(&refs)?;
        let logits = self.head.forward(&fused, ctx)?;
        let probabilities = softmax(&logits)?;
        Ok(ForwardOutput {
            logits,
            probabilities,
            fused,
            attention,
        })
    }

    /// Backpropagates the gradient w.r.t. the logits into every parameter.
    pub fn backward(&mut self, dlogits: &Tensor) -> Result<()> {
        let dfused = self.head.backward(dlogits)?;
        let grads = dfused.split_features(&self.widths)?;
        let mut it = grads.iter();
        if let Some(a) = &mut self.a {
            a.backward(it.next().expect("width per branch"))?;
        }
        for s in [&mut self.b, &mut self.c, &mut self.d].into_iter().flatten() {
            s.backward(it.next().expect("width per branch"))?;
        }
        Ok(())
    }

    /// Convenience for examples rather than bare bundles.
    pub fn forward_examples(&mut self, batch: &[&Example], ctx: &mut Ctx) -> Result<ForwardOutput> {
        let b: Vec<&FeatureBundle> = batch.iter().map(|e| &e.features).collect();
        self.forward(&b, ctx)
    }
}

fn check_len(f: &FeatureBundle, branch: char, got: usize, expected: usize) -> Result<()> {
    if got != expected {
        return Err(Error::invalid(format!(
            "segment {} branch {branch} input has length {got}, expected {expected}",
            f.id
        )));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    #[test]
    fn conv_trace_without_pooling() {
        let cfg = ModelConfig {
            conv_pool: false,
            ..ModelConfig::default()
        };
        let t = conv_trace(&cfg, 13, 431).unwrap();
        assert_eq!(t, vec![(13, 431), (7, 216), (4, 108), (2, 54)]);
        assert!(conv_trace(&cfg, 0, 10).is_err());
    }

    #[test]
    fn fused_width_is_sum_of_branches() {
        let dims = InputDims {
            liwc: 4,
            acoustic: 80,
            mfcc: [3, 13, 20],
            embedding: 768,
        };
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let cfg = ModelConfig::default();
        let m = FusionModel::new(BranchMask::ALL, dims, &cfg, &TrainConfig::default(), &mut rng).unwrap();
        let t = conv_trace(&cfg, 13, 20).unwrap();
        let (h, w) = t[3];
        assert_eq!(m.fused_width(), 384 + 64 * h * w);
        let bc = FusionModel::new("bc".parse().unwrap(), dims, &cfg, &TrainConfig::default(), &mut rng).unwrap();
        assert_eq!(bc.fused_width(), 128 + 64 * h * w);
    }
}
