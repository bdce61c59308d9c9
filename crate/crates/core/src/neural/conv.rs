use rand_chacha::ChaCha8Rng;

use super::tensor::{axpy, dot};
use super::{glorot_bound, Ctx, Layer, LayerSpec, Param, ParamKind, Tensor};
use crate::error::{Error, Result};

/// 2-D convolution with "same" padding: output is `ceil(H / stride) x ceil(W / stride)`.
pub struct Conv2d {
    /// `[filters, in_channels, k, k]`
    pub kernel: Param,
    pub bias: Param,
    stride: usize,
    cols: Vec<Vec<f64>>,
    in_shape: Vec<usize>,
}

impl Conv2d {
    pub fn new(
        name: &str,
        in_channels: usize,
        filters: usize,
        kernel: usize,
        stride: usize,
        rng: &mut ChaCha8Rng,
    ) -> Result<Self> {
        if kernel == 0 || stride == 0 || in_channels == 0 || filters == 0 {
            return Err(Error::invalid("conv2d sizes must be positive"));
        }
        let area = kernel * kernel;
        Ok(Self {
            kernel: Param::uniform(
                format!("{name}.kernel"),
                &[filters, in_channels, kernel, kernel],
                glorot_bound(in_channels * area, filters * area),
                rng,
            ),
            bias: Param::zeros(format!("{name}.bias"), ParamKind::Bias, &[filters]),
            stride,
            cols: Vec::new(),
            in_shape: Vec::new(),
        })
    }

    pub fn from_params(kernel: Param, bias: Param, stride: usize) -> Result<Self> {
        let ks = kernel.value.shape();
        if ks.len() != 4 || ks[2] != ks[3] || bias.value.shape() != [ks[0]] || stride == 0 {
            return Err(Error::ShapeMismatch {
                op: "conv2d",
                left: ks.to_vec(),
                right: bias.value.shape().to_vec(),
            });
        }
        Ok(Self {
            kernel,
            bias,
            stride,
            cols: Vec::new(),
            in_shape: Vec::new(),
        })
    }

    fn dims(&self) -> (usize, usize, usize) {
        let s = self.kernel.value.shape();
        (s[0], s[1], s[2])
    }

    /// Output spatial size and leading padding for one axis.
    pub fn out_dim(&self, len: usize) -> (usize, usize) {
        same_padding(len, self.dims().2, self.stride)
    }
}

pub(crate) fn same_padding(len: usize, k: usize, stride: usize) -> (usize, usize) {
    let out = len.div_ceil(stride);
    let total = ((out.saturating_sub(1)) * stride + k).saturating_sub(len);
    (out, total / 2)
}

#[derive(Clone, Copy)]
struct Geometry {
    channels: usize,
    k: usize,
    stride: usize,
    h: usize,
    w: usize,
    oh: usize,
    ow: usize,
    pad_top: usize,
    pad_left: usize,
}

impl Geometry {
    fn width(&self) -> usize {
        self.channels * self.k * self.k
    }

    /// Calls `f(patch_index, input_index)` for every in-bounds tap.
    #[inline]
    fn for_each_tap(&self, mut f: impl FnMut(usize, usize)) {
        let (k, h, w) = (self.k, self.h as isize, self.w as isize);
        let width = self.width();
        for oy in 0..self.oh {
            for ox in 0..self.ow {
                let base = (oy * self.ow + ox) * width;
                for c in 0..self.channels {
                    for ky in 0..k {
                        let iy = (oy * self.stride + ky) as isize - self.pad_top as isize;
                        if iy < 0 || iy >= h {
                            continue;
                        }
                        for kx in 0..k {
                            let ix = (ox * self.stride + kx) as isize - self.pad_left as isize;
                            if ix < 0 || ix >= w {
                                continue;
                            }
                            f(
                                base + (c * k + ky) * k + kx,
                                (c * self.h + iy as usize) * self.w + ix as usize,
                            );
                        }
                    }
                }
            }
        }
    }

    /// Patch matrix `[oh * ow, C * k * k]`, zero outside the input.
    fn im2col(&self, x: &[f64]) -> Vec<f64> {
        let mut cols = vec![0.0; self.oh * self.ow * self.width()];
        self.for_each_tap(|p, i| cols[p] = x[i]);
        cols
    }

    fn col2im(&self, cols: &[f64], dx: &mut [f64]) {
        self.for_each_tap(|p, i| dx[i] += cols[p]);
    }
}

impl Conv2d {
    fn geometry(&self, h: usize, w: usize) -> Geometry {
        let (_, channels, k) = self.dims();
        let (oh, pad_top) = self.out_dim(h);
        let (ow, pad_left) = self.out_dim(w);
        Geometry {
            channels,
            k,
            stride: self.stride,
            h,
            w,
            oh,
            ow,
            pad_top,
            pad_left,
        }
    }
}

impl Layer for Conv2d {
    fn forward(&mut self, x: &Tensor, _ctx: &mut Ctx) -> Result<Tensor> {
        let (f_n, c_n, k) = self.dims();
        if x.rank() != 4 || x.shape()[1] != c_n || x.shape()[2] == 0 || x.shape()[3] == 0 {
            return Err(Error::ShapeMismatch {
                op: "conv2d",
                left: x.shape().to_vec(),
                right: self.kernel.value.shape().to_vec(),
            });
        }
        let (batch, h, w) = (x.shape()[0], x.shape()[2], x.shape()[3]);
        let geom = self.geometry(h, w);
        let (oh, ow) = (geom.oh, geom.ow);
        let positions = oh * ow;
        let width = c_n * k * k;
        let kern = self.kernel.value.data();
        let bias = self.bias.value.data();
        let mut out = vec![0.0; batch * f_n * positions];
        let mut cache = Vec::with_capacity(batch);
        for b in 0..batch {
            let cols = geom.im2col(x.item(b));
            for f in 0..f_n {
                let kf = &kern[f * width..(f + 1) * width];
                let o = &mut out[(b * f_n + f) * positions..(b * f_n + f + 1) * positions];
                for (p, y) in o.iter_mut().enumerate() {
                    *y = bias[f] + dot(kf, &cols[p * width..(p + 1) * width]);
                }
            }
            cache.push(cols);
        }
        self.cols = cache;
        self.in_shape = x.shape().to_vec();
        Tensor::new(vec![batch, f_n, oh, ow], out)
    }

    fn backward(&mut self, grad: &Tensor) -> Result<Tensor> {
        if self.cols.is_empty() {
            return Err(Error::invalid("conv2d backward before forward"));
        }
        let (f_n, c_n, k) = self.dims();
        let (batch, h, w) = (self.in_shape[0], self.in_shape[2], self.in_shape[3]);
        let geom = self.geometry(h, w);
        let (oh, ow) = (geom.oh, geom.ow);
        if grad.shape() != [batch, f_n, oh, ow] {
            return Err(Error::ShapeMismatch {
                op: "conv2d backward",
                left: grad.shape().to_vec(),
                right: vec![batch, f_n, oh, ow],
            });
        }
        let positions = oh * ow;
        let width = c_n * k * k;
        let item = c_n * h * w;
        let kern = self.kernel.value.data();
        let dk = self.kernel.grad.data_mut();
        let db = self.bias.grad.data_mut();
        let mut dx = vec![0.0; batch * item];
        let mut dcols = vec![0.0; positions * width];
        for (b, cols) in self.cols.iter().enumerate() {
            dcols.fill(0.0);
            for f in 0..f_n {
                let g = &grad.data()[(b * f_n + f) * positions..(b * f_n + f + 1) * positions];
                let kf = &kern[f * width..(f + 1) * width];
                let dkf = &mut dk[f * width..(f + 1) * width];
                for (p, &gp) in g.iter().enumerate() {
                    if gp == 0.0 {
                        continue;
                    }
                    db[f] += gp;
                    axpy(gp, &cols[p * width..(p + 1) * width], dkf);
                    axpy(gp, kf, &mut dcols[p * width..(p + 1) * width]);
                }
            }
            geom.col2im(&dcols, &mut dx[b * item..(b + 1) * item]);
        }
        Tensor::new(self.in_shape.clone(), dx)
    }

    fn spec(&self) -> LayerSpec {
        let (filters, in_channels, kernel) = self.dims();
        LayerSpec::Conv2d {
            in_channels,
            filters,
            kernel,
            stride: self.stride,
        }
    }

    fn params(&self) -> Vec<&Param> {
        vec![&self.kernel, &self.bias]
    }

    fn params_mut(&mut self) -> Vec<&mut Param> {
        vec![&mut self.kernel, &mut self.bias]
    }
}

/// 2x2 max pooling, stride 2. Odd edges keep a partial window (ceil mode).
#[derive(Default)]
pub struct MaxPool2 {
    input_shape: Vec<usize>,
    argmax: Vec<usize>,
}

impl MaxPool2 {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn out_dim(len: usize) -> usize {
        len.div_ceil(2)
    }
}

impl Layer for MaxPool2 {
    fn forward(&mut self, x: &Tensor, _ctx: &mut Ctx) -> Result<Tensor> {
        x.expect_rank(4, "maxpool")?;
        let (batch, c_n, h, w) = (x.shape()[0], x.shape()[1], x.shape()[2], x.shape()[3]);
        let (oh, ow) = (Self::out_dim(h), Self::out_dim(w));
        let xd = x.data();
        let mut out = Vec::with_capacity(batch * c_n * oh * ow);
        let mut argmax = Vec::with_capacity(out.capacity());
        for plane in 0..batch * c_n {
            let base = plane * h * w;
            for oy in 0..oh {
                for ox in 0..ow {
                    let mut best = usize::MAX;
                    let mut best_v = f64::NEG_INFINITY;
                    for iy in 2 * oy..(2 * oy + 2).min(h) {
                        for ix in 2 * ox..(2 * ox + 2).min(w) {
                            let i = base + iy * w + ix;
                            if xd[i] > best_v || best == usize::MAX {
                                best_v = xd[i];
                                best = i;
                            }
                        }
                    }
                    out.push(best_v);
                    argmax.push(best);
                }
            }
        }
        self.input_shape = x.shape().to_vec();
        self.argmax = argmax;
        Tensor::new(vec![batch, c_n, oh, ow], out)
    }

    fn backward(&mut self, grad: &Tensor) -> Result<Tensor> {
        if grad.len() != self.argmax.len() {
            return Err(Error::ShapeMismatch {
                op: "maxpool backward",
                left: grad.shape().to_vec(),
                right: vec![self.argmax.len()],
            });
        }
        let mut dx = Tensor::zeros(&self.input_shape);
        let d = dx.data_mut();
        for (&i, &g) in self.argmax.iter().zip(grad.data()) {
            d[i] += g;
        }
        Ok(dx)
    }

    fn spec(&self) -> LayerSpec {
        LayerSpec::Maxpool { size: 2 }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    #[test]
    fn unit_kernel_is_identity() {
        let k = Param::new("k", ParamKind::Weight, Tensor::new(vec![1, 1, 1, 1], vec![1.0]).unwrap());
        let mut conv = Conv2d::from_params(k, Param::zeros("b", ParamKind::Bias, &[1]), 1).unwrap();
        let x = Tensor::from_fn(&[2, 1, 3, 5], |i| (i as f64).sin());
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let y = conv.forward(&x, &mut Ctx { train: false, rng: &mut rng }).unwrap();
        assert_eq!(y, x);
    }

    #[test]
    fn pool_picks_max() {
        let x = Tensor::new(vec![1, 1, 2, 2], vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let mut p = MaxPool2::new();
        let y = p.forward(&x, &mut Ctx { train: false, rng: &mut rng }).unwrap();
        assert_eq!(y.shape(), &[1, 1, 1, 1]);
        assert_eq!(y.data(), &[4.0]);
        let g = p.backward(&Tensor::new(vec![1, 1, 1, 1], vec![2.0]).unwrap()).unwrap();
        assert_eq!(g.data(), &[0.0, 0.0, 0.0, 2.0]);
    }

    #[test]
    fn stride_two_shape_trace() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let mut layers = vec![
            Conv2d::new("l1", 1, 32, 3, 2, &mut rng).unwrap(),
            Conv2d::new("l2", 32, 32, 3, 2, &mut rng).unwrap(),
            Conv2d::new("l3", 32, 64, 3, 2, &mut rng).unwrap(),
        ];
        let mut x = Tensor::zeros(&[1, 1, 13, 431]);
        let mut trace = vec![(13, 431)];
        for l in &mut layers {
            x = l.forward(&x, &mut Ctx { train: false, rng: &mut rng }).unwrap();
            trace.push((x.shape()[2], x.shape()[3]));
        }
        assert_eq!(trace, vec![(13, 431), (7, 216), (4, 108), (2, 54)]);
        assert_eq!(x.shape()[1], 64);
    }
}
