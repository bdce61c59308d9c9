use rand_chacha::ChaCha8Rng;

use super::tensor::{axpy, dot};
use super::{glorot_bound, Ctx, Layer, LayerSpec, Param, ParamKind, Tensor};
use crate::error::{Error, Result};

/// Affine map `y = W x + b` with `W: [outputs, inputs]`.
pub struct Dense {
    pub weight: Param,
    pub bias: Param,
    input: Option<Tensor>,
}

impl Dense {
    pub fn new(name: &str, inputs: usize, outputs: usize, rng: &mut ChaCha8Rng) -> Self {
        Self {
            weight: Param::uniform(
                format!("{name}.weight"),
                &[outputs, inputs],
                glorot_bound(inputs, outputs),
                rng,
            ),
            bias: Param::zeros(format!("{name}.bias"), ParamKind::Bias, &[outputs]),
            input: None,
        }
    }

    pub fn from_params(weight: Param, bias: Param) -> Result<Self> {
        let ws = weight.value.shape();
        if ws.len() != 2 || bias.value.shape() != [ws[0]] {
            return Err(Error::ShapeMismatch {
                op: "dense",
                left: ws.to_vec(),
                right: bias.value.shape().to_vec(),
            });
        }
        Ok(Self {
            weight,
            bias,
            input: None,
        })
    }

    pub fn inputs(&self) -> usize {
        self.weight.value.shape()[1]
    }

    pub fn outputs(&self) -> usize {
        self.weight.value.shape()[0]
    }
}

impl Layer for Dense {
    fn forward(&mut self, x: &Tensor, _ctx: &mut Ctx) -> Result<Tensor> {
        let (n_in, n_out) = (self.inputs(), self.outputs());
        if x.rank() != 2 || x.shape()[1] != n_in {
            return Err(Error::ShapeMismatch {
                op: "dense",
                left: x.shape().to_vec(),
                right: self.weight.value.shape().to_vec(),
            });
        }
        let batch = x.batch();
        let w = self.weight.value.data();
        let bias = self.bias.value.data();
        let mut out = vec![0.0; batch * n_out];
        for b in 0..batch {
            let xi = x.item(b);
            for (o, y) in out[b * n_out..(b + 1) * n_out].iter_mut().enumerate() {
                let row = &w[o * n_in..(o + 1) * n_in];
                *y = bias[o] + dot(row, xi);
            }
        }
        self.input = Some(x.clone());
        Tensor::new(vec![batch, n_out], out)
    }

    fn backward(&mut self, grad: &Tensor) -> Result<Tensor> {
        let x = self
            .input
            .as_ref()
            .ok_or_else(|| Error::invalid("dense backward before forward"))?;
        let (n_in, n_out) = (self.inputs(), self.outputs());
        let batch = x.batch();
        if grad.shape() != [batch, n_out] {
            return Err(Error::ShapeMismatch {
                op: "dense backward",
                left: grad.shape().to_vec(),
                right: vec![batch, n_out],
            });
        }
        let w = self.weight.value.data();
        let mut dx = vec![0.0; batch * n_in];
        let dw = self.weight.grad.data_mut();
        let db = self.bias.grad.data_mut();
        for b in 0..batch {
            let xi = x.item(b);
            let gi = grad.item(b);
            let dxi = &mut dx[b * n_in..(b + 1) * n_in];
            for (o, &g) in gi.iter().enumerate() {
                if g == 0.0 {
                    continue;
                }
                db[o] += g;
                let row = &w[o * n_in..(o + 1) * n_in];
                let drow = &mut dw[o * n_in..(o + 1) * n_in];
                axpy(g, xi, drow);
                axpy(g, row, dxi);
            }
        }
        Tensor::new(vec![batch, n_in], dx)
    }

    fn spec(&self) -> LayerSpec {
        LayerSpec::Dense {
            inputs: self.inputs(),
            outputs: self.outputs(),
        }
    }

    fn params(&self) -> Vec<&Param> {
        vec![&self.weight, &self.bias]
    }

    fn params_mut(&mut self) -> Vec<&mut Param> {
        vec![&mut self.weight, &mut self.bias]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    fn ctx_rng() -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(0)
    }

    #[test]
    fn identity_and_bias_only() {
        let eye = Tensor::from_fn(&[3, 3], |i| if i % 4 == 0 { 1.0 } else { 0.0 });
        let mut d = Dense::from_params(
            Param::new("w", ParamKind::Weight, eye),
            Param::zeros("b", ParamKind::Bias, &[3]),
        )
        .unwrap();
        let mut rng = ctx_rng();
        let mut ctx = Ctx { train: true, rng: &mut rng };
        let x = Tensor::new(vec![2, 3], vec![1.0, -2.0, 3.0, 0.5, 0.0, 4.0]).unwrap();
        assert_eq!(d.forward(&x, &mut ctx).unwrap(), x);

        let mut d = Dense::from_params(
            Param::zeros("w", ParamKind::Weight, &[2, 3]),
            Param::new("b", ParamKind::Bias, Tensor::new(vec![2], vec![0.5, -1.0]).unwrap()),
        )
        .unwrap();
        let y = d.forward(&x, &mut ctx).unwrap();
        assert_eq!(y.data(), &[0.5, -1.0, 0.5, -1.0]);
    }

    #[test]
    fn shape_error_reports_both_shapes() {
        let mut rng = ctx_rng();
        let mut d = Dense::new("d", 4, 3, &mut rng);
        let mut ctx = Ctx { train: false, rng: &mut rng };
        let err = d.forward(&Tensor::zeros(&[2, 5]), &mut ctx).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("[2, 5]") && msg.contains("[3, 4]"), "{msg}");
    }
}
