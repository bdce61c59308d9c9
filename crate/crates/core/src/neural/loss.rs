use super::{Param, ParamKind, Tensor};
use crate::error::{Error, Result};

/// Floor applied inside the logarithm of the cross-entropy.
pub const LOG_EPS: f64 = 1e-12;

/// Row-wise softmax over `[B, K]`, shifted by the row max.
pub fn softmax(logits: &Tensor) -> Result<Tensor> {
    logits.expect_rank(2, "softmax")?;
    let k = logits.shape()[1];
    let mut out = logits.data().to_vec();
    for row in out.chunks_mut(k.max(1)) {
        let m = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let mut z = 0.0;
        for v in row.iter_mut() {
            *v = (*v - m).exp();
            z += *v;
        }
        for v in row.iter_mut() {
            *v /= z;
        }
    }
    Tensor::new(logits.shape().to_vec(), out)
}

fn check_targets(probs: &Tensor, targets: &Tensor) -> Result<()> {
    if probs.shape() != targets.shape() || probs.rank() != 2 {
        return Err(Error::ShapeMismatch {
            op: "cross_entropy",
            left: probs.shape().to_vec(),
            right: targets.shape().to_vec(),
        });
    }
    for (b, row) in targets.data().chunks(targets.shape()[1].max(1)).enumerate() {
        let ones = row.iter().filter(|&&v| v == 1.0).count();
        let zeros = row.iter().filter(|&&v| v == 0.0).count();
        if ones != 1 || ones + zeros != row.len() {
            return Err(Error::invalid(format!("target row {b} is not one-hot: {row:?}")));
        }
    }
    Ok(())
}

/// Mean categorical cross-entropy `-1/B sum t log p` for one-hot targets.
pub fn cross_entropy(probs: &Tensor, targets: &Tensor) -> Result<f64> {
    check_targets(probs, targets)?;
    let batch = probs.batch().max(1) as f64;
    let total: f64 = probs
        .data()
        .iter()
        .zip(targets.data())
        .filter(|(_, &t)| t == 1.0)
        .map(|(&p, _)| -p.max(LOG_EPS).ln())
        .sum();
    Ok(total / batch)
}

/// Softmax followed by cross-entropy. Returns probabilities, the mean loss and
/// the gradient w.r.t. the logits, `(p - t) / B`.
pub fn softmax_cross_entropy(logits: &Tensor, targets: &Tensor) -> Result<(Tensor, f64, Tensor)> {
    let probs = softmax(logits)?;
    let loss = cross_entropy(&probs, targets)?;
    let batch = probs.batch().max(1) as f64;
    let grad: Vec<f64> = probs
        .data()
        .iter()
        .zip(targets.data())
        .map(|(p, t)| (p - t) / batch)
        .collect();
    let grad = Tensor::new(probs.shape().to_vec(), grad)?;
    Ok((probs, loss, grad))
}

/// `lambda * sum theta^2` over weight parameters.
pub fn l2_penalty<'a>(params: impl IntoIterator<Item = &'a Param>, lambda: f64) -> f64 {
    params
        .into_iter()
        .filter(|p| p.kind == ParamKind::Weight)
        .map(|p| p.value.sum_squares())
        .sum::<f64>()
        * lambda
}

/// Adds `2 lambda theta` to the gradient of every weight parameter.
pub fn add_l2_grad<'a>(params: impl IntoIterator<Item = &'a mut Param>, lambda: f64) {
    for p in params {
        if p.kind != ParamKind::Weight {
            continue;
        }
        p.ensure_grad();
        for (g, v) in p.grad.data_mut().iter_mut().zip(p.value.data()) {
            *g += 2.0 * lambda * v;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn softmax_is_shift_invariant() {
        let a = softmax(&Tensor::new(vec![1, 3], vec![1.0, 2.0, 3.0]).unwrap()).unwrap();
        let b = softmax(&Tensor::new(vec![1, 3], vec![1001.0, 1002.0, 1003.0]).unwrap()).unwrap();
        for (x, y) in a.data().iter().zip(b.data()) {
            assert!((x - y).abs() < 1e-15);
        }
        assert!((a.data().iter().sum::<f64>() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn cross_entropy_uniform_two_class() {
        let p = Tensor::new(vec![2, 2], vec![0.5; 4]).unwrap();
        let t = Tensor::new(vec![2, 2], vec![1.0, 0.0, 0.0, 1.0]).unwrap();
        assert!((cross_entropy(&p, &t).unwrap() - 2f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn zero_probability_is_floored() {
        let p = Tensor::new(vec![1, 2], vec![1.0, 0.0]).unwrap();
        let t = Tensor::new(vec![1, 2], vec![0.0, 1.0]).unwrap();
        let l = cross_entropy(&p, &t).unwrap();
        assert!((l - (-LOG_EPS.ln())).abs() < 1e-9);
    }

    #[test]
    fn non_one_hot_targets_rejected() {
        let p = Tensor::new(vec![1, 2], vec![0.5, 0.5]).unwrap();
        let t = Tensor::new(vec![1, 2], vec![0.5, 0.5]).unwrap();
        assert!(cross_entropy(&p, &t).is_err());
    }

    #[test]
    fn l2_only_touches_weights() {
        let mut w = Param::new("w", ParamKind::Weight, Tensor::new(vec![2], vec![1.0, -2.0]).unwrap());
        let mut b = Param::new("b", ParamKind::Bias, Tensor::new(vec![1], vec![10.0]).unwrap());
        assert!((l2_penalty([&w, &b], 0.01) - 0.05).abs() < 1e-15);
        add_l2_grad([&mut w, &mut b], 0.01);
        assert_eq!(w.grad.data(), &[0.02, -0.04]);
        assert_eq!(b.grad.data(), &[0.0]);
    }
}
