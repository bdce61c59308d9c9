use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Binary classification scores with the violent class as positive.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub tp: usize,
    pub fp: usize,
    pub tn: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub accuracy: f64,
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

impl Metrics {
    pub fn from_counts(tp: usize, fp: usize, tn: usize, fn_: usize) -> Result<Self> {
        let total = tp + fp + tn + fn_;
        if total == 0 {
            return Err(Error::invalid("cannot score an empty holdout"));
        }
        let precision = ratio(tp, tp + fp);
        let recall = ratio(tp, tp + fn_);
        let f1 = if precision + recall > 0.0 {
            2.0 * precision * recall / (precision + recall)
        } else {
            0.0
        };
        Ok(Self {
            tp,
            fp,
            tn,
            fn_,
            precision,
            recall,
            f1,
            accuracy: ratio(tp + tn, total),
        })
    }

    pub fn from_predictions(predicted: &[bool], truth: &[bool]) -> Result<Self> {
        if predicted.len() != truth.len() {
            return Err(Error::ShapeMismatch {
                op: "metrics",
                left: vec![predicted.len()],
                right: vec![truth.len()],
            });
        }
        let (mut tp, mut fp, mut tn, mut fn_) = (0, 0, 0, 0);
        for (&p, &t) in predicted.iter().zip(truth) {
            match (p, t) {
                (true, true) => tp += 1,
                (true, false) => fp += 1,
                (false, false) => tn += 1,
                (false, true) => fn_ += 1,
            }
        }
        Self::from_counts(tp, fp, tn, fn_)
    }

    pub fn total(&self) -> usize {
        self.tp + self.fp + self.tn + self.fn_
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn perfect_and_empty() {
        let m = Metrics::from_predictions(&[true, false, true], &[true, false, true]).unwrap();
        assert_eq!(m.f1, 1.0);
        assert!(Metrics::from_predictions(&[], &[]).is_err());
    }

    #[test]
    fn no_true_positives_gives_zero_f1() {
        let m = Metrics::from_counts(0, 5, 5, 0).unwrap();
        assert_eq!(m.f1, 0.0);
        let m = Metrics::from_counts(0, 0, 10, 0).unwrap();
        assert_eq!(m.f1, 0.0);
        assert_eq!(m.accuracy, 1.0);
    }

    #[test]
    fn all_positive_prediction() {
        let m = Metrics::from_counts(633, 662, 0, 0).unwrap();
        assert!((m.precision - 0.4888030888030888).abs() < 1e-15);
        assert_eq!(m.recall, 1.0);
        assert!((m.f1 - 0.6566390041493776).abs() < 1e-12);
    }
}
