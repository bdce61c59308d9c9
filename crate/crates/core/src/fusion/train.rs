use std::fmt::Write as _;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{Example, FusionModel, Metrics};
use crate::error::{Error, Result};
use crate::neural::{
    add_l2_grad, l2_penalty, softmax_cross_entropy, AdamState, Ctx, Differentiable, Param, Tensor, LOG_EPS,
};

/// Batch size used for inference passes.
const EVAL_BATCH: usize = 64;

/// One row of the learning curve. Losses are mean cross-entropy without the L2 term.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_loss: f64,
    pub train_acc: f64,
    pub val_loss: Option<f64>,
    pub val_acc: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub curve: Vec<EpochRecord>,
    pub adam: AdamState,
}

fn targets(batch: &[&Example]) -> Tensor {
    let mut t = Tensor::zeros(&[batch.len(), 2]);
    for (i, e) in batch.iter().enumerate() {
        t.data_mut()[i * 2 + usize::from(e.label)] = 1.0;
    }
    t
}

/// Shuffled mini-batches; a trailing batch of one is merged into the previous
/// one because batch normalisation needs two samples.
fn batches(n: usize, size: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<usize>> {
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(rng);
    let mut out: Vec<Vec<usize>> = idx.chunks(size).map(|c| c.to_vec()).collect();
    if out.len() > 1 && out.last().is_some_and(|b| b.len() == 1) {
        let last = out.pop().expect("non-empty");
        out.last_mut().expect("non-empty").extend(last);
    }
    out
}

/// Minimises cross-entropy plus the L2 penalty with Adam. Deterministic for a
/// given generator state.
pub fn train(
    model: &mut FusionModel,
    train: &[Example],
    val: &[Example],
    rng: &mut ChaCha8Rng,
) -> Result<TrainOutcome> {
    let cfg = model.train_config().clone();
    cfg.validate()?;
    if train.len() < 2 {
        return Err(Error::invalid(format!(
            "training needs at least 2 examples, got {}",
            train.len()
        )));
    }
    let adam_cfg = cfg.adam();
    let mut adam = AdamState::new();
    let mut curve = Vec::with_capacity(cfg.epochs);
    for epoch in 1..=cfg.epochs {
        let (mut loss_sum, mut correct) = (0.0, 0usize);
        for (bi, idx) in batches(train.len(), cfg.batch_size, rng).into_iter().enumerate() {
            let batch: Vec<&Example> = idx.iter().map(|&i| &train[i]).collect();
            model.zero_grad();
            let out = model.forward_examples(&batch, &mut Ctx { train: true, rng: &mut *rng })?;
            let t = targets(&batch);
            let (probs, loss, dlogits) = softmax_cross_entropy(&out.logits, &t)?;
            let total = loss + l2_penalty(model.params(), cfg.lambda);
            if !total.is_finite() || !out.logits.is_finite() {
                return Err(Error::Diverged {
                    epoch,
                    batch: bi,
                    learning_rate: cfg.learning_rate,
                    loss: total,
                });
            }
            model.backward(&dlogits)?;
            add_l2_grad(model.params_mut(), cfg.lambda);
            adam.update(&adam_cfg, model.params_mut())?;
            loss_sum += loss * batch.len() as f64;
            correct += count_correct(&probs, &batch);
        }
        let (val_loss, val_acc) = if val.is_empty() {
            (None, None)
        } else {
            let (l, a) = loss_and_accuracy(model, val)?;
            (Some(l), Some(a))
        };
        curve.push(EpochRecord {
            epoch,
            train_loss: loss_sum / train.len() as f64,
            train_acc: correct as f64 / train.len() as f64,
            val_loss,
            val_acc,
        });
    }
    Ok(TrainOutcome { curve, adam })
}

/// Training loss of a fixed batch, for gradient checking. Every evaluation
/// reseeds the generator so dropout masks repeat.
pub struct BatchObjective<'a> {
    pub model: &'a mut FusionModel,
    pub batch: Vec<&'a Example>,
    pub seed: u64,
}

impl BatchObjective<'_> {
    fn run(&mut self, backward: bool) -> Result<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let lambda = self.model.train_config().lambda;
        let out = self.model.forward_examples(&self.batch, &mut Ctx { train: true, rng: &mut rng })?;
        let (_, loss, dlogits) = softmax_cross_entropy(&out.logits, &targets(&self.batch))?;
        let total = loss + l2_penalty(self.model.params(), lambda);
        if backward {
            self.model.backward(&dlogits)?;
            add_l2_grad(self.model.params_mut(), lambda);
        }
        Ok(total)
    }
}

impl Differentiable for BatchObjective<'_> {
    fn params_mut(&mut self) -> Vec<&mut Param> {
        self.model.params_mut()
    }

    fn loss(&mut self) -> Result<f64> {
        self.run(false)
    }

    fn loss_and_grad(&mut self) -> Result<f64> {
        self.run(true)
    }
}

fn count_correct(probs: &Tensor, batch: &[&Example]) -> usize {
    batch
        .iter()
        .enumerate()
        .filter(|(i, e)| (probs.data()[i * 2 + 1] > probs.data()[i * 2]) == e.label)
        .count()
}

fn loss_and_accuracy(model: &mut FusionModel, examples: &[Example]) -> Result<(f64, f64)> {
    let p = predict(model, examples)?;
    let mut loss = 0.0;
    let mut correct = 0;
    for (pv, e) in p.iter().zip(examples) {
        let pt = if e.label { *pv } else { 1.0 - pv };
        loss -= pt.max(LOG_EPS).ln();
        if (*pv > 0.5) == e.label {
            correct += 1;
        }
    }
    let n = examples.len() as f64;
    Ok((loss / n, correct as f64 / n))
}

/// Inference-mode probability of the violent class for each example.
pub fn predict(model: &mut FusionModel, examples: &[Example]) -> Result<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let mut out = Vec::with_capacity(examples.len());
    for chunk in examples.chunks(EVAL_BATCH) {
        let batch: Vec<&Example> = chunk.iter().collect();
        let f = model.forward_examples(&batch, &mut Ctx { train: false, rng: &mut rng })?;
        out.extend(f.probabilities.data().chunks(2).map(|r| r[1]));
    }
    Ok(out)
}

/// Scores a holdout set; predictions are the argmax of the softmax.
pub fn evaluate(model: &mut FusionModel, holdout: &[Example]) -> Result<Metrics> {
    if holdout.is_empty() {
        return Err(Error::invalid("cannot score an empty holdout"));
    }
    let p = predict(model, holdout)?;
    let predicted: Vec<bool> = p.iter().map(|&v| v > 0.5).collect();
    let truth: Vec<bool> = holdout.iter().map(|e| e.label).collect();
    Metrics::from_predictions(&predicted, &truth)
}

/// Attention weights per segment as CSV: `id,step,weight`.
pub fn attention_csv(model: &mut FusionModel, examples: &[Example]) -> Result<String> {
    if !model.mask().a {
        return Err(Error::invalid("attention weights need branch a"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let mut csv = String::from("id,step,weight\n");
    for chunk in examples.chunks(EVAL_BATCH) {
        let batch: Vec<&Example> = chunk.iter().collect();
        let f = model.forward_examples(&batch, &mut Ctx { train: false, rng: &mut rng })?;
        let att = f.attention.expect("branch a enabled");
        for (b, e) in chunk.iter().enumerate() {
            for (t, w) in att.item(b).iter().enumerate() {
                writeln!(csv, "{},{t},{w}", e.features.id).expect("write to string");
            }
        }
    }
    Ok(csv)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn batches_cover_all_and_avoid_singletons() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let b = batches(65, 32, &mut rng);
        assert_eq!(b.len(), 2);
        assert_eq!(b[1].len(), 33);
        let mut all: Vec<usize> = b.concat();
        all.sort();
        assert_eq!(all, (0..65).collect::<Vec<_>>());
    }
}
