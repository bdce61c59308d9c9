use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::train::evaluate;
use super::{
    train, BranchMask, EpochRecord, Example, FeatureScaler, FusionModel, InputDims, Metrics,
    ModelConfig, TrainConfig, TrainOutcome,
};
use crate::error::{Error, Result};

pub const DEFAULT_FOLDS: usize = 10;
/// Share of each training fold held out for the learning curve.
pub const VALIDATION_FRACTION: f64 = 0.1;

/// Stratified fold assignment: `result[i]` is the fold of item `i`.
///
/// Each class is shuffled and dealt round-robin, continuing the deal across
/// classes, so fold sizes differ by at most one overall and per class.
pub fn kfold_split(labels: &[bool], k: usize, seed: u64) -> Result<Vec<usize>> {
    if k < 2 {
        return Err(Error::invalid(format!("k must be at least 2, got {k}")));
    }
    if labels.len() < k {
        return Err(Error::invalid(format!(
            "cannot split {} items into {k} folds",
            labels.len()
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut fold = vec![0; labels.len()];
    let mut next = 0;
    for class in [true, false] {
        let mut idx: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == class).collect();
        idx.shuffle(&mut rng);
        for i in idx {
            fold[i] = next % k;
            next += 1;
        }
    }
    Ok(fold)
}

/// Splits `indices` into `(train, validation)` with `fraction` of each class held out.
pub fn stratified_holdout(
    indices: &[usize],
    labels: &[bool],
    fraction: f64,
    rng: &mut ChaCha8Rng,
) -> (Vec<usize>, Vec<usize>) {
    let mut train = Vec::new();
    let mut val = Vec::new();
    for class in [true, false] {
        let mut idx: Vec<usize> = indices.iter().copied().filter(|&i| labels[i] == class).collect();
        idx.shuffle(rng);
        let n_val = ((idx.len() as f64) * fraction).round() as usize;
        // Keep at least one item of each present class for training.
        let n_val = n_val.min(idx.len().saturating_sub(1));
        val.extend_from_slice(&idx[..n_val]);
        train.extend_from_slice(&idx[n_val..]);
    }
    train.sort_unstable();
    val.sort_unstable();
    (train, val)
}

pub(crate) fn fold_seed(seed: u64, fold: usize) -> u64 {
    seed ^ (fold as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

/// A model trained on scaled features together with its scaler.
pub struct Fitted {
    pub model: FusionModel,
    pub scaler: FeatureScaler,
    pub outcome: TrainOutcome,
    pub n_train: usize,
    pub n_val: usize,
}

/// Fits scaler and model on `examples`, holding out a stratified validation share.
pub fn fit(
    examples: &[Example],
    mask: BranchMask,
    model_cfg: &ModelConfig,
    train_cfg: &TrainConfig,
    validation_fraction: f64,
    rng: &mut ChaCha8Rng,
) -> Result<Fitted> {
    let labels: Vec<bool> = examples.iter().map(|e| e.label).collect();
    let all: Vec<usize> = (0..examples.len()).collect();
    let (tr, va) = stratified_holdout(&all, &labels, validation_fraction, rng);
    let pick = |idx: &[usize]| idx.iter().map(|&i| examples[i].clone()).collect::<Vec<_>>();
    let (tr_raw, va_raw) = (pick(&tr), pick(&va));
    let spectral = model_cfg.acoustic_spectral;
    let scaler = FeatureScaler::fit(&tr_raw, mask, spectral)?;
    let tr_s = scaler.transform_all(&tr_raw);
    let va_s = scaler.transform_all(&va_raw);
    let dims = InputDims::infer(&tr_s, mask, spectral)?;
    let mut model = FusionModel::new(mask, dims, model_cfg, train_cfg, rng)?;
    let outcome = train(&mut model, &tr_s, &va_s, rng)?;
    Ok(Fitted {
        model,
        scaler,
        outcome,
        n_train: tr.len(),
        n_val: va.len(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldResult {
    pub fold: usize,
    pub n_train: usize,
    pub n_val: usize,
    pub n_test: usize,
    pub metrics: Metrics,
    pub curve: Vec<EpochRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrossValReport {
    pub k: usize,
    pub seed: u64,
    pub branches: BranchMask,
    pub folds: Vec<FoldResult>,
    pub mean_f1: f64,
    pub std_f1: f64,
    pub mean_precision: f64,
    pub mean_recall: f64,
    pub mean_accuracy: f64,
}

impl CrossValReport {
    pub fn fold_f1(&self) -> Vec<f64> {
        self.folds.iter().map(|f| f.metrics.f1).collect()
    }

    /// Per-fold metrics as CSV.
    pub fn metrics_csv(&self) -> String {
        let mut s = String::from("fold,n_train,n_val,n_test,tp,fp,tn,fn,precision,recall,f1,accuracy\n");
        for f in &self.folds {
            let m = &f.metrics;
            s.push_str(&format!(
                "{},{},{},{},{},{},{},{},{},{},{},{}\n",
                f.fold, f.n_train, f.n_val, f.n_test, m.tp, m.fp, m.tn, m.fn_, m.precision, m.recall, m.f1, m.accuracy
            ));
        }
        s
    }

    /// Learning curves of every fold as CSV.
    pub fn curves_csv(&self) -> String {
        let mut s = String::from("fold,epoch,train_loss,train_acc,val_loss,val_acc\n");
        let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        for f in &self.folds {
            for r in &f.curve {
                s.push_str(&format!(
                    "{},{},{},{},{},{}\n",
                    f.fold,
                    r.epoch,
                    r.train_loss,
                    r.train_acc,
                    opt(r.val_loss),
                    opt(r.val_acc)
                ));
            }
        }
        s
    }
}

fn mean_std(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let m = v.iter().sum::<f64>() / n;
    let var = v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / n;
    (m, var.sqrt())
}

/// Stratified k-fold cross-validation. Scalers are fitted inside each training fold.
pub fn crossval(
    examples: &[Example],
    mask: BranchMask,
    model_cfg: &ModelConfig,
    train_cfg: &TrainConfig,
    k: usize,
) -> Result<CrossValReport> {
    let labels: Vec<bool> = examples.iter().map(|e| e.label).collect();
    let seed = train_cfg.seed;
    let folds = kfold_split(&labels, k, seed)?;
    let mut results = Vec::with_capacity(k);
    for fold in 0..k {
        let mut rng = ChaCha8Rng::seed_from_u64(fold_seed(seed, fold));
        let mut rest = Vec::new();
        let mut test = Vec::new();
        for (e, &f) in examples.iter().zip(&folds) {
            if f == fold {
                test.push(e.clone());
            } else {
                rest.push(e.clone());
            }
        }
        let mut fitted = fit(&rest, mask, model_cfg, train_cfg, VALIDATION_FRACTION, &mut rng)?;
        let test = fitted.scaler.transform_all(&test);
        let metrics = evaluate(&mut fitted.model, &test)?;
        results.push(FoldResult {
            fold,
            n_train: fitted.n_train,
            n_val: fitted.n_val,
            n_test: test.len(),
            metrics,
            curve: fitted.outcome.curve,
        });
    }
    Ok(summarize(results, k, seed, mask))
}

pub(crate) fn summarize(folds: Vec<FoldResult>, k: usize, seed: u64, mask: BranchMask) -> CrossValReport {
    let col = |f: fn(&Metrics) -> f64| folds.iter().map(|r| f(&r.metrics)).collect::<Vec<_>>();
    let (mean_f1, std_f1) = mean_std(&col(|m| m.f1));
    CrossValReport {
        k,
        seed,
        branches: mask,
        mean_precision: mean_std(&col(|m| m.precision)).0,
        mean_recall: mean_std(&col(|m| m.recall)).0,
        mean_accuracy: mean_std(&col(|m| m.accuracy)).0,
        folds,
        mean_f1,
        std_f1,
    }
}
