use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::cv::{fold_seed, summarize};
use super::{kfold_split, BranchMask, CrossValReport, Example, FeatureBundle, FoldResult, Metrics};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ForestConfig {
    pub n_trees: usize,
    pub max_depth: Option<usize>,
    pub min_samples_split: usize,
    /// Features tried per split; `None` means `sqrt(p)`.
    pub max_features: Option<usize>,
    pub bootstrap: bool,
    pub seed: u64,
}

impl Default for ForestConfig {
    fn default() -> Self {
        Self {
            n_trees: 100,
            max_depth: None,
            min_samples_split: 2,
            max_features: None,
            bootstrap: true,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
enum Node {
    Leaf(bool),
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct Tree {
    nodes: Vec<Node>,
}

impl Tree {
    fn predict(&self, x: &[f64]) -> bool {
        let mut i = 0;
        loop {
            match &self.nodes[i] {
                Node::Leaf(v) => return *v,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => i = if x[*feature] <= *threshold { *left } else { *right },
            }
        }
    }
}

fn gini(pos: usize, n: usize) -> f64 {
    if n == 0 {
        return 0.0;
    }
    let p = pos as f64 / n as f64;
    2.0 * p * (1.0 - p)
}

struct Builder<'a> {
    x: &'a [Vec<f64>],
    y: &'a [bool],
    cfg: &'a ForestConfig,
    max_features: usize,
    nodes: Vec<Node>,
}

impl Builder<'_> {
    fn majority(&self, idx: &[usize]) -> bool {
        let pos = idx.iter().filter(|&&i| self.y[i]).count();
        2 * pos > idx.len()
    }

    /// Best `(feature, threshold, weighted impurity)` over a random feature subset.
    fn best_split(&self, idx: &[usize], rng: &mut ChaCha8Rng) -> Option<(usize, f64, f64)> {
        let p = self.x[0].len();
        let n = idx.len();
        let total_pos = idx.iter().filter(|&&i| self.y[i]).count();
        let mut best: Option<(usize, f64, f64)> = None;
        let mut order = idx.to_vec();
        for feature in sample(rng, p, self.max_features.min(p)) {
            order.sort_by(|&a, &b| self.x[a][feature].total_cmp(&self.x[b][feature]));
            let mut left_pos = 0;
            for s in 1..n {
                left_pos += usize::from(self.y[order[s - 1]]);
                let (lo, hi) = (self.x[order[s - 1]][feature], self.x[order[s]][feature]);
                if lo == hi {
                    continue;
                }
                let imp = (s as f64 * gini(left_pos, s)
                    + (n - s) as f64 * gini(total_pos - left_pos, n - s))
                    / n as f64;
                if best.is_none_or(|b| imp < b.2) {
                    best = Some((feature, lo + (hi - lo) / 2.0, imp));
                }
            }
        }
        best
    }

    fn grow(&mut self, idx: Vec<usize>, depth: usize, rng: &mut ChaCha8Rng) -> usize {
        let id = self.nodes.len();
        self.nodes.push(Node::Leaf(self.majority(&idx)));
        let pos = idx.iter().filter(|&&i| self.y[i]).count();
        let pure = pos == 0 || pos == idx.len();
        let depth_ok = self.cfg.max_depth.is_none_or(|d| depth < d);
        if pure || !depth_ok || idx.len() < self.cfg.min_samples_split.max(2) {
            return id;
        }
        let Some((feature, threshold, imp)) = self.best_split(&idx, rng) else {
            return id;
        };
        if imp >= gini(pos, idx.len()) {
            return id;
        }
        let (l, r): (Vec<usize>, Vec<usize>) =
            idx.iter().partition(|&&i| self.x[i][feature] <= threshold);
        let left = self.grow(l, depth + 1, rng);
        let right = self.grow(r, depth + 1, rng);
        self.nodes[id] = Node::Split {
            feature,
            threshold,
            left,
            right,
        };
        id
    }
}

/// Bagged CART trees with Gini splits and majority vote.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RandomForest {
    trees: Vec<Tree>,
    /// Out-of-bag misclassification rate, if any sample was out of bag.
    pub oob_error: Option<f64>,
}

impl RandomForest {
    pub fn fit(x: &[Vec<f64>], y: &[bool], cfg: &ForestConfig) -> Result<Self> {
        if x.is_empty() || x.len() != y.len() {
            return Err(Error::invalid(format!(
                "random forest needs matching non-empty inputs, got {} rows and {} labels",
                x.len(),
                y.len()
            )));
        }
        let p = x[0].len();
        if p == 0 || x.iter().any(|r| r.len() != p) {
            return Err(Error::invalid("random forest rows must share a positive width"));
        }
        if cfg.n_trees == 0 {
            return Err(Error::invalid("random forest needs at least one tree"));
        }
        let max_features = cfg
            .max_features
            .unwrap_or_else(|| (p as f64).sqrt().round() as usize)
            .clamp(1, p);
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        let n = x.len();
        let mut trees = Vec::with_capacity(cfg.n_trees);
        let mut votes = vec![(0usize, 0usize); n];
        for _ in 0..cfg.n_trees {
            let mut in_bag = vec![false; n];
            let idx: Vec<usize> = if cfg.bootstrap {
                (0..n)
                    .map(|_| {
                        let i = rng.gen_range(0..n);
                        in_bag[i] = true;
                        i
                    })
                    .collect()
            } else {
                in_bag.fill(true);
                (0..n).collect()
            };
            let mut b = Builder {
                x,
                y,
                cfg,
                max_features,
                nodes: Vec::new(),
            };
            b.grow(idx, 0, &mut rng);
            let tree = Tree { nodes: b.nodes };
            for i in (0..n).filter(|&i| !in_bag[i]) {
                let v = &mut votes[i];
                v.0 += usize::from(tree.predict(&x[i]));
                v.1 += 1;
            }
            trees.push(tree);
        }
        let scored: Vec<bool> = (0..n)
            .filter(|&i| votes[i].1 > 0)
            .map(|i| (2 * votes[i].0 > votes[i].1) != y[i])
            .collect();
        let oob_error = (!scored.is_empty())
            .then(|| scored.iter().filter(|&&wrong| wrong).count() as f64 / scored.len() as f64);
        Ok(Self { trees, oob_error })
    }

    pub fn n_trees(&self) -> usize {
        self.trees.len()
    }

    pub fn predict(&self, x: &[f64]) -> bool {
        let pos = self.trees.iter().filter(|t| t.predict(x)).count();
        2 * pos > self.trees.len()
    }
}

/// Flat vector for the forest: lexicon, acoustic summaries, per-channel MFCC
/// mean and standard deviation, embedding.
pub fn flat_features(f: &FeatureBundle, mask: BranchMask, spectral: bool) -> Result<Vec<f64>> {
    let mut v = Vec::new();
    if mask.a {
        v.extend_from_slice(f.liwc_input()?);
    }
    if mask.b {
        v.extend(f.acoustic_input(spectral)?);
    }
    if mask.c {
        let m = f.mfcc_input()?;
        for ch in 0..m.channels() {
            let row = m.row(ch);
            let n = row.len().max(1) as f64;
            let mean = row.iter().sum::<f64>() / n;
            let var = row.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
            v.push(mean);
            v.push(var.sqrt());
        }
    }
    if mask.d {
        v.extend_from_slice(f.embedding_input()?);
    }
    Ok(v)
}

/// Cross-validates the forest with the same folds as the fusion model.
pub fn baseline_crossval(
    examples: &[Example],
    mask: BranchMask,
    spectral: bool,
    cfg: &ForestConfig,
    k: usize,
) -> Result<CrossValReport> {
    let labels: Vec<bool> = examples.iter().map(|e| e.label).collect();
    let x: Vec<Vec<f64>> = examples
        .iter()
        .map(|e| flat_features(&e.features, mask, spectral))
        .collect::<Result<_>>()?;
    let folds = kfold_split(&labels, k, cfg.seed)?;
    let mut results = Vec::with_capacity(k);
    for fold in 0..k {
        let (mut tx, mut ty) = (Vec::new(), Vec::new());
        let (mut hx, mut hy) = (Vec::new(), Vec::new());
        for i in 0..x.len() {
            if folds[i] == fold {
                hx.push(&x[i]);
                hy.push(labels[i]);
            } else {
                tx.push(x[i].clone());
                ty.push(labels[i]);
            }
        }
        let forest = RandomForest::fit(
            &tx,
            &ty,
            &ForestConfig {
                seed: fold_seed(cfg.seed, fold),
                ..cfg.clone()
            },
        )?;
        let pred: Vec<bool> = hx.iter().map(|r| forest.predict(r)).collect();
        results.push(FoldResult {
            fold,
            n_train: tx.len(),
            n_val: 0,
            n_test: hx.len(),
            metrics: Metrics::from_predictions(&pred, &hy)?,
            curve: Vec::new(),
        });
    }
    Ok(summarize(results, k, cfg.seed, mask))
}
