use serde::{Deserialize, Serialize};

use super::config::{
    GRID_ACTIVATION, GRID_DROPOUT, GRID_EPOCHS, GRID_HIDDEN_LAYERS, GRID_HIDDEN_NODES,
    GRID_LEARNING_RATE,
};
use super::{crossval, BranchMask, Example, ModelConfig, TrainConfig};
use crate::error::{Error, Result};
use crate::neural::Activation;

/// Cartesian hyperparameter grid over the head and optimiser.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HyperGrid {
    pub hidden_layers: Vec<usize>,
    pub dropout: Vec<f64>,
    pub hidden_nodes: Vec<usize>,
    pub activation: Vec<Activation>,
    pub learning_rate: Vec<f64>,
    pub epochs: Vec<usize>,
}

impl Default for HyperGrid {
    fn default() -> Self {
        Self {
            hidden_layers: GRID_HIDDEN_LAYERS.to_vec(),
            dropout: GRID_DROPOUT.to_vec(),
            hidden_nodes: GRID_HIDDEN_NODES.to_vec(),
            activation: GRID_ACTIVATION.to_vec(),
            learning_rate: GRID_LEARNING_RATE.to_vec(),
            epochs: GRID_EPOCHS.to_vec(),
        }
    }
}

impl HyperGrid {
    /// A grid holding exactly the values of `cfg`.
    pub fn single(cfg: &TrainConfig) -> Self {
        Self {
            hidden_layers: vec![cfg.hidden_layers],
            dropout: vec![cfg.dropout],
            hidden_nodes: vec![cfg.hidden_nodes],
            activation: vec![cfg.activation],
            learning_rate: vec![cfg.learning_rate],
            epochs: vec![cfg.epochs],
        }
    }

    pub fn len(&self) -> usize {
        self.hidden_layers.len()
            * self.dropout.len()
            * self.hidden_nodes.len()
            * self.activation.len()
            * self.learning_rate.len()
            * self.epochs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Every combination, with the remaining fields taken from `base`.
    pub fn configs(&self, base: &TrainConfig) -> Vec<TrainConfig> {
        let mut out = Vec::with_capacity(self.len());
        for &hidden_layers in &self.hidden_layers {
            for &dropout in &self.dropout {
                for &hidden_nodes in &self.hidden_nodes {
                    for &activation in &self.activation {
                        for &learning_rate in &self.learning_rate {
                            for &epochs in &self.epochs {
                                out.push(TrainConfig {
                                    hidden_layers,
                                    dropout,
                                    hidden_nodes,
                                    activation,
                                    learning_rate,
                                    epochs,
                                    ..base.clone()
                                });
                            }
                        }
                    }
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridResult {
    pub rank: usize,
    pub config: TrainConfig,
    pub mean_f1: Option<f64>,
    pub fold_f1: Vec<f64>,
    pub error: Option<String>,
}

/// Cross-validates every grid point. Failures are recorded, not raised.
/// Results are sorted by mean F1, failures last, ties in enumeration order.
pub fn grid_search(
    examples: &[Example],
    mask: BranchMask,
    model_cfg: &ModelConfig,
    grid: &HyperGrid,
    base: &TrainConfig,
    k: usize,
) -> Result<Vec<GridResult>> {
    if grid.is_empty() {
        return Err(Error::invalid("hyperparameter grid is empty"));
    }
    let mut results: Vec<GridResult> = grid
        .configs(base)
        .into_iter()
        .map(|config| match crossval(examples, mask, model_cfg, &config, k) {
            Ok(r) => GridResult {
                rank: 0,
                mean_f1: Some(r.mean_f1),
                fold_f1: r.fold_f1(),
                error: None,
                config,
            },
            Err(e) => GridResult {
                rank: 0,
                mean_f1: None,
                fold_f1: Vec::new(),
                error: Some(e.to_string()),
                config,
            },
        })
        .collect();
    results.sort_by(|a, b| match (a.mean_f1, b.mean_f1) {
        (Some(x), Some(y)) => y.total_cmp(&x),
        (Some(_), None) => std::cmp::Ordering::Less,
        (None, Some(_)) => std::cmp::Ordering::Greater,
        (None, None) => std::cmp::Ordering::Equal,
    });
    for (i, r) in results.iter_mut().enumerate() {
        r.rank = i + 1;
    }
    Ok(results)
}
