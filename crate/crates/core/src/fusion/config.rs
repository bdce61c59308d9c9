use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::neural::{Activation, AdamConfig};

/// Branch architecture. Fixed across the hyperparameter grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ModelConfig {
    /// BiLSTM hidden size for branch a.
    pub lstm_hidden: usize,
    /// Output width of the dense branches b and d.
    pub branch_units: usize,
    pub conv_filters: Vec<usize>,
    pub conv_kernel: usize,
    pub conv_stride: usize,
    pub conv_dropout: f64,
    /// 2x2 max pooling after each conv block.
    pub conv_pool: bool,
    /// Feed the 50 spectral summaries to branch b alongside the 30 time-domain ones.
    pub acoustic_spectral: bool,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            lstm_hidden: 128,
            branch_units: 128,
            conv_filters: vec![32, 32, 64],
            conv_kernel: 3,
            conv_stride: 2,
            conv_dropout: 0.5,
            conv_pool: true,
            acoustic_spectral: true,
        }
    }
}

impl ModelConfig {
    /// Branch b restricted to the 30 time-domain values.
    pub fn strict() -> Self {
        Self {
            acoustic_spectral: false,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.lstm_hidden == 0 || self.branch_units == 0 {
            return Err(Error::invalid("branch widths must be positive"));
        }
        if self.conv_filters.is_empty() || self.conv_filters.contains(&0) {
            return Err(Error::invalid("conv filters must be a non-empty list of positive counts"));
        }
        if self.conv_kernel == 0 || self.conv_stride == 0 {
            return Err(Error::invalid("conv kernel and stride must be positive"));
        }
        if !(0.0..1.0).contains(&self.conv_dropout) {
            return Err(Error::invalid("conv dropout must lie in [0, 1)"));
        }
        Ok(())
    }
}

/// Head and optimiser settings: the searched hyperparameters plus fixed ones.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub hidden_layers: usize,
    pub dropout: f64,
    pub hidden_nodes: usize,
    pub activation: Activation,
    pub learning_rate: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub lambda: f64,
    pub seed: u64,
    /// Accept values outside the search grid.
    pub allow_off_grid: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            hidden_layers: 3,
            dropout: 0.5,
            hidden_nodes: 128,
            activation: Activation::Relu,
            learning_rate: 6.25e-4,
            epochs: 1,
            batch_size: 32,
            lambda: 0.01,
            seed: 0,
            allow_off_grid: false,
        }
    }
}

pub(crate) const GRID_HIDDEN_LAYERS: [usize; 4] = [0, 1, 2, 3];
pub(crate) const GRID_DROPOUT: [f64; 3] = [0.0, 0.1, 0.5];
pub(crate) const GRID_HIDDEN_NODES: [usize; 3] = [32, 64, 128];
pub(crate) const GRID_ACTIVATION: [Activation; 2] = [Activation::Relu, Activation::Linear];
pub(crate) const GRID_LEARNING_RATE: [f64; 4] = [6.25e-3, 6.25e-4, 6.25e-5, 6.25e-6];
pub(crate) const GRID_EPOCHS: [usize; 3] = [1, 5, 10];

impl TrainConfig {
    pub fn adam(&self) -> AdamConfig {
        AdamConfig {
            learning_rate: self.learning_rate,
            ..AdamConfig::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.batch_size < 2 {
            return Err(Error::invalid("batch size must be at least 2"));
        }
        if self.epochs == 0 {
            return Err(Error::invalid("epochs must be at least 1"));
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return Err(Error::invalid("dropout must lie in [0, 1)"));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::invalid("learning rate must be positive"));
        }
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return Err(Error::invalid("lambda must be non-negative"));
        }
        if self.hidden_layers > 0 && self.hidden_nodes == 0 {
            return Err(Error::invalid("hidden nodes must be positive"));
        }
        if !self.allow_off_grid {
            let mut off = Vec::new();
            if !GRID_HIDDEN_LAYERS.contains(&self.hidden_layers) {
                off.push(format!("hidden_layers={}", self.hidden_layers));
            }
            if !GRID_DROPOUT.contains(&self.dropout) {
                off.push(format!("dropout={}", self.dropout));
            }
            if !GRID_HIDDEN_NODES.contains(&self.hidden_nodes) {
                off.push(format!("hidden_nodes={}", self.hidden_nodes));
            }
            if !GRID_LEARNING_RATE.contains(&self.learning_rate) {
                off.push(format!("learning_rate={}", self.learning_rate));
            }
            if !GRID_EPOCHS.contains(&self.epochs) {
                off.push(format!("epochs={}", self.epochs));
            }
            if !off.is_empty() {
                return Err(Error::invalid(format!(
                    "values outside the hyperparameter grid: {} (set allow_off_grid to accept)",
                    off.join(", ")
                )));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_on_grid() {
        TrainConfig::default().validate().unwrap();
        ModelConfig::default().validate().unwrap();
    }

    #[test]
    fn off_grid_needs_override() {
        let mut c = TrainConfig {
            epochs: 50,
            ..TrainConfig::default()
        };
        assert!(c.validate().unwrap_err().to_string().contains("epochs=50"));
        c.allow_off_grid = true;
        c.validate().unwrap();
    }
}
