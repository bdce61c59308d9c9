use std::fs;
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{BranchMask, FeatureScaler, FusionModel, InputDims, ModelConfig, TrainConfig};
use crate::error::{Error, Result};
use crate::neural::{AdamState, LayerSpec, Param};

pub const CHECKPOINT_VERSION: u32 = 1;

/// Self-describing JSON snapshot of a trained model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub version: u32,
    pub seed: u64,
    pub branches: BranchMask,
    pub dims: InputDims,
    pub model_config: ModelConfig,
    pub train_config: TrainConfig,
    pub layers: Vec<LayerSpec>,
    pub params: Vec<Param>,
    pub adam: AdamState,
    pub scaler: FeatureScaler,
}

impl Checkpoint {
    pub fn capture(model: &FusionModel, adam: &AdamState, scaler: &FeatureScaler) -> Self {
        Self {
            version: CHECKPOINT_VERSION,
            seed: model.train_config().seed,
            branches: model.mask(),
            dims: model.dims(),
            model_config: model.model_config().clone(),
            train_config: model.train_config().clone(),
            layers: model.specs(),
            params: model.params().into_iter().cloned().collect(),
            adam: adam.clone(),
            scaler: scaler.clone(),
        }
    }

    /// Rebuilds the model and copies the stored parameters into it.
    pub fn restore(&self) -> Result<FusionModel> {
        if self.version != CHECKPOINT_VERSION {
            return Err(Error::invalid(format!(
                "checkpoint version {} is not supported (expected {CHECKPOINT_VERSION})",
                self.version
            )));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let mut model = FusionModel::new(
            self.branches,
            self.dims,
            &self.model_config,
            &self.train_config,
            &mut rng,
        )?;
        let mut dst = model.params_mut();
        if dst.len() != self.params.len() {
            return Err(Error::invalid(format!(
                "checkpoint holds {} parameter blocks, model has {}",
                self.params.len(),
                dst.len()
            )));
        }
        for (d, s) in dst.iter_mut().zip(&self.params) {
            if d.name != s.name || d.value.shape() != s.value.shape() {
                return Err(Error::invalid(format!(
                    "checkpoint block {} {:?} does not match model block {} {:?}",
                    s.name,
                    s.value.shape(),
                    d.name,
                    d.value.shape()
                )));
            }
            d.value = s.value.clone();
            d.zero_grad();
        }
        Ok(model)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        fs::write(path, serde_json::to_vec(self)?)?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Ok(serde_json::from_slice(&fs::read(path)?)?)
    }
}
