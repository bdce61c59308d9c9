//! Four-branch fusion classifier and its evaluation harness.
//!
//! Branch inputs, concatenated in the fixed order `[a, b, c, d]`:
//!
//! * `a`: PCA-reduced lexicon vector, read as a scalar sequence by a BiLSTM
//!   with attention pooling.
//! * `b`: time-domain (and by default spectral) summary statistics.
//! * `c`: MFCC image through a strided CNN.
//! * `d`: 768-dim sentence embedding.

mod bundle;
mod checkpoint;
mod config;
mod cv;
mod forest;
mod grid;
mod metrics;
mod model;
mod scaler;
mod train;

pub use bundle::{BranchMask, Example, FeatureBundle, InputDims};
pub use checkpoint::{Checkpoint, CHECKPOINT_VERSION};
pub use config::{ModelConfig, TrainConfig};
pub use cv::{
    crossval, fit, kfold_split, stratified_holdout, CrossValReport, Fitted, FoldResult, DEFAULT_FOLDS,
    VALIDATION_FRACTION,
};
pub use forest::{
    baseline_crossval, flat_features, ForestConfig, RandomForest,
};
pub use grid::{grid_search, GridResult, HyperGrid};
pub use metrics::Metrics;
pub use model::{FusionModel, ForwardOutput};
pub use scaler::{FeatureScaler, Standardizer};
pub use train::{attention_csv, evaluate, predict, train, BatchObjective, EpochRecord, TrainOutcome};
