use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::Args;
use convofuse::dataset::AggregationRule;
use convofuse::fusion::{BranchMask, ForestConfig, HyperGrid, ModelConfig, TrainConfig, DEFAULT_FOLDS};
use convofuse::neural::Activation;
use convofuse::pipeline::ExtractConfig;
use serde::{Deserialize, Serialize};

/// Fully resolved run configuration. Written into every output artifact.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PipelineConfig {
    pub seed: u64,
    pub strict_paper: bool,
    pub branches: BranchMask,
    pub extract: ExtractConfig,
    /// Lexicon file; the bundled stand-in lexicon when absent.
    pub lexicon: Option<PathBuf>,
    /// Embedding JSONL; hash embeddings of the transcripts when absent.
    pub embeddings: Option<PathBuf>,
    pub aggregation: AggregationRule,
    pub threshold: f64,
    pub folds: usize,
    pub model: ModelConfig,
    pub train: TrainConfig,
    pub grid: HyperGrid,
    pub forest: ForestConfig,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            strict_paper: false,
            branches: BranchMask::ALL,
            extract: ExtractConfig::default(),
            lexicon: None,
            embeddings: None,
            aggregation: AggregationRule::Mean,
            threshold: 1.0,
            folds: DEFAULT_FOLDS,
            model: ModelConfig::default(),
            train: TrainConfig::default(),
            grid: HyperGrid::default(),
            forest: ForestConfig::default(),
        }
    }
}

/// Flags shared by every subcommand. Flags override the config file.
#[derive(Debug, Clone, Default, Args)]
pub struct CommonArgs {
    /// Segment manifest (JSONL).
    #[arg(long)]
    pub manifest: Option<PathBuf>,
    /// JSON configuration file.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Enabled branches, a subset of `abcd`.
    #[arg(long)]
    pub branches: Option<BranchMask>,
    #[arg(long, value_parser = ["22050", "16000", "11000"])]
    pub sample_rate: Option<String>,
    /// Reference settings: 30 time-domain inputs for branch b, one epoch, grid values only.
    #[arg(long)]
    pub strict_paper: bool,
}

/// Training overrides.
#[derive(Debug, Clone, Default, Args)]
pub struct TrainArgs {
    /// Feature store directory written by `extract`.
    #[arg(long)]
    pub features: Option<PathBuf>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub learning_rate: Option<f64>,
    #[arg(long)]
    pub batch_size: Option<usize>,
    #[arg(long)]
    pub hidden_layers: Option<usize>,
    #[arg(long)]
    pub hidden_nodes: Option<usize>,
    #[arg(long)]
    pub dropout: Option<f64>,
    #[arg(long)]
    pub activation: Option<Activation>,
    #[arg(long)]
    pub lambda: Option<f64>,
    /// Accept hyperparameters outside the search grid.
    #[arg(long)]
    pub allow_off_grid: bool,
    #[arg(long)]
    pub folds: Option<usize>,
    #[arg(long)]
    pub aggregation: Option<AggregationRule>,
    #[arg(long)]
    pub threshold: Option<f64>,
}

impl PipelineConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
    }

    /// Config file (or defaults) with flags applied on top.
    pub fn resolve(common: &CommonArgs, train: Option<&TrainArgs>) -> Result<Self> {
        let mut c = match &common.config {
            Some(p) => Self::load(p)?,
            None => Self::default(),
        };
        if let Some(s) = common.seed {
            c.seed = s;
        }
        if let Some(b) = common.branches {
            c.branches = b;
        }
        if let Some(r) = &common.sample_rate {
            c.extract.sample_rate = r.parse().context("sample rate")?;
        }
        if common.strict_paper {
            c.strict_paper = true;
        }
        if c.strict_paper {
            c.model.acoustic_spectral = false;
            c.train.epochs = 1;
            c.train.allow_off_grid = false;
        }
        if let Some(t) = train {
            let tc = &mut c.train;
            if let Some(v) = t.epochs {
                tc.epochs = v;
            }
            if let Some(v) = t.learning_rate {
                tc.learning_rate = v;
            }
            if let Some(v) = t.batch_size {
                tc.batch_size = v;
            }
            if let Some(v) = t.hidden_layers {
                tc.hidden_layers = v;
            }
            if let Some(v) = t.hidden_nodes {
                tc.hidden_nodes = v;
            }
            if let Some(v) = t.dropout {
                tc.dropout = v;
            }
            if let Some(v) = t.activation {
                tc.activation = v;
            }
            if let Some(v) = t.lambda {
                tc.lambda = v;
            }
            if t.allow_off_grid {
                if c.strict_paper {
                    bail!("--allow-off-grid conflicts with --strict-paper");
                }
                tc.allow_off_grid = true;
            }
            if let Some(v) = t.folds {
                c.folds = v;
            }
            if let Some(v) = t.aggregation {
                c.aggregation = v;
            }
            if let Some(v) = t.threshold {
                c.threshold = v;
            }
        }
        if c.strict_paper && c.train.epochs != 1 {
            bail!("--strict-paper trains for exactly one epoch");
        }
        c.train.seed = c.seed;
        c.forest.seed = c.seed;
        c.extract.validate()?;
        c.model.validate()?;
        c.train.validate()?;
        if !(c.threshold >= 0.0) {
            bail!("threshold must be non-negative");
        }
        Ok(c)
    }
}

pub fn required<'a>(v: &'a Option<PathBuf>, flag: &str) -> Result<&'a Path> {
    match v {
        Some(p) => Ok(p.as_path()),
        None => bail!("missing required flag --{flag}"),
    }
}
