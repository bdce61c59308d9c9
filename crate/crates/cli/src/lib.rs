//! Command-line front end: feature extraction, training, evaluation and label statistics.

pub mod config;
mod data;
mod extract;
mod model;
mod output;

use std::path::PathBuf;

use anyhow::Result;
use clap::{Args, Parser, Subcommand};

pub use config::{CommonArgs, PipelineConfig, TrainArgs};

#[derive(Debug, Parser)]
#[command(name = "convofuse", version, about = "Multimodal violence detection for conversation segments")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Split long recordings into fixed-length segments.
    Segment(SegmentArgs),
    /// Compute per-segment features and write a feature store.
    Extract(ExtractArgs),
    /// Train one model on the whole store and write a checkpoint.
    Train(TrainCmd),
    /// Stratified k-fold cross-validation.
    Crossval(CrossvalArgs),
    /// Cross-validate every point of the hyperparameter grid.
    Gridsearch(TrainCmd),
    /// Score a checkpoint on a feature store.
    Eval(EvalArgs),
    /// Reviewer agreement and class balance of a manifest.
    Labelstats(LabelArgs),
    /// Write a synthetic labelled corpus for smoke tests.
    Synth(SynthArgs),
}

#[derive(Debug, Args)]
pub struct SegmentArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Input WAV file.
    #[arg(long)]
    pub input: PathBuf,
    /// Segment length in seconds.
    #[arg(long, default_value_t = convofuse::dataset::SEGMENT_SECONDS)]
    pub duration: f64,
}

#[derive(Debug, Args)]
pub struct ExtractArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Lexicon file (`category<TAB>pattern ...` per line).
    #[arg(long)]
    pub lexicon: Option<PathBuf>,
    /// Sentence embeddings as JSONL `{id, vec}`.
    #[arg(long)]
    pub embeddings: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct TrainCmd {
    #[command(flatten)]
    pub common: CommonArgs,
    #[command(flatten)]
    pub train: TrainArgs,
}

#[derive(Debug, Args)]
pub struct CrossvalArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[command(flatten)]
    pub train: TrainArgs,
    /// Also cross-validate the random-forest baseline on the same folds.
    #[arg(long)]
    pub baseline: bool,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[command(flatten)]
    pub train: TrainArgs,
    #[arg(long)]
    pub checkpoint: PathBuf,
}

#[derive(Debug, Args)]
pub struct LabelArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[command(flatten)]
    pub train: TrainArgs,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[arg(long, default_value_t = 200)]
    pub segments: usize,
    #[arg(long, default_value_t = 1.0)]
    pub seconds: f64,
    #[arg(long, default_value_t = 0.5)]
    pub positive_fraction: f64,
}

/// What a finished command reports back to `main`.
#[derive(Debug, Default)]
pub struct Summary {
    /// Items that failed without aborting the run.
    pub item_errors: usize,
}

pub fn run(cli: Cli) -> Result<Summary> {
    match cli.command {
        Command::Segment(a) => data::segment(&a),
        Command::Extract(a) => extract::extract(&a),
        Command::Train(a) => model::train(&a),
        Command::Crossval(a) => model::crossval(&a),
        Command::Gridsearch(a) => model::gridsearch(&a),
        Command::Eval(a) => model::eval(&a),
        Command::Labelstats(a) => data::labelstats(&a),
        Command::Synth(a) => data::synth(&a),
    }
}
