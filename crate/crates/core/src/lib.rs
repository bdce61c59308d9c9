//! Multimodal violence detection for conversation audio and transcripts.
//!
//! The crate is organised as a pipeline:
//!
//! * [`audio`] turns raw samples into framed time-domain and frequency-domain
//!   summaries (30 and 50 values per clip).
//! * [`mfcc`] computes cepstral coefficient matrices with deltas.
//! * [`text`] counts lexicon categories, reduces them with PCA and ingests
//!   precomputed sentence embeddings.
//! * [`neural`] is a small hand-differentiated layer toolkit.
//! * [`fusion`] assembles the four-branch classifier, trains it and runs the
//!   cross-validation harness.
//! * [`dataset`] owns the segment manifest and reviewer label statistics.

pub mod audio;
pub mod dataset;
pub mod error;
pub mod fusion;
pub mod mfcc;
pub mod neural;
pub mod pipeline;
pub mod stats;
pub mod store;
pub mod synthetic;
pub mod text;

pub use error::{Error, Result};
