use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use convofuse::dataset::Manifest;
use convofuse::fusion::Example;
use convofuse::store::read_store;
use serde::Serialize;

use crate::config::{required, CommonArgs, PipelineConfig, TrainArgs};

pub fn out_dir(common: &CommonArgs) -> Result<PathBuf> {
    let dir = required(&common.out, "out")?.to_path_buf();
    fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
    Ok(dir)
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

/// Report wrapper: every artifact records the config and seed that produced it.
#[derive(Serialize)]
pub struct Report<'a, T: Serialize> {
    pub seed: u64,
    pub config: &'a PipelineConfig,
    #[serde(flatten)]
    pub body: T,
}

pub fn manifest(common: &CommonArgs) -> Result<Manifest> {
    let path = required(&common.manifest, "manifest")?;
    Manifest::load(path).with_context(|| format!("loading manifest {}", path.display()))
}

/// Stored features joined with manifest labels, in store order.
pub fn labelled_examples(common: &CommonArgs, train: &TrainArgs, cfg: &PipelineConfig) -> Result<Vec<Example>> {
    let store = required(&train.features, "features")?;
    let manifest = manifest(common)?;
    let mut labels = BTreeMap::new();
    for r in &manifest.records {
        labels.insert(r.id.as_str(), r.is_violent(cfg.aggregation, cfg.threshold)?);
    }
    let segments = read_store(store).with_context(|| format!("reading feature store {}", store.display()))?;
    let missing: Vec<&str> = segments
        .iter()
        .map(|s| s.bundle.id.as_str())
        .filter(|id| !labels.contains_key(id))
        .collect();
    if !missing.is_empty() {
        bail!("{} stored segment(s) have no manifest entry: {}", missing.len(), missing.join(", "));
    }
    Ok(segments
        .into_iter()
        .map(|s| {
            let label = labels[s.bundle.id.as_str()];
            Example { features: s.bundle, label }
        })
        .collect())
}
