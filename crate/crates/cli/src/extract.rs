use std::collections::BTreeMap;

use anyhow::{Context, Result};
use convofuse::audio::read_wav;
use convofuse::fusion::FeatureBundle;
use convofuse::pipeline::{extract_audio, lexicon_vector, reduce_lexicon, AudioFeatures};
use convofuse::store::{write_store, StoredSegment};
use convofuse::text::{hash_embedding, load_embeddings, Lexicon, EMBEDDING_DIM};
use rayon::prelude::*;
use serde::Serialize;

use crate::config::PipelineConfig;
use crate::output::{manifest, out_dir, write_json, Report};
use crate::{ExtractArgs, Summary};

#[derive(Debug, Serialize)]
struct ItemError {
    id: String,
    stage: &'static str,
    message: String,
}

#[derive(Serialize)]
struct ExtractBody {
    segments: usize,
    embedding_source: String,
    lexicon_components: Option<usize>,
    errors: Vec<ItemError>,
}

pub fn extract(args: &ExtractArgs) -> Result<Summary> {
    let mut cfg = PipelineConfig::resolve(&args.common, None)?;
    if args.lexicon.is_some() {
        cfg.lexicon = args.lexicon.clone();
    }
    if args.embeddings.is_some() {
        cfg.embeddings = args.embeddings.clone();
    }
    let manifest = manifest(&args.common)?;
    let out = out_dir(&args.common)?;
    let lexicon = match &cfg.lexicon {
        Some(p) => Lexicon::from_path(p).with_context(|| format!("loading lexicon {}", p.display()))?,
        None => Lexicon::default_lexicon(),
    };
    let embeddings = match &cfg.embeddings {
        Some(p) => Some(load_embeddings(p).with_context(|| format!("loading embeddings {}", p.display()))?),
        None => None,
    };
    let mut errors = Vec::new();

    let audio: Vec<std::result::Result<AudioFeatures, String>> = manifest
        .records
        .par_iter()
        .map(|r| {
            read_wav(manifest.audio_path(r))
                .and_then(|clip| extract_audio(&clip, &cfg.extract))
                .map_err(|e| e.to_string())
        })
        .collect();

    let lex_rows: Vec<Vec<f64>> = manifest
        .records
        .iter()
        .map(|r| lexicon_vector(&r.transcript, &lexicon))
        .collect();
    let (reduction, reduced) = match reduce_lexicon(&lex_rows, cfg.extract.pca_variance) {
        Ok((red, rows)) => (Some(red), rows.into_iter().map(Some).collect()),
        Err(e) => {
            errors.push(ItemError {
                id: "*".into(),
                stage: "lexicon_pca",
                message: e.to_string(),
            });
            (None, vec![None; lex_rows.len()])
        }
    };

    let mut segments = Vec::with_capacity(manifest.len());
    for (((r, a), lex), liwc) in manifest.records.iter().zip(audio).zip(lex_rows).zip(reduced) {
        let (time, spectral, mfcc) = match a {
            Ok(f) => (Some(f.time), Some(f.spectral), Some(f.mfcc)),
            Err(message) => {
                errors.push(ItemError {
                    id: r.id.clone(),
                    stage: "audio",
                    message,
                });
                (None, None, None)
            }
        };
        let embedding = match &embeddings {
            Some(map) => embedding_for(map, &r.id, &mut errors),
            None => Some(hash_embedding(&r.transcript, EMBEDDING_DIM)),
        };
        segments.push(StoredSegment {
            bundle: FeatureBundle {
                id: r.id.clone(),
                liwc,
                time,
                spectral,
                mfcc,
                embedding,
            },
            lexicon: Some(lex),
        });
    }
    write_store(&out, &segments, reduction.as_ref())?;

    for e in &errors {
        eprintln!("{} [{}]: {}", e.id, e.stage, e.message);
    }
    let body = ExtractBody {
        segments: segments.len(),
        embedding_source: match &cfg.embeddings {
            Some(p) => p.display().to_string(),
            None => "hash".into(),
        },
        lexicon_components: reduction.as_ref().map(|r| r.pca.n_components()),
        errors,
    };
    let item_errors = body.errors.len();
    write_json(&out.join("extract_report.json"), &Report { seed: cfg.seed, config: &cfg, body })?;
    println!("extracted {} segment(s) into {}", segments.len(), out.display());
    Ok(Summary { item_errors })
}

fn embedding_for(
    map: &BTreeMap<String, convofuse::text::EmbeddingRecord>,
    id: &str,
    errors: &mut Vec<ItemError>,
) -> Option<Vec<f64>> {
    match map.get(id) {
        Some(r) => Some(r.vec.clone()),
        None => {
            errors.push(ItemError {
                id: id.to_string(),
                stage: "embedding",
                message: "no embedding with this id".into(),
            });
            None
        }
    }
}
