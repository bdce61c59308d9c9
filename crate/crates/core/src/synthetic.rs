//! Seeded synthetic corpus with class-dependent audio, transcripts and ratings.
//!
//! Violent segments are loud, bright and noisy with hostile vocabulary;
//! non-violent ones are quiet, low and tonal with friendly vocabulary. The
//! classes differ in every modality, so a working pipeline separates them.

use std::f64::consts::TAU;
use std::fs;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::audio::{write_wav, AudioClip};
use crate::dataset::{Manifest, SegmentRecord};
use crate::error::{Error, Result};
use crate::fusion::{Example, FeatureBundle};
use crate::pipeline::{extract_audio, lexicon_vector, reduce_lexicon, ExtractConfig};
use crate::text::{hash_embedding, write_embeddings, EmbeddingRecord, Lexicon, EMBEDDING_DIM};

const HOSTILE: &[&str] = &[
    "hate", "kill", "hit", "angry", "shut", "stupid", "idiot", "damn", "never", "hurt", "fight",
    "punch", "threat", "bloody", "nobody", "awful",
];
const FRIENDLY: &[&str] = &[
    "love", "good", "nice", "happy", "thanks", "friend", "family", "together", "please", "talk",
    "laugh", "kind", "sweet", "lovely", "care", "fun",
];
const SHARED: &[&str] = &["the", "to", "and", "you", "i", "it", "is", "we", "that", "go", "know", "think"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SyntheticConfig {
    pub segments: usize,
    pub positive_fraction: f64,
    pub seconds: f64,
    pub sample_rate: u32,
    pub seed: u64,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        Self {
            segments: 200,
            positive_fraction: 0.5,
            seconds: 1.0,
            sample_rate: 11_000,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticSegment {
    pub record: SegmentRecord,
    pub clip: AudioClip,
    pub violent: bool,
}

fn clip(violent: bool, cfg: &SyntheticConfig, rng: &mut ChaCha8Rng) -> Result<AudioClip> {
    let sr = cfg.sample_rate as f64;
    let n = (cfg.seconds * sr).round() as usize;
    let (amp, f0, harmonics, noise) = if violent {
        (rng.gen_range(0.45..0.8), rng.gen_range(250.0..420.0), 8, rng.gen_range(0.12..0.2))
    } else {
        (rng.gen_range(0.08..0.18), rng.gen_range(100.0..170.0), 2, rng.gen_range(0.005..0.02))
    };
    let burst_hz = rng.gen_range(2.0..5.0);
    let phases: Vec<f64> = (0..harmonics).map(|_| rng.gen_range(0.0..TAU)).collect();
    let nyquist = sr / 2.0;
    let samples = (0..n)
        .map(|i| {
            let t = i as f64 / sr;
            let mut s = 0.0;
            for (h, ph) in phases.iter().enumerate() {
                let f = f0 * (h + 1) as f64;
                if f < nyquist * 0.95 {
                    s += (TAU * f * t + ph).sin() / (h + 1) as f64;
                }
            }
            let envelope = if violent {
                0.6 + 0.4 * (TAU * burst_hz * t).sin().abs()
            } else {
                1.0
            };
            (amp * envelope * s / 2.0 + noise * rng.gen_range(-1.0..1.0)).clamp(-1.0, 1.0)
        })
        .collect();
    AudioClip::new(samples, cfg.sample_rate)
}

fn transcript(violent: bool, rng: &mut ChaCha8Rng) -> String {
    let pool = if violent { HOSTILE } else { FRIENDLY };
    let len = rng.gen_range(8..15);
    (0..len)
        .map(|_| {
            let src = if rng.gen_bool(0.6) { pool } else { SHARED };
            *src.choose(rng).expect("non-empty word list")
        })
        .collect::<Vec<_>>()
        .join(" ")
}

fn ratings(violent: bool, rng: &mut ChaCha8Rng) -> [u8; 3] {
    if violent {
        [rng.gen_range(2..=4), rng.gen_range(2..=4), rng.gen_range(2..=4)]
    } else {
        let mut r = [0; 3];
        if rng.gen_bool(0.3) {
            r[rng.gen_range(0..3)] = 1;
        }
        r
    }
}

/// Generates `segments` items; exactly `round(segments * positive_fraction)` are violent.
pub fn generate(cfg: &SyntheticConfig) -> Result<Vec<SyntheticSegment>> {
    if cfg.segments == 0 || !(0.0..=1.0).contains(&cfg.positive_fraction) || cfg.seconds <= 0.0 {
        return Err(Error::invalid("synthetic corpus needs segments > 0, fraction in [0, 1] and positive duration"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let positives = (cfg.segments as f64 * cfg.positive_fraction).round() as usize;
    let mut classes: Vec<bool> = (0..cfg.segments).map(|i| i < positives).collect();
    classes.shuffle(&mut rng);
    classes
        .into_iter()
        .enumerate()
        .map(|(i, violent)| {
            let id = format!("syn-{i:04}");
            let [r1, r2, r3] = ratings(violent, &mut rng);
            Ok(SyntheticSegment {
                record: SegmentRecord {
                    audio_path: format!("audio/{id}.wav"),
                    transcript: transcript(violent, &mut rng),
                    id,
                    r1,
                    r2,
                    r3,
                    source: Some("synthetic".into()),
                },
                clip: clip(violent, cfg, &mut rng)?,
                violent,
            })
        })
        .collect()
}

/// Writes `audio/*.wav`, `manifest.jsonl` and `embeddings.jsonl` (hash embeddings).
pub fn write_corpus(dir: impl AsRef<Path>, segments: &[SyntheticSegment]) -> Result<Manifest> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir.join("audio"))?;
    for s in segments {
        write_wav(dir.join(&s.record.audio_path), &s.clip)?;
    }
    let manifest = Manifest::new(segments.iter().map(|s| s.record.clone()).collect(), dir)?;
    manifest.save(dir.join("manifest.jsonl"))?;
    let emb: Vec<EmbeddingRecord> = segments
        .iter()
        .map(|s| EmbeddingRecord {
            id: s.record.id.clone(),
            vec: hash_embedding(&s.record.transcript, EMBEDDING_DIM),
        })
        .collect();
    write_embeddings(dir.join("embeddings.jsonl"), &emb)?;
    Ok(manifest)
}

/// Extracts every modality in memory, the same way the extractor does.
pub fn to_examples(segments: &[SyntheticSegment], cfg: &ExtractConfig, lexicon: &Lexicon) -> Result<Vec<Example>> {
    let lex: Vec<Vec<f64>> = segments
        .iter()
        .map(|s| lexicon_vector(&s.record.transcript, lexicon))
        .collect();
    let (_, reduced) = reduce_lexicon(&lex, cfg.pca_variance)?;
    segments
        .iter()
        .zip(reduced)
        .map(|(s, liwc)| {
            let audio = extract_audio(&s.clip, cfg)?;
            Ok(Example {
                features: FeatureBundle {
                    id: s.record.id.clone(),
                    liwc: Some(liwc),
                    time: Some(audio.time),
                    spectral: Some(audio.spectral),
                    mfcc: Some(audio.mfcc),
                    embedding: Some(hash_embedding(&s.record.transcript, EMBEDDING_DIM)),
                },
                label: s.violent,
            })
        })
        .collect()
}
