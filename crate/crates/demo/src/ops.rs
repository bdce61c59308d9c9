//! Plain functions behind the browser bindings, testable natively.

use std::f64::consts::TAU;

use convofuse::audio::{
    frame_signal, frequency_domain_features, stft, time_domain_features, AudioClip, SpectralConfig,
    TimeFeatureConfig, SPECTRAL_FEATURE_NAMES, TIME_FEATURE_NAMES,
};
use convofuse::mfcc::build_filterbank;
use convofuse::pipeline::{extract_audio, ExtractConfig};
use convofuse::Result;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

/// Columns in the waveform preview.
const PREVIEW_COLUMNS: usize = 600;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Shape {
    Tone,
    Chirp,
    /// Harmonic voice-like source with a bursty envelope.
    Shout,
}

impl Shape {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "tone" => Some(Self::Tone),
            "chirp" => Some(Self::Chirp),
            "shout" => Some(Self::Shout),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct SignalSpec {
    pub shape: Shape,
    pub sample_rate: u32,
    pub seconds: f64,
    pub f0: f64,
    /// Uniform noise amplitude.
    pub noise: f64,
    pub seed: u64,
}

pub fn synthesize(s: &SignalSpec) -> Result<AudioClip> {
    let sr = s.sample_rate as f64;
    let n = (s.seconds * sr).round().max(1.0) as usize;
    let mut rng = ChaCha8Rng::seed_from_u64(s.seed);
    let nyquist = sr / 2.0;
    let samples = (0..n)
        .map(|i| {
            let t = i as f64 / sr;
            let clean = match s.shape {
                Shape::Tone => 0.5 * (TAU * s.f0 * t).sin(),
                Shape::Chirp => {
                    // linear sweep from f0 to 8 f0 (capped at Nyquist) over the clip
                    let f1 = (8.0 * s.f0).min(0.95 * nyquist);
                    let k = (f1 - s.f0) / s.seconds;
                    0.5 * (TAU * (s.f0 * t + 0.5 * k * t * t)).sin()
                }
                Shape::Shout => {
                    let mut v = 0.0;
                    for h in 1..=8 {
                        let f = s.f0 * h as f64;
                        if f < 0.95 * nyquist {
                            v += (TAU * f * t).sin() / h as f64;
                        }
                    }
                    0.3 * v * (0.6 + 0.4 * (TAU * 3.0 * t).sin().abs())
                }
            };
            (clean + s.noise * rng.gen_range(-1.0..1.0)).clamp(-1.0, 1.0)
        })
        .collect();
    AudioClip::new(samples, s.sample_rate)
}

/// Min/max per column for drawing the waveform.
fn preview(samples: &[f64]) -> Vec<[f64; 2]> {
    let cols = PREVIEW_COLUMNS.min(samples.len());
    (0..cols)
        .map(|c| {
            let a = c * samples.len() / cols;
            let b = ((c + 1) * samples.len() / cols).max(a + 1);
            let chunk = &samples[a..b];
            [
                chunk.iter().copied().fold(f64::INFINITY, f64::min),
                chunk.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            ]
        })
        .collect()
}

/// Waveform, per-frame feature curves and both summary vectors.
pub fn feature_curves(s: &SignalSpec) -> Result<Value> {
    let clip = synthesize(s)?;
    let cfg = ExtractConfig {
        sample_rate: s.sample_rate,
        ..ExtractConfig::default()
    };
    cfg.validate()?;
    let frames = cfg.frame_config();
    let time = time_domain_features(&frame_signal(&clip, &frames)?, &TimeFeatureConfig::default())?;
    let spec = stft(&clip, &frames)?;
    let spectral = frequency_domain_features(&spec, &SpectralConfig::default())?;
    let hz = |bins: &[f64]| -> Vec<f64> { bins.iter().map(|&b| b * spec.bin_frequency(1)).collect() };
    let audio = extract_audio(&clip, &cfg)?;
    let named = |names: &[String], values: &[f64]| -> Vec<Value> {
        names.iter().zip(values).map(|(n, v)| json!({ "name": n, "value": v })).collect()
    };
    Ok(json!({
        "sample_rate": s.sample_rate,
        "frame_size": frames.frame_size,
        "hop_size": frames.hop_size,
        "waveform": preview(clip.samples()),
        "curves": {
            "rms": time.rms,
            "zcr": time.zcr,
            "centroid_hz": hz(&spectral.sc),
            "rolloff_hz": hz(&spectral.sro),
            "flux": spectral.sf,
        },
        "time_summary": named(&TIME_FEATURE_NAMES, &audio.time),
        "spectral_summary": named(&SPECTRAL_FEATURE_NAMES, &audio.spectral),
    }))
}

/// MFCC matrix with deltas, `[order][coefficient][frame]`.
pub fn mfcc_image(s: &SignalSpec) -> Result<Value> {
    let clip = synthesize(s)?;
    let cfg = ExtractConfig {
        sample_rate: s.sample_rate,
        ..ExtractConfig::default()
    };
    let m = extract_audio(&clip, &cfg)?.mfcc;
    Ok(json!({
        "orders": m.orders,
        "n_coeffs": m.n_coeffs,
        "frames": m.frames,
        "data": m.data,
    }))
}

pub fn mel_filterbank(sample_rate: u32, n_fft: usize, n_mels: usize) -> Result<Value> {
    let bank = build_filterbank(sample_rate, n_fft, n_mels, 0.0, sample_rate as f64 / 2.0)?;
    Ok(json!({
        "bin_hz": sample_rate as f64 / n_fft as f64,
        "edges_hz": bank.edges_hz,
        "weights": bank.weights,
    }))
}
