//! Browser bindings: synthesise a signal and inspect the features the
//! classifier sees. Every function returns JSON text.

pub mod ops;

use ops::{Shape, SignalSpec};
use wasm_bindgen::prelude::*;

fn spec(shape: &str, sample_rate: u32, f0: f64, noise: f64, seed: u32) -> Result<SignalSpec, JsError> {
    let shape = Shape::parse(shape).ok_or_else(|| JsError::new(&format!("unknown signal shape `{shape}`")))?;
    Ok(SignalSpec {
        shape,
        sample_rate,
        seconds: 2.0,
        f0,
        noise,
        seed: u64::from(seed),
    })
}

fn to_js(r: convofuse::Result<serde_json::Value>) -> Result<String, JsError> {
    r.map(|v| v.to_string()).map_err(|e| JsError::new(&e.to_string()))
}

/// Waveform preview, per-frame curves and the 30 + 50 summary values.
#[wasm_bindgen]
pub fn feature_curves(shape: &str, sample_rate: u32, f0: f64, noise: f64, seed: u32) -> Result<String, JsError> {
    to_js(ops::feature_curves(&spec(shape, sample_rate, f0, noise, seed)?))
}

/// Cepstral coefficients with first and second deltas.
#[wasm_bindgen]
pub fn mfcc_image(shape: &str, sample_rate: u32, f0: f64, noise: f64, seed: u32) -> Result<String, JsError> {
    to_js(ops::mfcc_image(&spec(shape, sample_rate, f0, noise, seed)?))
}

#[wasm_bindgen]
pub fn mel_filterbank(sample_rate: u32, n_fft: usize, n_mels: usize) -> Result<String, JsError> {
    to_js(ops::mel_filterbank(sample_rate, n_fft, n_mels))
}
