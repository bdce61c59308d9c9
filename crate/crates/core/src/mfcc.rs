//! Mel-frequency cepstral coefficients with regression deltas.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::audio::{stft, AudioClip, FrameConfig};
use crate::error::{Error, Result};

/// Floor applied before the log of filterbank energies.
pub const LOG_FLOOR: f64 = 1e-10;
/// Half-width of the delta regression window, in frames.
pub const DELTA_WINDOW: usize = 2;

pub fn hz_to_mel(hz: f64) -> Result<f64> {
    if !(hz >= 0.0) {
        return Err(Error::invalid(format!("negative frequency {hz} Hz")));
    }
    Ok(2595.0 * (1.0 + hz / 700.0).log10())
}

pub fn mel_to_hz(mel: f64) -> f64 {
    700.0 * (10f64.powf(mel / 2595.0) - 1.0)
}

/// Triangular filters over the `n_fft / 2 + 1` periodogram bins.
#[derive(Debug, Clone, PartialEq)]
pub struct MelFilterBank {
    /// `weights[filter][bin]`
    pub weights: Vec<Vec<f64>>,
    /// `n_mels + 2` band edges in Hz; filter `i` spans `edges[i]..edges[i + 2]`.
    pub edges_hz: Vec<f64>,
}

impl MelFilterBank {
    pub fn n_mels(&self) -> usize {
        self.weights.len()
    }

    pub fn centers_hz(&self) -> &[f64] {
        &self.edges_hz[1..self.edges_hz.len() - 1]
    }

    pub fn apply(&self, power: &[f64]) -> Vec<f64> {
        self.weights
            .iter()
            .map(|w| w.iter().zip(power).map(|(a, b)| a * b).sum())
            .collect()
    }
}

pub fn build_filterbank(
    sample_rate: u32,
    n_fft: usize,
    n_mels: usize,
    f_min: f64,
    f_max: f64,
) -> Result<MelFilterBank> {
    let nyquist = sample_rate as f64 / 2.0;
    if n_mels < 2 {
        return Err(Error::invalid(format!("need at least 2 mel filters, got {n_mels}")));
    }
    if n_fft < 2 {
        return Err(Error::invalid("FFT size must be at least 2"));
    }
    if !(f_min >= 0.0 && f_min < f_max) {
        return Err(Error::invalid(format!("mel band {f_min}..{f_max} Hz is empty")));
    }
    if f_max > nyquist + 1e-9 {
        return Err(Error::invalid(format!(
            "f_max {f_max} Hz exceeds Nyquist {nyquist} Hz"
        )));
    }
    let (lo, hi) = (hz_to_mel(f_min)?, hz_to_mel(f_max)?);
    let edges_hz: Vec<f64> = (0..n_mels + 2)
        .map(|i| mel_to_hz(lo + (hi - lo) * i as f64 / (n_mels + 1) as f64))
        .collect();
    let bins = n_fft / 2 + 1;
    let bin_hz = sample_rate as f64 / n_fft as f64;
    let weights = edges_hz
        .windows(3)
        .map(|e| {
            let (left, centre, right) = (e[0], e[1], e[2]);
            (0..bins)
                .map(|k| {
                    let f = k as f64 * bin_hz;
                    let rise = (f - left) / (centre - left);
                    let fall = (right - f) / (right - centre);
                    rise.min(fall).max(0.0)
                })
                .collect()
        })
        .collect();
    Ok(MelFilterBank { weights, edges_hz })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MfccConfig {
    pub n_mels: usize,
    pub n_coeffs: usize,
    /// Append first- and second-order deltas.
    pub include_deltas: bool,
    pub f_min: f64,
    /// Upper band edge; `None` means Nyquist.
    pub f_max: Option<f64>,
}

impl Default for MfccConfig {
    fn default() -> Self {
        Self {
            n_mels: 26,
            n_coeffs: 13,
            include_deltas: true,
            f_min: 0.0,
            f_max: None,
        }
    }
}

impl MfccConfig {
    pub fn channels(&self) -> usize {
        self.n_coeffs * self.orders()
    }

    /// Number of stacked blocks: static coefficients plus delta orders.
    pub fn orders(&self) -> usize {
        if self.include_deltas {
            3
        } else {
            1
        }
    }
}

/// Coefficients laid out `[order][coefficient][frame]`; `channels = orders * n_coeffs`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MfccMatrix {
    pub n_coeffs: usize,
    pub orders: usize,
    pub frames: usize,
    pub data: Vec<f64>,
}

impl MfccMatrix {
    pub fn channels(&self) -> usize {
        self.n_coeffs * self.orders
    }

    pub fn get(&self, channel: usize, frame: usize) -> f64 {
        self.data[channel * self.frames + frame]
    }

    pub fn row(&self, channel: usize) -> &[f64] {
        &self.data[channel * self.frames..(channel + 1) * self.frames]
    }

    /// Image shape `[orders, n_coeffs, frames]` for the CNN branch.
    pub fn image_shape(&self) -> [usize; 3] {
        [self.orders, self.n_coeffs, self.frames]
    }
}

/// Orthonormal DCT-II, first `keep` coefficients.
pub fn dct_ortho(x: &[f64], keep: usize) -> Vec<f64> {
    let n = x.len() as f64;
    (0..keep.min(x.len()))
        .map(|k| {
            let scale = if k == 0 { (1.0 / n).sqrt() } else { (2.0 / n).sqrt() };
            scale
                * x.iter()
                    .enumerate()
                    .map(|(i, &v)| v * (PI * k as f64 * (2 * i + 1) as f64 / (2.0 * n)).cos())
                    .sum::<f64>()
        })
        .collect()
}

/// Inverse of [`dct_ortho`] given all coefficients (DCT-III with matching scaling).
pub fn idct_ortho(c: &[f64]) -> Vec<f64> {
    let n = c.len() as f64;
    (0..c.len())
        .map(|i| {
            c.iter()
                .enumerate()
                .map(|(k, &v)| {
                    let scale = if k == 0 { (1.0 / n).sqrt() } else { (2.0 / n).sqrt() };
                    scale * v * (PI * k as f64 * (2 * i + 1) as f64 / (2.0 * n)).cos()
                })
                .sum()
        })
        .collect()
}

/// Regression deltas over +/- [`DELTA_WINDOW`] frames with edge replication.
pub fn regression_deltas(series: &[f64]) -> Vec<f64> {
    let t = series.len() as isize;
    let denom = 2.0 * (1..=DELTA_WINDOW).map(|n| (n * n) as f64).sum::<f64>();
    let at = |i: isize| series[i.clamp(0, t - 1) as usize];
    (0..t)
        .map(|i| {
            (1..=DELTA_WINDOW as isize)
                .map(|n| n as f64 * (at(i + n) - at(i - n)))
                .sum::<f64>()
                / denom
        })
        .collect()
}

pub fn mfcc(clip: &AudioClip, frame_cfg: &FrameConfig, cfg: &MfccConfig) -> Result<MfccMatrix> {
    if cfg.n_coeffs == 0 || cfg.n_coeffs > cfg.n_mels {
        return Err(Error::invalid(format!(
            "n_coeffs {} must be in 1..={}",
            cfg.n_coeffs, cfg.n_mels
        )));
    }
    let spec = stft(clip, frame_cfg)?;
    let k = frame_cfg.frame_size;
    let f_max = cfg.f_max.unwrap_or(clip.sample_rate() as f64 / 2.0);
    let bank = build_filterbank(clip.sample_rate(), k, cfg.n_mels, cfg.f_min, f_max)?;
    let frames = spec.frame_count();

    // [coefficient][frame]
    let mut coeffs = vec![vec![0.0; frames]; cfg.n_coeffs];
    for (t, row) in spec.bins.iter().enumerate() {
        let power: Vec<f64> = row.iter().map(|c| c.norm_sqr() / k as f64).collect();
        let log_energy: Vec<f64> = bank
            .apply(&power)
            .into_iter()
            .map(|e| e.max(LOG_FLOOR).ln())
            .collect();
        for (c, v) in dct_ortho(&log_energy, cfg.n_coeffs).into_iter().enumerate() {
            coeffs[c][t] = v;
        }
    }

    let mut data = Vec::with_capacity(cfg.channels() * frames);
    data.extend(coeffs.iter().flatten());
    if cfg.include_deltas {
        let d1: Vec<Vec<f64>> = coeffs.iter().map(|r| regression_deltas(r)).collect();
        let d2: Vec<Vec<f64>> = d1.iter().map(|r| regression_deltas(r)).collect();
        data.extend(d1.iter().flatten());
        data.extend(d2.iter().flatten());
    }
    Ok(MfccMatrix {
        n_coeffs: cfg.n_coeffs,
        orders: cfg.orders(),
        frames,
        data,
    })
}
