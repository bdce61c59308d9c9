use std::f64::consts::PI;

use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use super::{deltas, AudioClip, FrameConfig};
use crate::error::{Error, Result};

/// Floor for magnitude-sum denominators.
pub const MAGNITUDE_EPS: f64 = 1e-10;
/// Band energy ratio reported when the upper band is empty but the lower is not.
pub const BER_CAP: f64 = 1e6;

/// Symmetric Hann window `0.5 (1 - cos(2 pi k / (K - 1)))`, `k = 0..K`.
pub fn hann_window(len: usize) -> Result<Vec<f64>> {
    if len < 2 {
        return Err(Error::invalid(format!("Hann window needs K >= 2, got {len}")));
    }
    let denom = (len - 1) as f64;
    Ok((0..len)
        .map(|k| 0.5 * (1.0 - (2.0 * PI * k as f64 / denom).cos()))
        .collect())
}

/// Short-time spectrum, `bins[frame][k]` for `k in 0..=K/2`.
#[derive(Debug, Clone)]
pub struct Spectrogram {
    pub bins: Vec<Vec<Complex64>>,
    pub frame_config: FrameConfig,
    pub sample_rate: u32,
}

impl Spectrogram {
    pub fn frame_count(&self) -> usize {
        self.bins.len()
    }

    pub fn magnitudes(&self) -> Vec<Vec<f64>> {
        self.bins
            .iter()
            .map(|row| row.iter().map(|c| c.norm()).collect())
            .collect()
    }

    /// Centre frequency of bin `k` in Hz.
    pub fn bin_frequency(&self, k: usize) -> f64 {
        k as f64 * self.sample_rate as f64 / self.frame_config.frame_size as f64
    }
}

pub fn stft(clip: &AudioClip, cfg: &FrameConfig) -> Result<Spectrogram> {
    cfg.validate()?;
    let samples = clip.samples();
    if let Some(i) = samples.iter().position(|s| !s.is_finite()) {
        return Err(Error::NonFinite(format!("audio sample {i}")));
    }
    if samples.len() < cfg.frame_size {
        return Err(Error::TooShort {
            needed: cfg.frame_size,
            got: samples.len(),
        });
    }
    let k = cfg.frame_size;
    let window = hann_window(k)?;
    let fft = FftPlanner::new().plan_fft_forward(k);
    let mut scratch = vec![Complex64::default(); fft.get_inplace_scratch_len()];
    let mut buf = vec![Complex64::default(); k];
    let bins = (0..cfg.frame_count(samples.len()))
        .map(|m| {
            let frame = &samples[m * cfg.hop_size..m * cfg.hop_size + k];
            for ((b, &s), &w) in buf.iter_mut().zip(frame).zip(&window) {
                *b = Complex64::new(s * w, 0.0);
            }
            fft.process_with_scratch(&mut buf, &mut scratch);
            buf[..=k / 2].to_vec()
        })
        .collect();
    Ok(Spectrogram {
        bins,
        frame_config: *cfg,
        sample_rate: clip.sample_rate(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectralConfig {
    /// Band energy ratio split, Hz.
    pub split_frequency: f64,
    /// Fraction of total magnitude that defines the roll-off bin.
    pub rolloff: f64,
}

impl Default for SpectralConfig {
    fn default() -> Self {
        Self {
            split_frequency: 2000.0,
            rolloff: 0.85,
        }
    }
}

/// Per-frame spectral features. Flux starts at frame 1, so `sf` and the
/// regular deltas have `T - 1` entries and `d_sf` has `T - 2`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralSeries {
    pub ber: Vec<f64>,
    pub sc: Vec<f64>,
    pub sbw: Vec<f64>,
    pub sro: Vec<f64>,
    pub sf: Vec<f64>,
    pub d_ber: Vec<f64>,
    pub d_sc: Vec<f64>,
    pub d_sbw: Vec<f64>,
    pub d_sro: Vec<f64>,
    pub d_sf: Vec<f64>,
}

impl SpectralSeries {
    /// Series in summary-table order: BER, dBER, SC, dSC, SBW, dSBW, SRO, dSRO, SF, dSF.
    pub fn ordered(&self) -> [&[f64]; 10] {
        [
            &self.ber,
            &self.d_ber,
            &self.sc,
            &self.d_sc,
            &self.sbw,
            &self.d_sbw,
            &self.sro,
            &self.d_sro,
            &self.sf,
            &self.d_sf,
        ]
    }
}

/// Power below bin `split` (bins `1..split`) over power from `split` to `N`.
pub(crate) fn band_energy_ratio(mags: &[f64], split: usize) -> f64 {
    let lower: f64 = mags[1..split].iter().map(|m| m * m).sum();
    let upper: f64 = mags[split..].iter().map(|m| m * m).sum();
    if upper <= MAGNITUDE_EPS {
        if lower <= MAGNITUDE_EPS {
            0.0
        } else {
            BER_CAP
        }
    } else {
        (lower / upper).min(BER_CAP)
    }
}

pub(crate) fn spectral_centroid(mags: &[f64]) -> f64 {
    let total: f64 = mags[1..].iter().sum();
    let weighted: f64 = mags.iter().enumerate().skip(1).map(|(n, m)| n as f64 * m).sum();
    weighted / total.max(MAGNITUDE_EPS)
}

pub(crate) fn spectral_bandwidth(mags: &[f64], centroid: f64) -> f64 {
    let total: f64 = mags[1..].iter().sum();
    let spread: f64 = mags
        .iter()
        .enumerate()
        .skip(1)
        .map(|(n, m)| (n as f64 - centroid).abs() * m)
        .sum();
    spread / total.max(MAGNITUDE_EPS)
}

/// Smallest bin `R >= 1` whose cumulative magnitude over `1..=R` reaches
/// `fraction` of the total.
pub(crate) fn spectral_rolloff(mags: &[f64], fraction: f64) -> f64 {
    let total: f64 = mags[1..].iter().sum();
    let threshold = fraction * total;
    let mut cum = 0.0;
    for (n, m) in mags.iter().enumerate().skip(1) {
        cum += m;
        if cum >= threshold {
            return n as f64;
        }
    }
    (mags.len() - 1) as f64
}

/// Half-wave rectified magnitude increase summed over all bins.
pub(crate) fn spectral_flux(prev: &[f64], cur: &[f64]) -> f64 {
    cur.iter()
        .zip(prev)
        .map(|(c, p)| (c - p).max(0.0))
        .sum()
}

pub(crate) fn split_bin(split_frequency: f64, cfg: &FrameConfig, sample_rate: u32) -> usize {
    let n = cfg.frame_size / 2;
    let bin = (split_frequency * cfg.frame_size as f64 / sample_rate as f64).round() as usize;
    bin.clamp(1, n)
}

pub fn frequency_domain_features(spec: &Spectrogram, cfg: &SpectralConfig) -> Result<SpectralSeries> {
    let frames = spec.frame_count();
    if frames < 2 {
        return Err(Error::invalid(format!(
            "spectral features need at least 2 frames, got {frames}"
        )));
    }
    let nyquist = spec.sample_rate as f64 / 2.0;
    if !(cfg.split_frequency > 0.0 && cfg.split_frequency < nyquist) {
        return Err(Error::invalid(format!(
            "split frequency {} Hz outside (0, {nyquist})",
            cfg.split_frequency
        )));
    }
    if !(cfg.rolloff > 0.0 && cfg.rolloff <= 1.0) {
        return Err(Error::invalid(format!("roll-off fraction {} outside (0, 1]", cfg.rolloff)));
    }
    let split = split_bin(cfg.split_frequency, &spec.frame_config, spec.sample_rate);
    let mags = spec.magnitudes();

    let ber: Vec<f64> = mags.iter().map(|m| band_energy_ratio(m, split)).collect();
    let sc: Vec<f64> = mags.iter().map(|m| spectral_centroid(m)).collect();
    let sbw: Vec<f64> = mags
        .iter()
        .zip(&sc)
        .map(|(m, &c)| spectral_bandwidth(m, c))
        .collect();
    let sro: Vec<f64> = mags.iter().map(|m| spectral_rolloff(m, cfg.rolloff)).collect();
    let sf: Vec<f64> = mags.windows(2).map(|w| spectral_flux(&w[0], &w[1])).collect();

    Ok(SpectralSeries {
        d_ber: deltas(&ber),
        d_sc: deltas(&sc),
        d_sbw: deltas(&sbw),
        d_sro: deltas(&sro),
        d_sf: deltas(&sf),
        ber,
        sc,
        sbw,
        sro,
        sf,
    })
}
