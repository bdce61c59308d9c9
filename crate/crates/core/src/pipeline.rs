//! Per-segment feature extraction shared by the command line and the demo.

use serde::{Deserialize, Serialize};

use crate::audio::{
    extract_spectral_summary, extract_time_summary, resample, AudioClip, FrameConfig,
    SpectralConfig, TimeFeatureConfig,
};
use crate::error::{Error, Result};
use crate::mfcc::{mfcc, MfccConfig, MfccMatrix};
use crate::text::{bartlett_sphericity, category_counts, pca_fit, tokenize, BartlettResult, Lexicon, PcaModel};

/// Target rates accepted by the extractor.
pub const SUPPORTED_RATES: [u32; 3] = [22_050, 16_000, 11_000];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExtractConfig {
    pub sample_rate: u32,
    /// `None` scales 1024/512 to the target rate.
    pub frame: Option<FrameConfig>,
    pub time: TimeFeatureConfig,
    pub spectral: SpectralConfig,
    pub mfcc: MfccConfig,
    /// Cumulative explained-variance target for the lexicon PCA.
    pub pca_variance: f64,
}

impl Default for ExtractConfig {
    fn default() -> Self {
        Self {
            sample_rate: 22_050,
            frame: None,
            time: TimeFeatureConfig::default(),
            spectral: SpectralConfig::default(),
            mfcc: MfccConfig::default(),
            pca_variance: 0.95,
        }
    }
}

impl ExtractConfig {
    pub fn frame_config(&self) -> FrameConfig {
        self.frame.unwrap_or_else(|| FrameConfig::for_rate(self.sample_rate))
    }

    pub fn validate(&self) -> Result<()> {
        if !SUPPORTED_RATES.contains(&self.sample_rate) {
            return Err(Error::invalid(format!(
                "sample rate {} is not one of {SUPPORTED_RATES:?}",
                self.sample_rate
            )));
        }
        if !(self.pca_variance > 0.0 && self.pca_variance <= 1.0) {
            return Err(Error::invalid("PCA variance target must lie in (0, 1]"));
        }
        self.frame_config().validate()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AudioFeatures {
    pub time: Vec<f64>,
    pub spectral: Vec<f64>,
    pub mfcc: MfccMatrix,
}

/// Resamples to the target rate if needed, then computes the 30 time-domain
/// values, the 50 spectral values and the MFCC matrix.
pub fn extract_audio(clip: &AudioClip, cfg: &ExtractConfig) -> Result<AudioFeatures> {
    let resampled;
    let clip = if clip.sample_rate() == cfg.sample_rate {
        clip
    } else {
        resampled = resample(clip, cfg.sample_rate)?;
        &resampled
    };
    let frames = cfg.frame_config();
    Ok(AudioFeatures {
        time: extract_time_summary(clip, &frames, &cfg.time)?.as_slice().to_vec(),
        spectral: extract_spectral_summary(clip, &frames, &cfg.spectral)?.as_slice().to_vec(),
        mfcc: mfcc(clip, &frames, &cfg.mfcc)?,
    })
}

/// Category proportions of a transcript.
pub fn lexicon_vector(transcript: &str, lexicon: &Lexicon) -> Vec<f64> {
    category_counts(&tokenize(transcript), lexicon).proportions
}

/// PCA of the lexicon vectors plus a sphericity check on the non-constant columns.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LexiconReduction {
    pub pca: PcaModel,
    pub bartlett: Option<BartlettResult>,
    /// Why the sphericity test could not run, if it did not.
    pub bartlett_error: Option<String>,
    /// Columns left out of the sphericity test for having zero variance.
    pub constant_columns: Vec<usize>,
}

pub fn reduce_lexicon(rows: &[Vec<f64>], variance: f64) -> Result<(LexiconReduction, Vec<Vec<f64>>)> {
    let pca = pca_fit(rows, variance)?;
    let reduced = rows.iter().map(|r| pca.transform(r)).collect::<Result<Vec<_>>>()?;
    let p = rows.first().map_or(0, |r| r.len());
    let constant_columns: Vec<usize> = (0..p)
        .filter(|&j| rows.iter().all(|r| r[j] == rows[0][j]))
        .collect();
    let kept: Vec<Vec<f64>> = rows
        .iter()
        .map(|r| {
            r.iter()
                .enumerate()
                .filter(|(j, _)| !constant_columns.contains(j))
                .map(|(_, v)| *v)
                .collect()
        })
        .collect();
    let (bartlett, bartlett_error) = if constant_columns.len() == p {
        (None, Some("every lexicon column is constant".to_string()))
    } else {
        match bartlett_sphericity(&kept) {
            Ok(b) => (Some(b), None),
            Err(e) => (None, Some(e.to_string())),
        }
    };
    Ok((
        LexiconReduction {
            pca,
            bartlett,
            bartlett_error,
            constant_columns,
        },
        reduced,
    ))
}
