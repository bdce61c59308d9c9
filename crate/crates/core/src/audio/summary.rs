use serde::{Deserialize, Serialize};

use super::spectral::{frequency_domain_features, stft, SpectralConfig};
use super::time::{frame_signal, time_domain_features, TimeFeatureConfig};
use super::{AudioClip, FrameConfig};
use crate::error::{Error, Result};

/// Mean, max, min, population standard deviation and root mean square.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SeriesStats {
    pub mean: f64,
    pub max: f64,
    pub min: f64,
    pub std: f64,
    pub rms: f64,
}

impl SeriesStats {
    pub fn to_array(self) -> [f64; 5] {
        [self.mean, self.max, self.min, self.std, self.rms]
    }
}

pub fn summarize(series: &[f64]) -> Result<SeriesStats> {
    if series.is_empty() {
        return Err(Error::invalid("cannot summarize an empty series"));
    }
    let n = series.len() as f64;
    let mean = series.iter().sum::<f64>() / n;
    let var = series.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    let mean_sq = series.iter().map(|x| x * x).sum::<f64>() / n;
    Ok(SeriesStats {
        mean,
        max: series.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        min: series.iter().copied().fold(f64::INFINITY, f64::min),
        std: var.sqrt(),
        rms: mean_sq.sqrt(),
    })
}

const STAT_NAMES: [&str; 5] = ["mean", "max", "min", "std", "rms"];

fn names<const N: usize>(features: [&str; N]) -> Vec<String> {
    features
        .iter()
        .flat_map(|f| STAT_NAMES.iter().map(move |s| format!("{s}_{f}")))
        .collect()
}

pub static TIME_FEATURE_NAMES: std::sync::LazyLock<Vec<String>> = std::sync::LazyLock::new(|| {
    names(["ae", "delta_ae", "rms", "delta_rms", "zcr", "delta_zcr"])
});

pub static SPECTRAL_FEATURE_NAMES: std::sync::LazyLock<Vec<String>> =
    std::sync::LazyLock::new(|| {
        names([
            "ber", "delta_ber", "sc", "delta_sc", "sbw", "delta_sbw", "sro", "delta_sro", "sf",
            "delta_sf",
        ])
    });

macro_rules! summary_vector {
    ($(#[$meta:meta])* $name:ident, $len:expr) => {
        $(#[$meta])*
        #[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
        #[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
        pub struct $name(Vec<f64>);

        impl $name {
            pub const LEN: usize = $len;

            pub fn as_slice(&self) -> &[f64] {
                &self.0
            }
        }

        impl TryFrom<Vec<f64>> for $name {
            type Error = Error;

            fn try_from(v: Vec<f64>) -> Result<Self> {
                if v.len() != $len {
                    return Err(Error::invalid(format!(
                        "{} needs {} values, got {}",
                        stringify!($name),
                        $len,
                        v.len()
                    )));
                }
                if v.iter().any(|x| !x.is_finite()) {
                    return Err(Error::NonFinite(stringify!($name).into()));
                }
                Ok(Self(v))
            }
        }

        impl From<$name> for Vec<f64> {
            fn from(s: $name) -> Vec<f64> {
                s.0
            }
        }
    };
}

summary_vector!(
    /// AE, dAE, RMS, dRMS, ZCR, dZCR, each as mean/max/min/std/rms.
    TimeDomainSummary,
    30
);
summary_vector!(
    /// BER, SC, SBW, SRO and SF with their deltas, each as mean/max/min/std/rms.
    SpectralSummary,
    50
);

fn flatten_stats(series: &[&[f64]]) -> Result<Vec<f64>> {
    let mut out = Vec::with_capacity(series.len() * 5);
    for s in series {
        out.extend(summarize(s)?.to_array());
    }
    Ok(out)
}

pub fn extract_time_summary(
    clip: &AudioClip,
    frames: &FrameConfig,
    cfg: &TimeFeatureConfig,
) -> Result<TimeDomainSummary> {
    let framed = frame_signal(clip, frames)?;
    let series = time_domain_features(&framed, cfg)?;
    TimeDomainSummary::try_from(flatten_stats(&series.ordered())?)
}

/// Needs three frames: the flux delta starts at frame 2.
pub fn extract_spectral_summary(
    clip: &AudioClip,
    frames: &FrameConfig,
    cfg: &SpectralConfig,
) -> Result<SpectralSummary> {
    let spec = stft(clip, frames)?;
    if spec.frame_count() < 3 {
        return Err(Error::TooShort {
            needed: frames.frame_size + 2 * frames.hop_size,
            got: clip.len(),
        });
    }
    let series = frequency_domain_features(&spec, cfg)?;
    SpectralSummary::try_from(flatten_stats(&series.ordered())?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_series() {
        let s = summarize(&[2.0, 2.0, 2.0]).unwrap();
        assert_eq!(s.to_array(), [2.0, 2.0, 2.0, 0.0, 2.0]);
    }

    #[test]
    fn symmetric_pair() {
        let s = summarize(&[-1.0, 1.0]).unwrap();
        assert_eq!((s.mean, s.std, s.rms), (0.0, 1.0, 1.0));
    }

    #[test]
    fn one_to_four() {
        let s = summarize(&[1.0, 2.0, 3.0, 4.0]).unwrap();
        assert_eq!(s.mean, 2.5);
        assert!((s.std - 1.118033988749895).abs() < 1e-12);
        assert!((s.rms - 2.7386127875258306).abs() < 1e-12);
    }

    #[test]
    fn empty_series_errors() {
        assert!(summarize(&[]).is_err());
    }

    #[test]
    fn names_follow_table_layout() {
        assert_eq!(TIME_FEATURE_NAMES.len(), 30);
        assert_eq!(TIME_FEATURE_NAMES[0], "mean_ae");
        assert_eq!(TIME_FEATURE_NAMES[9], "rms_delta_ae");
        assert_eq!(SPECTRAL_FEATURE_NAMES.len(), 50);
        assert_eq!(SPECTRAL_FEATURE_NAMES[49], "rms_delta_sf");
    }

    #[test]
    fn silent_clip_time_summary_is_zero() {
        let clip = AudioClip::new(vec![0.0; 4096], 8000).unwrap();
        let cfg = FrameConfig::new(256, 128).unwrap();
        let t = extract_time_summary(&clip, &cfg, &TimeFeatureConfig::default()).unwrap();
        assert!(t.as_slice().iter().all(|&v| v == 0.0));
        let s = extract_spectral_summary(&clip, &cfg, &SpectralConfig::default()).unwrap();
        assert_eq!(s.as_slice().len(), 50);
    }

    #[test]
    fn summary_length_is_enforced() {
        assert!(TimeDomainSummary::try_from(vec![0.0; 29]).is_err());
        assert!(serde_json::from_str::<SpectralSummary>("[1.0]").is_err());
    }
}
