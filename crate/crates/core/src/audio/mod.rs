//! Framed time-domain and frequency-domain audio features.
//!
//! Everything here is a pure function of its inputs. A clip is cut into
//! frames of `frame_size` samples advanced by `hop_size`; per-frame series are
//! computed, differenced, and reduced to five descriptive statistics each.

mod resample;
mod spectral;
mod summary;
mod time;
mod wav;

pub use resample::resample;
pub use spectral::{
    frequency_domain_features, hann_window, stft, SpectralConfig, SpectralSeries, Spectrogram,
    BER_CAP, MAGNITUDE_EPS,
};
pub use summary::{
    extract_spectral_summary, extract_time_summary, summarize, SeriesStats, SpectralSummary,
    TimeDomainSummary, SPECTRAL_FEATURE_NAMES, TIME_FEATURE_NAMES,
};
pub use time::{frame_signal, time_domain_features, TimeFeatureConfig, TimeSeries};
pub use wav::{read_wav, write_wav};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Rate the default frame geometry is specified at.
pub const REFERENCE_RATE: u32 = 22_050;
pub const REFERENCE_FRAME: usize = 1024;

/// Mono audio with its sample rate.
#[derive(Debug, Clone, PartialEq)]
pub struct AudioClip {
    samples: Vec<f64>,
    sample_rate: u32,
}

impl AudioClip {
    pub fn new(samples: Vec<f64>, sample_rate: u32) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::invalid("audio clip has no samples"));
        }
        if sample_rate == 0 {
            return Err(Error::invalid("sample rate must be positive"));
        }
        if let Some(i) = samples.iter().position(|s| !s.is_finite()) {
            return Err(Error::NonFinite(format!("audio sample {i}")));
        }
        Ok(Self {
            samples,
            sample_rate,
        })
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn sample_rate(&self) -> u32 {
        self.sample_rate
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn duration_secs(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate as f64
    }

    pub fn into_samples(self) -> Vec<f64> {
        self.samples
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FrameConfig {
    pub frame_size: usize,
    pub hop_size: usize,
}

impl FrameConfig {
    pub fn new(frame_size: usize, hop_size: usize) -> Result<Self> {
        if frame_size == 0 {
            return Err(Error::invalid("frame size must be positive"));
        }
        if hop_size == 0 || hop_size > frame_size {
            return Err(Error::invalid(format!(
                "hop size {hop_size} must be in 1..={frame_size}"
            )));
        }
        Ok(Self {
            frame_size,
            hop_size,
        })
    }

    /// 1024/512 at 22050 Hz, scaled proportionally to `sample_rate`.
    pub fn for_rate(sample_rate: u32) -> Self {
        let k = ((REFERENCE_FRAME as f64 * sample_rate as f64 / REFERENCE_RATE as f64).round()
            as usize)
            .max(2);
        Self {
            frame_size: k,
            hop_size: (k / 2).max(1),
        }
    }

    /// Number of complete frames in a signal of `len` samples.
    pub fn frame_count(&self, len: usize) -> usize {
        if len < self.frame_size {
            0
        } else {
            (len - self.frame_size) / self.hop_size + 1
        }
    }

    pub fn bin_count(&self) -> usize {
        self.frame_size / 2 + 1
    }

    pub(crate) fn validate(&self) -> Result<()> {
        Self::new(self.frame_size, self.hop_size).map(|_| ())
    }
}

impl Default for FrameConfig {
    fn default() -> Self {
        Self::for_rate(REFERENCE_RATE)
    }
}

/// First differences `x[t] - x[t-1]` for `t >= 1`.
pub fn deltas(series: &[f64]) -> Vec<f64> {
    series.windows(2).map(|w| w[1] - w[0]).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn clip_rejects_bad_input() {
        assert!(AudioClip::new(vec![], 100).is_err());
        assert!(AudioClip::new(vec![0.0], 0).is_err());
        assert!(matches!(
            AudioClip::new(vec![0.0, f64::NAN], 100),
            Err(Error::NonFinite(_))
        ));
    }

    #[test]
    fn frame_config_bounds() {
        assert!(FrameConfig::new(0, 1).is_err());
        assert!(FrameConfig::new(4, 0).is_err());
        assert!(FrameConfig::new(4, 5).is_err());
        assert!(FrameConfig::new(4, 4).is_ok());
    }

    #[test]
    fn default_geometry_scales_with_rate() {
        assert_eq!(FrameConfig::default(), FrameConfig::new(1024, 512).unwrap());
        assert_eq!(FrameConfig::for_rate(11_025).frame_size, 512);
        assert_eq!(FrameConfig::for_rate(11_000).frame_size, 511);
        assert_eq!(FrameConfig::for_rate(16_000).frame_size, 743);
    }

    #[test]
    fn ten_second_segment_frame_count() {
        assert_eq!(FrameConfig::default().frame_count(220_500), 429);
    }

    #[test]
    fn delta_of_constant_is_zero() {
        assert!(deltas(&[3.0; 6]).iter().all(|&d| d == 0.0));
        assert_eq!(deltas(&[1.0, 4.0, 2.0]), vec![3.0, -2.0]);
    }
}
