use serde::{Deserialize, Serialize};

use super::{deltas, AudioClip, FrameConfig};
use crate::error::{Error, Result};

/// Splits a clip into frames `[tH, tH + K)`; a trailing partial frame is dropped.
pub fn frame_signal<'a>(clip: &'a AudioClip, cfg: &FrameConfig) -> Result<Vec<&'a [f64]>> {
    cfg.validate()?;
    let samples = clip.samples();
    if samples.len() < cfg.frame_size {
        return Err(Error::TooShort {
            needed: cfg.frame_size,
            got: samples.len(),
        });
    }
    let count = cfg.frame_count(samples.len());
    Ok((0..count)
        .map(|t| &samples[t * cfg.hop_size..t * cfg.hop_size + cfg.frame_size])
        .collect())
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TimeFeatureConfig {
    /// Use `max |s(k)|` for the amplitude envelope instead of `max s(k)`.
    pub absolute_envelope: bool,
}

/// Per-frame amplitude envelope, RMS energy and zero-crossing rate, plus
/// their first differences (one shorter than the base series).
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeries {
    pub ae: Vec<f64>,
    pub rms: Vec<f64>,
    pub zcr: Vec<f64>,
    pub d_ae: Vec<f64>,
    pub d_rms: Vec<f64>,
    pub d_zcr: Vec<f64>,
}

impl TimeSeries {
    /// Series in summary-table order: AE, dAE, RMS, dRMS, ZCR, dZCR.
    pub fn ordered(&self) -> [&[f64]; 6] {
        [
            &self.ae,
            &self.d_ae,
            &self.rms,
            &self.d_rms,
            &self.zcr,
            &self.d_zcr,
        ]
    }
}

fn sign(x: f64) -> f64 {
    if x >= 0.0 {
        1.0
    } else {
        -1.0
    }
}

pub(crate) fn amplitude_envelope(frame: &[f64], absolute: bool) -> f64 {
    if absolute {
        frame.iter().fold(0.0, |m, &s| m.max(s.abs()))
    } else {
        frame.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }
}

pub(crate) fn rms_energy(frame: &[f64]) -> f64 {
    (frame.iter().map(|s| s * s).sum::<f64>() / frame.len() as f64).sqrt()
}

pub(crate) fn zero_crossing_rate(frame: &[f64]) -> f64 {
    0.5 * frame
        .windows(2)
        .map(|w| (sign(w[0]) - sign(w[1])).abs())
        .sum::<f64>()
}

pub fn time_domain_features(frames: &[&[f64]], cfg: &TimeFeatureConfig) -> Result<TimeSeries> {
    if frames.len() < 2 {
        return Err(Error::invalid(format!(
            "time-domain deltas need at least 2 frames, got {}",
            frames.len()
        )));
    }
    let ae: Vec<f64> = frames
        .iter()
        .map(|f| amplitude_envelope(f, cfg.absolute_envelope))
        .collect();
    let rms: Vec<f64> = frames.iter().map(|f| rms_energy(f)).collect();
    let zcr: Vec<f64> = frames.iter().map(|f| zero_crossing_rate(f)).collect();
    Ok(TimeSeries {
        d_ae: deltas(&ae),
        d_rms: deltas(&rms),
        d_zcr: deltas(&zcr),
        ae,
        rms,
        zcr,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn frame_counts() {
        let clip = AudioClip::new((0..10).map(f64::from).collect(), 10).unwrap();
        let frames = frame_signal(&clip, &FrameConfig::new(4, 2).unwrap()).unwrap();
        assert_eq!(frames.len(), 4);
        assert_eq!(frames[3], &[6.0, 7.0, 8.0, 9.0]);

        let clip = AudioClip::new(vec![1.0, 2.0, 3.0, 4.0], 10).unwrap();
        let frames = frame_signal(&clip, &FrameConfig::new(4, 4).unwrap()).unwrap();
        assert_eq!(frames, vec![clip.samples()]);
    }

    #[test]
    fn short_clip_is_an_error() {
        let clip = AudioClip::new(vec![0.0; 3], 10).unwrap();
        assert!(matches!(
            frame_signal(&clip, &FrameConfig::new(4, 2).unwrap()),
            Err(Error::TooShort { needed: 4, got: 3 })
        ));
    }

    #[test]
    fn envelope_is_signed_max_by_default() {
        assert_eq!(amplitude_envelope(&[0.1, -0.9, 0.3], false), 0.3);
        assert_eq!(amplitude_envelope(&[0.1, -0.9, 0.3], true), 0.9);
    }

    #[test]
    fn rms_and_zcr_fixtures() {
        assert!((rms_energy(&[0.5; 8]) - 0.5).abs() < 1e-15);
        assert_eq!(zero_crossing_rate(&[1.0, -1.0, 1.0, -1.0]), 3.0);
        // sign(0) counts as positive
        assert_eq!(zero_crossing_rate(&[0.0, 1.0, 0.0]), 0.0);
        assert_eq!(zero_crossing_rate(&[0.0, -1.0]), 1.0);
    }

    #[test]
    fn single_frame_has_no_deltas() {
        let f: &[f64] = &[1.0, 2.0];
        assert!(time_domain_features(&[f], &TimeFeatureConfig::default()).is_err());
    }

    proptest! {
        #[test]
        fn positive_scaling(frame in prop::collection::vec(-1.0f64..1.0, 2..64), c in 0.01f64..10.0) {
            let scaled: Vec<f64> = frame.iter().map(|s| s * c).collect();
            let ae = amplitude_envelope(&frame, false);
            prop_assert!((amplitude_envelope(&scaled, false) - c * ae).abs() < 1e-12 * (1.0 + c));
            prop_assert!((rms_energy(&scaled) - c * rms_energy(&frame)).abs() < 1e-12 * (1.0 + c));
            prop_assert_eq!(zero_crossing_rate(&scaled), zero_crossing_rate(&frame));
        }

        #[test]
        fn zcr_is_integer_in_range(frame in prop::collection::vec(-1.0f64..1.0, 1..64)) {
            let z = zero_crossing_rate(&frame);
            prop_assert_eq!(z.fract(), 0.0);
            prop_assert!(z >= 0.0 && z <= (frame.len() - 1) as f64);
            prop_assert!(rms_energy(&frame) >= 0.0);
        }
    }
}
