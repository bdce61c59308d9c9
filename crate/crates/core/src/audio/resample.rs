use std::f64::consts::PI;

use super::AudioClip;
use crate::error::{Error, Result};

/// Zero crossings of the sinc kernel on each side of the centre tap.
const HALF_ZERO_CROSSINGS: f64 = 16.0;

/// Down-samples with a Hann-windowed sinc low-pass at the target Nyquist.
///
/// Taps are renormalised per output sample, so constant signals pass through
/// unchanged, including at the edges.
pub fn resample(clip: &AudioClip, target_rate: u32) -> Result<AudioClip> {
    let source_rate = clip.sample_rate();
    if target_rate == 0 {
        return Err(Error::invalid("target sample rate must be positive"));
    }
    if target_rate > source_rate {
        return Err(Error::invalid(format!(
            "upsampling {source_rate} Hz -> {target_rate} Hz is not supported"
        )));
    }
    if target_rate == source_rate {
        return Ok(clip.clone());
    }

    let input = clip.samples();
    let ratio = target_rate as f64 / source_rate as f64;
    let out_len = ((input.len() as f64 * ratio).round() as usize).max(1);
    let half_width = HALF_ZERO_CROSSINGS / ratio;
    let last = input.len() as isize - 1;

    let output = (0..out_len)
        .map(|n| {
            let centre = n as f64 / ratio;
            let lo = ((centre - half_width).ceil() as isize).max(0);
            let hi = ((centre + half_width).floor() as isize).min(last);
            let mut acc = 0.0;
            let mut norm = 0.0;
            for k in lo..=hi {
                let x = k as f64 - centre;
                let arg = ratio * x;
                let sinc = if arg.abs() < 1e-12 {
                    1.0
                } else {
                    (PI * arg).sin() / (PI * arg)
                };
                let window = 0.5 * (1.0 + (PI * x / half_width).cos());
                let w = sinc * window;
                acc += w * input[k as usize];
                norm += w;
            }
            if norm.abs() < 1e-12 {
                0.0
            } else {
                acc / norm
            }
        })
        .collect();
    AudioClip::new(output, target_rate)
}
