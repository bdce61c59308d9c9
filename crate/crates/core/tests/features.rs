use std::f64::consts::PI;

use convofuse::audio::{stft, AudioClip, FrameConfig};
use convofuse::pipeline::{extract_audio, ExtractConfig, SUPPORTED_RATES};
use convofuse::store::{read_reduction, read_store, write_store, StoredSegment};
use convofuse::synthetic::{generate, to_examples, SyntheticConfig};
use convofuse::text::Lexicon;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn naive_dft_bin(x: &[f64], k: usize) -> (f64, f64) {
    let n = x.len();
    let (mut re, mut im) = (0.0, 0.0);
    for (i, &v) in x.iter().enumerate() {
        let a = -2.0 * PI * ((k * i) % n) as f64 / n as f64;
        re += v * a.cos();
        im += v * a.sin();
    }
    (re, im)
}

#[test]
fn stft_matches_direct_transform() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    for _ in 0..20 {
        let k = rng.gen_range(2..=1024);
        let samples: Vec<f64> = (0..k).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let clip = AudioClip::new(samples.clone(), 8000).unwrap();
        let spec = stft(&clip, &FrameConfig::new(k, k).unwrap()).unwrap();
        assert_eq!(spec.frame_count(), 1);
        assert_eq!(spec.bins[0].len(), k / 2 + 1);
        let denom = (k - 1) as f64;
        let windowed: Vec<f64> = samples
            .iter()
            .enumerate()
            .map(|(i, s)| s * 0.5 * (1.0 - (2.0 * PI * i as f64 / denom).cos()))
            .collect();
        for (bin, c) in spec.bins[0].iter().enumerate() {
            let (re, im) = naive_dft_bin(&windowed, bin);
            assert!((c.re - re).abs() < 1e-6 && (c.im - im).abs() < 1e-6, "K={k} bin {bin}");
        }
    }
}

#[test]
fn every_rate_gives_fixed_sizes() {
    let segs = generate(&SyntheticConfig {
        segments: 6,
        sample_rate: 22_050,
        seed: 3,
        ..SyntheticConfig::default()
    })
    .unwrap();
    for rate in SUPPORTED_RATES {
        let cfg = ExtractConfig {
            sample_rate: rate,
            ..ExtractConfig::default()
        };
        for s in &segs {
            let f = extract_audio(&s.clip, &cfg).unwrap();
            assert_eq!(f.time.len(), 30);
            assert_eq!(f.spectral.len(), 50);
            assert_eq!(f.mfcc.channels(), 39);
            assert_eq!(f.mfcc.frames, cfg.frame_config().frame_count(rate as usize));
        }
    }
}

#[test]
fn clips_shorter_than_three_frames_are_rejected() {
    let cfg = ExtractConfig {
        sample_rate: 11_000,
        ..ExtractConfig::default()
    };
    let k = cfg.frame_config().frame_size;
    let clip = AudioClip::new(vec![0.1; k + 10], 11_000).unwrap();
    assert!(extract_audio(&clip, &cfg).is_err());
}

#[test]
fn store_round_trip() {
    let segs = generate(&SyntheticConfig {
        segments: 8,
        seed: 4,
        ..SyntheticConfig::default()
    })
    .unwrap();
    let cfg = ExtractConfig {
        sample_rate: 11_000,
        ..ExtractConfig::default()
    };
    let lexicon = Lexicon::default_lexicon();
    let examples = to_examples(&segs, &cfg, &lexicon).unwrap();
    let stored: Vec<StoredSegment> = examples
        .iter()
        .map(|e| StoredSegment {
            bundle: e.features.clone(),
            lexicon: None,
        })
        .collect();
    let dir = tempfile::tempdir().unwrap();
    write_store(dir.path(), &stored, None).unwrap();
    let back = read_store(dir.path()).unwrap();
    assert_eq!(back, stored);
    assert!(read_reduction(dir.path()).unwrap().is_none());
}
