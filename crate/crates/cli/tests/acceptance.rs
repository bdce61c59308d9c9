//! End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
//! exits non-zero if any fails.

use std::f64::consts::PI;
use std::fs;
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use convofuse::audio::{stft, AudioClip, FrameConfig};
use convofuse::dataset::anova_oneway;
use convofuse::fusion::{
    crossval, BatchObjective, BranchMask, CrossValReport, FusionModel, HyperGrid, InputDims, Metrics, ModelConfig,
    TrainConfig,
};
use convofuse::neural::{
    grad_check, softmax_cross_entropy, Activation, ActivationLayer, Attention, BatchNorm, BiLstm, Conv2d, Ctx, Dense,
    Differentiable, Dropout, Flatten, GradCheckOptions, Layer, MaxPool2, Param, Sequential, Tensor,
};
use convofuse::pipeline::{extract_audio, ExtractConfig};
use convofuse::synthetic::{generate, to_examples, SyntheticConfig};
use convofuse::text::{bartlett_sphericity, pca_fit, Lexicon};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Check = Result<String, String>;

fn ensure(cond: bool, msg: impl Into<String>) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn within_budget(elapsed: Duration, budget: Duration) -> Result<(), String> {
    ensure(
        elapsed <= budget,
        format!("took {:.1}s, budget {:.0}s", elapsed.as_secs_f64(), budget.as_secs_f64()),
    )
}

// ---------------------------------------------------------------- DSP oracle

fn hann(k: usize) -> Vec<f64> {
    (0..k)
        .map(|i| 0.5 - 0.5 * (2.0 * PI * i as f64 / (k - 1) as f64).cos())
        .collect()
}

/// Direct DFT of bins `0..=K/2`, as (re, im).
fn dft(x: &[f64]) -> Vec<(f64, f64)> {
    let n = x.len();
    let table: Vec<(f64, f64)> = (0..n)
        .map(|j| {
            let a = 2.0 * PI * j as f64 / n as f64;
            (a.cos(), -a.sin())
        })
        .collect();
    (0..=n / 2)
        .map(|k| {
            x.iter().enumerate().fold((0.0, 0.0), |(re, im), (i, &v)| {
                let (c, s) = table[(k * i) % n];
                (re + v * c, im + v * s)
            })
        })
        .collect()
}

fn stats(series: &[f64]) -> [f64; 5] {
    let n = series.len() as f64;
    let mut sum = 0.0;
    let mut sq = 0.0;
    let mut hi = f64::NEG_INFINITY;
    let mut lo = f64::INFINITY;
    for &x in series {
        sum += x;
        sq += x * x;
        hi = hi.max(x);
        lo = lo.min(x);
    }
    let mean = sum / n;
    let var = series.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n;
    [mean, hi, lo, var.sqrt(), (sq / n).sqrt()]
}

fn diff(v: &[f64]) -> Vec<f64> {
    (1..v.len()).map(|i| v[i] - v[i - 1]).collect()
}

fn with_deltas(series: Vec<Vec<f64>>) -> Vec<f64> {
    let mut out = Vec::new();
    for s in series {
        out.extend(stats(&s));
        out.extend(stats(&diff(&s)));
    }
    out
}

/// Time-domain and spectral summaries recomputed frame by frame.
fn oracle_features(x: &[f64], sr: u32, k: usize, hop: usize) -> (Vec<f64>, Vec<f64>) {
    let frames = (x.len() - k) / hop + 1;
    let w = hann(k);
    let n = k / 2;
    let split = ((2000.0 * k as f64 / sr as f64).round() as usize).clamp(1, n);
    let (mut ae, mut rms, mut zcr) = (vec![], vec![], vec![]);
    let (mut ber, mut sc, mut sbw, mut sro, mut sf) = (vec![], vec![], vec![], vec![], vec![]);
    let mut prev: Option<Vec<f64>> = None;
    for t in 0..frames {
        let f = &x[t * hop..t * hop + k];
        ae.push(f.iter().copied().fold(f64::NEG_INFINITY, f64::max));
        rms.push((f.iter().map(|s| s * s).sum::<f64>() / k as f64).sqrt());
        let sgn = |s: f64| if s < 0.0 { -1.0 } else { 1.0 };
        zcr.push((1..k).filter(|&i| sgn(f[i]) != sgn(f[i - 1])).count() as f64);

        let windowed: Vec<f64> = f.iter().zip(&w).map(|(a, b)| a * b).collect();
        let mag: Vec<f64> = dft(&windowed).iter().map(|(r, i)| r.hypot(*i)).collect();
        let lower: f64 = (1..split).map(|i| mag[i] * mag[i]).sum();
        let upper: f64 = (split..=n).map(|i| mag[i] * mag[i]).sum();
        ber.push(match (lower <= 1e-10, upper <= 1e-10) {
            (true, true) => 0.0,
            (false, true) => 1e6,
            _ => (lower / upper).min(1e6),
        });
        let total: f64 = mag[1..].iter().sum();
        let centroid = (1..=n).map(|i| i as f64 * mag[i]).sum::<f64>() / total.max(1e-10);
        sc.push(centroid);
        sbw.push((1..=n).map(|i| (i as f64 - centroid).abs() * mag[i]).sum::<f64>() / total.max(1e-10));
        let mut acc = 0.0;
        let mut r = n;
        for i in 1..=n {
            acc += mag[i];
            if acc >= 0.85 * total {
                r = i;
                break;
            }
        }
        sro.push(r as f64);
        if let Some(p) = &prev {
            sf.push(mag.iter().zip(p).map(|(c, q)| (c - q).max(0.0)).sum());
        }
        prev = Some(mag);
    }
    (with_deltas(vec![ae, rms, zcr]), with_deltas(vec![ber, sc, sbw, sro, sf]))
}

fn dsp_oracle() -> Check {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(100);
    let mut worst_bin: f64 = 0.0;
    for _ in 0..200 {
        let k = rng.gen_range(2..=1024);
        let x: Vec<f64> = (0..k).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let clip = AudioClip::new(x.clone(), 22_050).map_err(|e| e.to_string())?;
        let spec = stft(&clip, &FrameConfig::new(k, k).map_err(|e| e.to_string())?).map_err(|e| e.to_string())?;
        let w = hann(k);
        let windowed: Vec<f64> = x.iter().zip(&w).map(|(a, b)| a * b).collect();
        for (c, (re, im)) in spec.bins[0].iter().zip(dft(&windowed)) {
            worst_bin = worst_bin.max((c.re - re).abs()).max((c.im - im).abs());
        }
    }
    ensure(worst_bin < 1e-6, format!("STFT bin error {worst_bin:e}"))?;

    let mut worst_rel: f64 = 0.0;
    let mut clips = 0;
    for (rate, seed) in [(11_000, 1), (16_000, 2), (22_050, 3)] {
        let segs = generate(&SyntheticConfig {
            segments: 4,
            sample_rate: rate,
            seed,
            ..SyntheticConfig::default()
        })
        .map_err(|e| e.to_string())?;
        let cfg = ExtractConfig {
            sample_rate: rate,
            ..ExtractConfig::default()
        };
        let fc = cfg.frame_config();
        for s in segs {
            let got = extract_audio(&s.clip, &cfg).map_err(|e| e.to_string())?;
            let (t, sp) = oracle_features(s.clip.samples(), rate, fc.frame_size, fc.hop_size);
            for (a, b) in got.time.iter().chain(&got.spectral).zip(t.iter().chain(&sp)) {
                worst_rel = worst_rel.max((a - b).abs() / a.abs().max(b.abs()).max(1e-6));
            }
            clips += 1;
        }
    }
    ensure(worst_rel < 1e-9, format!("feature relative error {worst_rel:e}"))?;
    within_budget(start.elapsed(), Duration::from_secs(30))?;
    Ok(format!(
        "200 frames, max bin error {worst_bin:.1e}; {clips} clips, max feature rel error {worst_rel:.1e}"
    ))
}

// ------------------------------------------------------- dimensional contract

fn dimensions() -> Check {
    let start = Instant::now();
    let segs = generate(&SyntheticConfig {
        segments: 50,
        sample_rate: 22_050,
        seed: 5,
        ..SyntheticConfig::default()
    })
    .map_err(|e| e.to_string())?;
    let cfg = ExtractConfig::default();
    for s in &segs {
        let f = extract_audio(&s.clip, &cfg).map_err(|e| e.to_string())?;
        ensure(
            f.time.len() == 30 && f.spectral.len() == 50 && f.mfcc.channels() == 39,
            format!(
                "{}: {} time, {} spectral, {} MFCC channels",
                s.record.id,
                f.time.len(),
                f.spectral.len(),
                f.mfcc.channels()
            ),
        )?;
    }
    within_budget(start.elapsed(), Duration::from_secs(10))?;
    Ok("50 clips: 30 time, 50 spectral, 39 MFCC channels".into())
}

// ----------------------------------------------------------------- gradients

struct Stack {
    net: Sequential,
    x: Tensor,
    t: Tensor,
    train: bool,
}

impl Stack {
    fn run(&mut self, backward: bool) -> convofuse::Result<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let logits = self.net.forward(&self.x, &mut Ctx { train: self.train, rng: &mut rng })?;
        let (_, loss, g) = softmax_cross_entropy(&logits, &self.t)?;
        if backward {
            self.net.backward(&g)?;
        }
        Ok(loss)
    }
}

impl Differentiable for Stack {
    fn params_mut(&mut self) -> Vec<&mut Param> {
        self.net.params_mut()
    }
    fn loss(&mut self) -> convofuse::Result<f64> {
        self.run(false)
    }
    fn loss_and_grad(&mut self) -> convofuse::Result<f64> {
        self.run(true)
    }
}

fn random(shape: &[usize], rng: &mut ChaCha8Rng) -> Tensor {
    Tensor::from_fn(shape, |_| rng.gen_range(-1.0..1.0))
}

fn targets(n: usize) -> Tensor {
    Tensor::from_fn(&[n, 2], |i| if i % 2 == (i / 2) % 2 { 1.0 } else { 0.0 })
}

fn gradients() -> Check {
    let start = Instant::now();
    let opts = GradCheckOptions::default();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut stacks: Vec<(&str, Stack)> = Vec::new();

    let mut net = Sequential::new();
    net.push(Dense::new("dense", 5, 4, &mut rng));
    net.push(ActivationLayer::new(Activation::Relu));
    net.push(Dropout::new(0.3).map_err(|e| e.to_string())?);
    net.push(Dense::new("linear", 4, 3, &mut rng));
    net.push(ActivationLayer::new(Activation::Linear));
    net.push(Dense::new("out", 3, 2, &mut rng));
    stacks.push(("dense/relu/dropout", Stack { x: random(&[6, 5], &mut rng), t: targets(6), net, train: true }));

    let mut net = Sequential::new();
    net.push(Conv2d::new("conv", 3, 2, 3, 2, &mut rng).map_err(|e| e.to_string())?);
    net.push(BatchNorm::new("bn", 2));
    net.push(ActivationLayer::new(Activation::Relu));
    net.push(MaxPool2::new());
    net.push(Flatten::default());
    net.push(Dense::new("out", 2 * 2 * 3, 2, &mut rng));
    stacks.push(("conv/batchnorm/pool", Stack { x: random(&[4, 3, 8, 10], &mut rng), t: targets(4), net, train: true }));

    let mut net = Sequential::new();
    net.push(BiLstm::new("lstm", 2, 3, &mut rng));
    net.push(Attention::new("attention", 3, &mut rng));
    net.push(Dense::new("out", 3, 2, &mut rng));
    stacks.push(("bilstm/attention", Stack { x: random(&[3, 4, 2], &mut rng), t: targets(3), net, train: false }));

    let mut worst: f64 = 0.0;
    let mut blocks = 0;
    for (name, mut s) in stacks {
        let r = grad_check(&mut s, &opts).map_err(|e| format!("{name}: {e}"))?;
        for b in &r.blocks {
            ensure(b.max_rel_error < 1e-4, format!("{name} {}: {:.2e}", b.name, b.max_rel_error))?;
        }
        worst = worst.max(r.max_rel_error());
        blocks += r.blocks.len();
    }

    // full four-branch model on small inputs
    let examples = toy_examples(5, &mut rng);
    let mc = ModelConfig {
        lstm_hidden: 3,
        branch_units: 4,
        conv_filters: vec![2, 3],
        ..ModelConfig::default()
    };
    let tc = TrainConfig {
        hidden_layers: 2,
        hidden_nodes: 5,
        allow_off_grid: true,
        ..TrainConfig::default()
    };
    let dims = InputDims::infer(&examples, BranchMask::ALL, true).map_err(|e| e.to_string())?;
    let mut model = FusionModel::new(BranchMask::ALL, dims, &mc, &tc, &mut rng).map_err(|e| e.to_string())?;
    // move biases off zero so no ReLU input sits exactly on its kink
    for p in model.params_mut() {
        if p.name.ends_with("bias") {
            p.value.data_mut().iter_mut().for_each(|v| *v += rng.gen_range(-0.1..0.1));
        }
    }
    let mut obj = BatchObjective {
        model: &mut model,
        batch: examples.iter().collect(),
        seed: 3,
    };
    let r = grad_check(&mut obj, &opts).map_err(|e| e.to_string())?;
    for b in &r.blocks {
        ensure(b.max_rel_error < 1e-4, format!("model {}: {:.2e}", b.name, b.max_rel_error))?;
    }
    worst = worst.max(r.max_rel_error());
    blocks += r.blocks.len();
    within_budget(start.elapsed(), Duration::from_secs(120))?;
    Ok(format!("{blocks} parameter blocks, max relative error {worst:.1e}"))
}

fn toy_examples(n: usize, rng: &mut ChaCha8Rng) -> Vec<convofuse::fusion::Example> {
    use convofuse::fusion::{Example, FeatureBundle};
    use convofuse::mfcc::MfccMatrix;
    let mut v = |len: usize| -> Vec<f64> { (0..len).map(|_| rng.gen_range(-1.0..1.0)).collect() };
    (0..n)
        .map(|i| Example {
            features: FeatureBundle {
                id: i.to_string(),
                liwc: Some(v(4)),
                time: Some(v(30)),
                spectral: Some(v(50)),
                mfcc: Some(MfccMatrix {
                    n_coeffs: 13,
                    orders: 3,
                    frames: 9,
                    data: v(39 * 9),
                }),
                embedding: Some(v(12)),
            },
            label: i % 2 == 0,
        })
        .collect()
}

// ------------------------------------------------------ optimisation/ablation

fn separable_examples() -> Result<Vec<convofuse::fusion::Example>, String> {
    let segs = generate(&SyntheticConfig {
        segments: 200,
        seed: 42,
        ..SyntheticConfig::default()
    })
    .map_err(|e| e.to_string())?;
    let cfg = ExtractConfig {
        sample_rate: 11_000,
        ..ExtractConfig::default()
    };
    to_examples(&segs, &cfg, &Lexicon::default_lexicon()).map_err(|e| e.to_string())
}

fn fifty_epochs() -> TrainConfig {
    TrainConfig {
        epochs: 50,
        allow_off_grid: true,
        ..TrainConfig::default()
    }
}

fn optimisation(report: &Result<CrossValReport, String>, elapsed: Duration) -> Check {
    let r = report.as_ref().map_err(Clone::clone)?;
    ensure(r.mean_f1 >= 0.90, format!("mean F1 {:.4} < 0.90", r.mean_f1))?;
    within_budget(elapsed, Duration::from_secs(300))?;
    Ok(format!(
        "10-fold mean F1 {:.4} (std {:.4}) in {:.0}s",
        r.mean_f1,
        r.std_f1,
        elapsed.as_secs_f64()
    ))
}

fn ablation(all: &Result<CrossValReport, String>, examples: &[convofuse::fusion::Example]) -> Check {
    let all = all.as_ref().map_err(Clone::clone)?;
    let mask: BranchMask = "bc".parse().map_err(|e: convofuse::Error| e.to_string())?;
    let bc = crossval(examples, mask, &ModelConfig::default(), &fifty_epochs(), 10).map_err(|e| e.to_string())?;
    ensure(
        all.mean_f1 >= bc.mean_f1 - 0.02,
        format!("all branches {:.4} < b+c {:.4} - 0.02", all.mean_f1, bc.mean_f1),
    )?;
    Ok(format!("abcd {:.4} vs bc {:.4}", all.mean_f1, bc.mean_f1))
}

// ---------------------------------------------------------------- statistics

fn statistics() -> Check {
    let start = Instant::now();
    let same = [1.0, 2.0, 3.0, 4.0];
    let r = anova_oneway(&[same, same, same]).map_err(|e| e.to_string())?;
    ensure(r.f == 0.0 && r.p_value == 1.0, format!("identical groups: F={} p={}", r.f, r.p_value))?;

    let r = anova_oneway(&[
        vec![6.0, 8.0, 4.0, 5.0, 3.0, 4.0],
        vec![8.0, 12.0, 9.0, 11.0, 6.0, 8.0],
        vec![13.0, 9.0, 11.0, 8.0, 7.0, 12.0],
    ])
    .map_err(|e| e.to_string())?;
    ensure(
        (r.f - 9.264705882352942).abs() < 1e-6 && (r.p_value - 0.0023987773293929083).abs() < 1e-6,
        format!("textbook ANOVA: F={} p={}", r.f, r.p_value),
    )?;

    let signs = [1.0, -1.0];
    let rows: Vec<Vec<f64>> = (0..8).map(|i| vec![signs[i & 1], signs[(i >> 1) & 1], signs[(i >> 2) & 1]]).collect();
    let b = bartlett_sphericity(&rows).map_err(|e| e.to_string())?;
    ensure(b.p_value == 1.0, format!("Bartlett on identity correlation: p={}", b.p_value))?;

    let rows: Vec<Vec<f64>> = (0..10).map(|i| {
        let t = i as f64 * 0.7 - 2.0;
        vec![t, -3.0 * t + 1.0, 0.5 * t]
    }).collect();
    let p = pca_fit(&rows, 0.95).map_err(|e| e.to_string())?;
    ensure(
        p.n_components() == 1 && (p.explained_variance_ratio[0] - 1.0).abs() < 1e-12,
        format!("collinear PCA: {:?}", p.explained_variance_ratio),
    )?;
    within_budget(start.elapsed(), Duration::from_secs(5))?;
    Ok(format!("ANOVA F={:.6} p={:.6}; Bartlett p=1; PCA 100% in one component", r.f, r.p_value))
}

// --------------------------------------------------------------- determinism

fn cli(args: &[&str]) -> Result<(), String> {
    let out = Command::new(env!("CARGO_BIN_EXE_convofuse"))
        .args(args)
        .output()
        .map_err(|e| e.to_string())?;
    ensure(
        out.status.success(),
        format!("{args:?}: {}", String::from_utf8_lossy(&out.stderr)),
    )
}

fn tree(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut out = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in fs::read_dir(&d).expect("readable dir").flatten() {
            let p = e.path();
            if p.is_dir() {
                stack.push(p);
            } else {
                let rel = p.strip_prefix(dir).expect("inside dir").display().to_string();
                out.push((rel, fs::read(&p).expect("readable file")));
            }
        }
    }
    out.sort();
    out
}

fn determinism() -> Check {
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let d = |s: &str| tmp.path().join(s).display().to_string();
    cli(&["synth", "--out", &d("corpus"), "--segments", "24", "--seed", "9"])?;
    let manifest = d("corpus/manifest.jsonl");
    let emb = d("corpus/embeddings.jsonl");
    for run in ["1", "2"] {
        let feats = d(&format!("features{run}"));
        cli(&["extract", "--manifest", &manifest, "--embeddings", &emb, "--sample-rate", "11000", "--out", &feats])?;
        cli(&[
            "crossval", "--manifest", &manifest, "--features", &feats, "--sample-rate", "11000", "--folds", "3",
            "--epochs", "3", "--allow-off-grid", "--seed", "4", "--out", &d(&format!("cv{run}")),
        ])?;
    }
    let mut files = 0;
    for kind in ["features", "cv"] {
        let a = tree(&tmp.path().join(format!("{kind}1")));
        let b = tree(&tmp.path().join(format!("{kind}2")));
        ensure(!a.is_empty(), format!("{kind}: no output"))?;
        ensure(
            a.iter().map(|x| &x.0).eq(b.iter().map(|x| &x.0)),
            format!("{kind}: file lists differ"),
        )?;
        for ((name, x), (_, y)) in a.iter().zip(&b) {
            ensure(x == y, format!("{kind}/{name} differs between runs"))?;
        }
        files += a.len();
    }
    Ok(format!("extract and crossval: {files} files byte-identical across runs"))
}

// ------------------------------------------------------------- metric, grid

fn metric() -> Check {
    let m = Metrics::from_counts(633, 662, 0, 0).map_err(|e| e.to_string())?;
    ensure((m.f1 - 0.6566).abs() < 1e-4, format!("F1 {}", m.f1))?;
    Ok(format!("predict-all-positive F1 {:.4}", m.f1))
}

fn grid() -> Check {
    let g = HyperGrid::default();
    let configs = g.configs(&TrainConfig::default());
    let mut keys: Vec<String> = configs
        .iter()
        .map(|c| serde_json::to_string(c).expect("serialisable"))
        .collect();
    keys.sort();
    keys.dedup();
    ensure(
        g.len() == 864 && configs.len() == 864 && keys.len() == 864,
        format!("len {}, enumerated {}, distinct {}", g.len(), configs.len(), keys.len()),
    )?;
    Ok("864 distinct configurations".into())
}

fn main() {
    let mut results: Vec<(usize, &str, Check)> = Vec::new();
    results.push((1, "DSP oracle", dsp_oracle()));
    results.push((2, "dimensional contract", dimensions()));
    results.push((3, "gradients", gradients()));

    let start = Instant::now();
    let examples = separable_examples();
    let all = examples.as_ref().map_err(Clone::clone).and_then(|ex| {
        crossval(ex, BranchMask::ALL, &ModelConfig::default(), &fifty_epochs(), 10).map_err(|e| e.to_string())
    });
    results.push((4, "optimisation", optimisation(&all, start.elapsed())));
    let abl = match &examples {
        Ok(ex) => ablation(&all, ex),
        Err(e) => Err(e.clone()),
    };
    results.push((5, "ablation", abl));

    results.push((6, "statistics fixtures", statistics()));
    results.push((7, "determinism", determinism()));
    results.push((8, "metric", metric()));
    results.push((9, "grid", grid()));

    let mut failed = 0;
    for (n, name, r) in &results {
        match r {
            Ok(detail) => println!("criterion {n} {name}: PASS ({detail})"),
            Err(why) => {
                failed += 1;
                println!("criterion {n} {name}: FAIL ({why})");
            }
        }
    }
    if failed > 0 {
        println!("{failed} criterion/criteria failed");
        std::process::exit(1);
    }
}
