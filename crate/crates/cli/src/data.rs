use std::path::Path;

use anyhow::{Context, Result};
use convofuse::audio::{read_wav, write_wav};
use convofuse::dataset::{anova_oneway, class_balance, segment_audio, threshold_sweep, AnovaResult, ClassBalance, SweepRow};
use convofuse::synthetic::{generate, write_corpus, SyntheticConfig};
use serde::Serialize;

use crate::config::PipelineConfig;
use crate::output::{manifest, out_dir, write_json, Report};
use crate::{LabelArgs, SegmentArgs, Summary, SynthArgs};

#[derive(Serialize)]
struct Chunk {
    file: String,
    start_secs: f64,
    end_secs: f64,
}

pub fn segment(args: &SegmentArgs) -> Result<Summary> {
    let cfg = PipelineConfig::resolve(&args.common, None)?;
    let out = out_dir(&args.common)?;
    let clip = read_wav(&args.input).with_context(|| format!("reading {}", args.input.display()))?;
    let stem = args
        .input
        .file_stem()
        .and_then(|s| s.to_str())
        .unwrap_or("segment")
        .to_string();
    let mut chunks = Vec::new();
    let mut start = 0.0;
    for (i, c) in segment_audio(&clip, args.duration)?.iter().enumerate() {
        let file = format!("{stem}_{i:04}.wav");
        write_wav(out.join(&file), c)?;
        let end = start + c.duration_secs();
        chunks.push(Chunk { file, start_secs: start, end_secs: end });
        start = end;
    }
    println!("wrote {} segment(s) to {}", chunks.len(), out.display());
    #[derive(Serialize)]
    struct Body<'a> {
        input: &'a Path,
        duration: f64,
        segments: Vec<Chunk>,
    }
    let body = Body {
        input: &args.input,
        duration: args.duration,
        segments: chunks,
    };
    write_json(&out.join("segments.json"), &Report { seed: cfg.seed, config: &cfg, body })?;
    Ok(Summary::default())
}

#[derive(Serialize)]
struct LabelStats {
    segments: usize,
    /// Reviewers as groups: do they score the same segments differently on average?
    reviewer_anova: AnovaResult,
    balance: ClassBalance,
    sweep: Vec<SweepRow>,
}

pub fn labelstats(args: &LabelArgs) -> Result<Summary> {
    let cfg = PipelineConfig::resolve(&args.common, Some(&args.train))?;
    let m = manifest(&args.common)?;
    let groups: Vec<Vec<f64>> = (0..3)
        .map(|j| m.records.iter().map(|r| f64::from(r.scores()[j])).collect())
        .collect();
    let thresholds: Vec<f64> = (0..=10).map(|i| f64::from(i) * 0.5).collect();
    let stats = LabelStats {
        segments: m.len(),
        reviewer_anova: anova_oneway(&groups)?,
        balance: class_balance(&m, cfg.aggregation, cfg.threshold)?,
        sweep: threshold_sweep(&m, cfg.aggregation, &thresholds)?,
    };

    let a = &stats.reviewer_anova;
    println!("segments: {}", stats.segments);
    println!(
        "reviewer ANOVA: F({}, {}) = {:.4}, p = {:.4}",
        a.df_between, a.df_within, a.f, a.p_value
    );
    for (i, (mean, sd)) in a.group_means.iter().zip(&a.group_stds).enumerate() {
        println!("  reviewer {}: mean {mean:.3}, sd {sd:.3}", i + 1);
    }
    let o = &stats.balance.overall;
    println!(
        "{:?} rule, threshold {}: {} violent / {} non-violent",
        cfg.aggregation, cfg.threshold, o.violent, o.non_violent
    );
    for (src, c) in &stats.balance.per_source {
        println!("  {src}: {} violent / {} non-violent", c.violent, c.non_violent);
    }
    for w in &stats.balance.warnings {
        println!("warning: {w}");
    }
    println!("threshold sweep:");
    for r in &stats.sweep {
        println!("  >= {:.1}: {} / {}", r.threshold, r.violent, r.non_violent);
    }
    if args.common.out.is_some() {
        let out = out_dir(&args.common)?;
        write_json(&out.join("labelstats.json"), &Report { seed: cfg.seed, config: &cfg, body: stats })?;
    }
    Ok(Summary::default())
}

pub fn synth(args: &SynthArgs) -> Result<Summary> {
    let cfg = PipelineConfig::resolve(&args.common, None)?;
    let out = out_dir(&args.common)?;
    let sc = SyntheticConfig {
        segments: args.segments,
        positive_fraction: args.positive_fraction,
        seconds: args.seconds,
        sample_rate: if args.common.sample_rate.is_some() {
            cfg.extract.sample_rate
        } else {
            SyntheticConfig::default().sample_rate
        },
        seed: cfg.seed,
    };
    let segs = generate(&sc)?;
    let m = write_corpus(&out, &segs)?;
    println!("wrote {} synthetic segment(s) to {}", m.len(), out.display());
    Ok(Summary::default())
}
