use std::fmt::Write as _;

use anyhow::{bail, Context, Result};
use convofuse::fusion::{
    self, attention_csv, baseline_crossval, evaluate, fit, grid_search, predict, Checkpoint, CrossValReport, EpochRecord,
    GridResult, Metrics, VALIDATION_FRACTION,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::config::PipelineConfig;
use crate::output::{labelled_examples, out_dir, write_json, write_text, Report};
use crate::{CrossvalArgs, EvalArgs, Summary, TrainCmd};

fn curve_csv(curve: &[EpochRecord]) -> String {
    let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
    let mut s = String::from("epoch,train_loss,train_acc,val_loss,val_acc\n");
    for r in curve {
        writeln!(
            s,
            "{},{},{},{},{}",
            r.epoch,
            r.train_loss,
            r.train_acc,
            opt(r.val_loss),
            opt(r.val_acc)
        )
        .expect("write to string");
    }
    s
}

#[derive(Serialize)]
struct TrainBody<'a> {
    n_train: usize,
    n_val: usize,
    curve: &'a [EpochRecord],
}

pub fn train(args: &TrainCmd) -> Result<Summary> {
    let cfg = PipelineConfig::resolve(&args.common, Some(&args.train))?;
    let examples = labelled_examples(&args.common, &args.train, &cfg)?;
    let out = out_dir(&args.common)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut fitted = fit(&examples, cfg.branches, &cfg.model, &cfg.train, VALIDATION_FRACTION, &mut rng)?;
    Checkpoint::capture(&fitted.model, &fitted.outcome.adam, &fitted.scaler).save(out.join("checkpoint.json"))?;
    write_text(&out.join("learning_curve.csv"), &curve_csv(&fitted.outcome.curve))?;
    if cfg.branches.a {
        let scaled = fitted.scaler.transform_all(&examples);
        write_text(&out.join("attention.csv"), &attention_csv(&mut fitted.model, &scaled)?)?;
    }
    let body = TrainBody {
        n_train: fitted.n_train,
        n_val: fitted.n_val,
        curve: &fitted.outcome.curve,
    };
    write_json(&out.join("train_report.json"), &Report { seed: cfg.seed, config: &cfg, body })?;
    if let Some(last) = fitted.outcome.curve.last() {
        println!(
            "trained {} epoch(s): train loss {:.4}, train acc {:.4}",
            last.epoch,
            last.train_loss,
            last.train_acc
        );
    }
    Ok(Summary::default())
}

#[derive(Serialize)]
struct CrossvalBody {
    model: CrossValReport,
    baseline: Option<CrossValReport>,
}

pub fn crossval(args: &CrossvalArgs) -> Result<Summary> {
    let cfg = PipelineConfig::resolve(&args.common, Some(&args.train))?;
    let examples = labelled_examples(&args.common, &args.train, &cfg)?;
    let out = out_dir(&args.common)?;
    let report = fusion::crossval(&examples, cfg.branches, &cfg.model, &cfg.train, cfg.folds)?;
    println!(
        "{}-fold F1 {:.4} +/- {:.4} (branches {})",
        report.k, report.mean_f1, report.std_f1, report.branches
    );
    let baseline = if args.baseline {
        let b = baseline_crossval(&examples, cfg.branches, cfg.model.acoustic_spectral, &cfg.forest, cfg.folds)?;
        println!("random forest F1 {:.4} +/- {:.4}", b.mean_f1, b.std_f1);
        write_text(&out.join("baseline_fold_metrics.csv"), &b.metrics_csv())?;
        Some(b)
    } else {
        None
    };
    write_text(&out.join("fold_metrics.csv"), &report.metrics_csv())?;
    write_text(&out.join("learning_curves.csv"), &report.curves_csv())?;
    let body = CrossvalBody { model: report, baseline };
    write_json(&out.join("crossval.json"), &Report { seed: cfg.seed, config: &cfg, body })?;
    Ok(Summary::default())
}

#[derive(Serialize)]
struct GridBody {
    evaluated: usize,
    failed: usize,
    results: Vec<GridResult>,
}

pub fn gridsearch(args: &TrainCmd) -> Result<Summary> {
    let cfg = PipelineConfig::resolve(&args.common, Some(&args.train))?;
    let examples = labelled_examples(&args.common, &args.train, &cfg)?;
    let out = out_dir(&args.common)?;
    let results = grid_search(&examples, cfg.branches, &cfg.model, &cfg.grid, &cfg.train, cfg.folds)?;
    let failed = results.iter().filter(|r| r.error.is_some()).count();
    for r in &results {
        if let Some(e) = &r.error {
            eprintln!("config {} failed: {e}", r.rank);
        }
    }
    if let Some(best) = results.first().filter(|r| r.mean_f1.is_some()) {
        let c = &best.config;
        println!(
            "best F1 {:.4}: layers {}, dropout {}, nodes {}, {:?}, lr {}, lambda {}",
            best.mean_f1.unwrap_or(f64::NAN),
            c.hidden_layers,
            c.dropout,
            c.hidden_nodes,
            c.activation,
            c.learning_rate,
            c.lambda
        );
    }
    let body = GridBody {
        evaluated: results.len(),
        failed,
        results,
    };
    write_json(&out.join("gridsearch.json"), &Report { seed: cfg.seed, config: &cfg, body })?;
    Ok(Summary { item_errors: failed })
}

#[derive(Serialize)]
struct EvalBody<'a> {
    checkpoint: &'a std::path::Path,
    checkpoint_seed: u64,
    metrics: Metrics,
}

pub fn eval(args: &EvalArgs) -> Result<Summary> {
    let cfg = PipelineConfig::resolve(&args.common, Some(&args.train))?;
    let ckpt = Checkpoint::load(&args.checkpoint)
        .with_context(|| format!("loading checkpoint {}", args.checkpoint.display()))?;
    if args.common.branches.is_some_and(|b| b != ckpt.branches) {
        bail!("--branches {} does not match the checkpoint ({})", cfg.branches, ckpt.branches);
    }
    let mut model = ckpt.restore()?;
    let examples = ckpt.scaler.transform_all(&labelled_examples(&args.common, &args.train, &cfg)?);
    let out = out_dir(&args.common)?;
    let metrics = evaluate(&mut model, &examples)?;
    let probs = predict(&mut model, &examples)?;
    let mut csv = String::from("id,probability,predicted,label\n");
    for (e, p) in examples.iter().zip(&probs) {
        writeln!(csv, "{},{p},{},{}", e.features.id, u8::from(*p > 0.5), u8::from(e.label)).expect("write to string");
    }
    write_text(&out.join("predictions.csv"), &csv)?;
    println!(
        "F1 {:.4}, precision {:.4}, recall {:.4}, accuracy {:.4}",
        metrics.f1, metrics.precision, metrics.recall, metrics.accuracy
    );
    let body = EvalBody {
        checkpoint: &args.checkpoint,
        checkpoint_seed: ckpt.seed,
        metrics,
    };
    write_json(&out.join("eval.json"), &Report { seed: cfg.seed, config: &cfg, body })?;
    Ok(Summary::default())
}
