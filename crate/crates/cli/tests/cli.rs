use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use convofuse::audio::{write_wav, AudioClip};
use serde_json::Value;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_convofuse"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str]) -> String {
    let out = run(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

struct Corpus {
    _dir: tempfile::TempDir,
    root: PathBuf,
}

impl Corpus {
    fn new(segments: usize) -> Self {
        let dir = tempfile::tempdir().unwrap();
        let root = dir.path().to_path_buf();
        ok(&["synth", "--out", p(&root.join("corpus")), "--segments", &segments.to_string(), "--seed", "3"]);
        Self { _dir: dir, root }
    }

    fn path(&self, rel: &str) -> PathBuf {
        self.root.join(rel)
    }

    fn manifest(&self) -> PathBuf {
        self.path("corpus/manifest.jsonl")
    }

    fn extract(&self, out: &str) -> PathBuf {
        let dir = self.path(out);
        ok(&[
            "extract",
            "--manifest",
            p(&self.manifest()),
            "--embeddings",
            p(&self.path("corpus/embeddings.jsonl")),
            "--sample-rate",
            "11000",
            "--out",
            p(&dir),
        ]);
        dir
    }
}

#[test]
fn extract_train_eval_round_trip() {
    let c = Corpus::new(20);
    let feats = c.extract("features");
    let report = json(&feats.join("extract_report.json"));
    assert_eq!(report["segments"], 20);
    assert_eq!(report["errors"].as_array().unwrap().len(), 0);
    assert_eq!(report["config"]["extract"]["sample_rate"], 11000);
    assert!(feats.join("features.jsonl").exists());
    assert!(feats.join("lexicon_pca.json").exists());

    let model = c.path("model");
    let m = p(&c.manifest()).to_string();
    ok(&[
        "train", "--manifest", &m, "--features", p(&feats), "--sample-rate", "11000", "--epochs", "3",
        "--allow-off-grid", "--seed", "11", "--out", p(&model),
    ]);
    for f in ["checkpoint.json", "learning_curve.csv", "train_report.json", "attention.csv"] {
        assert!(model.join(f).exists(), "{f}");
    }
    let tr = json(&model.join("train_report.json"));
    assert_eq!(tr["seed"], 11);
    assert_eq!(tr["config"]["train"]["epochs"], 3);
    assert_eq!(tr["curve"].as_array().unwrap().len(), 3);
    let curve = fs::read_to_string(model.join("learning_curve.csv")).unwrap();
    assert_eq!(curve.lines().count(), 4);
    assert!(fs::read_to_string(model.join("attention.csv")).unwrap().starts_with("id,step,weight\n"));

    let ev = c.path("eval");
    let stdout = ok(&[
        "eval", "--manifest", &m, "--features", p(&feats), "--checkpoint", p(&model.join("checkpoint.json")),
        "--out", p(&ev),
    ]);
    assert!(stdout.contains("F1"));
    let e = json(&ev.join("eval.json"));
    assert_eq!(e["checkpoint_seed"], 11);
    let total = ["tp", "fp", "tn", "fn"].iter().map(|k| e["metrics"][k].as_u64().unwrap()).sum::<u64>();
    assert_eq!(total, 20);
    let preds = fs::read_to_string(ev.join("predictions.csv")).unwrap();
    assert_eq!(preds.lines().count(), 21);
}

#[test]
fn crossval_with_baseline_and_grid() {
    let c = Corpus::new(16);
    let feats = c.extract("features");
    let m = p(&c.manifest()).to_string();
    let cv = c.path("cv");
    ok(&[
        "crossval", "--manifest", &m, "--features", p(&feats), "--branches", "bd", "--folds", "4", "--epochs", "2",
        "--allow-off-grid", "--baseline", "--out", p(&cv),
    ]);
    let r = json(&cv.join("crossval.json"));
    assert_eq!(r["model"]["folds"].as_array().unwrap().len(), 4);
    assert_eq!(r["model"]["branches"], "bd");
    assert!(r["baseline"]["mean_f1"].is_number());
    assert_eq!(fs::read_to_string(cv.join("fold_metrics.csv")).unwrap().lines().count(), 5);

    let cfg = c.path("grid.json");
    fs::write(
        &cfg,
        r#"{"branches": "b", "folds": 2, "grid": {"hidden_layers": [0, 1], "dropout": [0.0], "hidden_nodes": [32],
            "activation": ["relu", "linear"], "learning_rate": [0.00625], "epochs": [1]}}"#,
    )
    .unwrap();
    let g = c.path("grid");
    ok(&["gridsearch", "--manifest", &m, "--features", p(&feats), "--config", p(&cfg), "--out", p(&g)]);
    let r = json(&g.join("gridsearch.json"));
    assert_eq!(r["evaluated"], 4);
    let ranks: Vec<u64> = r["results"].as_array().unwrap().iter().map(|x| x["rank"].as_u64().unwrap()).collect();
    assert_eq!(ranks, vec![1, 2, 3, 4]);
}

#[test]
fn per_item_errors_exit_with_one() {
    let c = Corpus::new(10);
    let manifest = fs::read_to_string(c.manifest()).unwrap();
    let first_audio = manifest.lines().next().unwrap();
    let v: Value = serde_json::from_str(first_audio).unwrap();
    fs::remove_file(c.path("corpus").join(v["audio_path"].as_str().unwrap())).unwrap();
    let out = run(&[
        "extract", "--manifest", p(&c.manifest()), "--sample-rate", "11000", "--out", p(&c.path("f")),
    ]);
    assert_eq!(out.status.code(), Some(1));
    let report = json(&c.path("f/extract_report.json"));
    let errors = report["errors"].as_array().unwrap();
    assert_eq!(errors.len(), 1);
    assert_eq!(errors[0]["id"], v["id"]);
    assert_eq!(errors[0]["stage"], "audio");
    assert_eq!(report["embedding_source"], "hash");
}

#[test]
fn missing_embeddings_are_reported() {
    let c = Corpus::new(8);
    let emb = fs::read_to_string(c.path("corpus/embeddings.jsonl")).unwrap();
    let trimmed: String = emb.lines().skip(1).map(|l| format!("{l}\n")).collect();
    fs::write(c.path("short.jsonl"), trimmed).unwrap();
    let out = run(&[
        "extract", "--manifest", p(&c.manifest()), "--embeddings", p(&c.path("short.jsonl")), "--sample-rate", "11000",
        "--out", p(&c.path("f")),
    ]);
    assert_eq!(out.status.code(), Some(1));
    let report = json(&c.path("f/extract_report.json"));
    assert_eq!(report["errors"][0]["stage"], "embedding");
}

#[test]
fn unlabelled_segments_fail_the_join() {
    let c = Corpus::new(8);
    let feats = c.extract("features");
    let manifest = fs::read_to_string(c.manifest()).unwrap();
    let kept: String = manifest.lines().skip(2).map(|l| format!("{l}\n")).collect();
    fs::write(c.path("partial.jsonl"), kept).unwrap();
    let out = run(&[
        "train", "--manifest", p(&c.path("partial.jsonl")), "--features", p(&feats), "--out", p(&c.path("m")),
    ]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("2 stored segment(s) have no manifest entry"), "{err}");
}

#[test]
fn flag_validation() {
    let c = Corpus::new(6);
    let m = p(&c.manifest()).to_string();
    let out = run(&["crossval", "--manifest", &m, "--features", "x", "--strict-paper", "--epochs", "5", "--out", "y"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("one epoch"));

    let out = run(&["extract", "--manifest", &m, "--sample-rate", "8000", "--out", "y"]);
    assert_eq!(out.status.code(), Some(2));

    let out = run(&["train", "--manifest", &m, "--features", "x", "--hidden-nodes", "50", "--out", "y"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("hidden_nodes=50"));

    let out = run(&["train", "--manifest", &m, "--features", "x", "--branches", "xyz", "--out", "y"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn labelstats_reports_balance() {
    let c = Corpus::new(12);
    let out_dir = c.path("stats");
    let stdout = ok(&["labelstats", "--manifest", p(&c.manifest()), "--out", p(&out_dir)]);
    assert!(stdout.contains("6 violent / 6 non-violent"), "{stdout}");
    let r = json(&out_dir.join("labelstats.json"));
    assert_eq!(r["segments"], 12);
    assert_eq!(r["sweep"].as_array().unwrap().len(), 11);
    assert!(r["reviewer_anova"]["p_value"].is_number());
}

#[test]
fn segment_cuts_fixed_chunks() {
    let dir = tempfile::tempdir().unwrap();
    let wav = dir.path().join("talk.wav");
    let clip = AudioClip::new((0..25 * 1000).map(|i| (i as f64 * 0.01).sin() * 0.5).collect(), 1000).unwrap();
    write_wav(&wav, &clip).unwrap();
    let out = dir.path().join("chunks");
    ok(&["segment", "--input", p(&wav), "--duration", "10", "--out", p(&out)]);
    assert!(out.join("talk_0000.wav").exists());
    assert!(out.join("talk_0001.wav").exists());
    assert!(!out.join("talk_0002.wav").exists());
    let r = json(&out.join("segments.json"));
    assert_eq!(r["segments"][1]["end_secs"], 20.0);
}
