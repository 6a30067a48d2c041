use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_emospan"))
}

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

fn core_fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/tests/fixtures").join(name)
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

fn ok(args: &[&str]) -> String {
    let out = run(args);
    assert_eq!(
        out.status.code(),
        Some(0),
        "{args:?}\nstdout: {}\nstderr: {}",
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

/// Trains a small toy model on the core fixture and returns its checkpoint.
fn quick_train(out: &Path, extra: &[&str]) -> PathBuf {
    let train = core_fixture("ec_fixture-train.txt");
    let valid = core_fixture("ec_fixture-dev.txt");
    let mut args = vec![
        "train", "--train", p(&train), "--valid", p(&valid), "--out", p(out),
        "--epochs", "2", "--patience", "2", "--batch-size", "8", "--toy-width", "8",
        "--lr-encoder", "0.01", "--lr-head", "0.01",
    ];
    args.extend_from_slice(extra);
    ok(&args);
    out.join("checkpoint")
}

fn label_rows(path: &Path) -> Vec<(String, Vec<bool>)> {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .skip(1)
        .map(|line| {
            let cells: Vec<&str> = line.split('\t').collect();
            (cells[0].to_string(), cells[2..].iter().map(|c| *c == "1").collect())
        })
        .collect()
}

struct Scores {
    micro: f64,
    macro_: f64,
    jaccard: f64,
}

fn ratio(num: f64, den: f64) -> f64 {
    if den == 0.0 { 0.0 } else { num / den }
}

fn score(gold: &[Vec<bool>], pred: &[Vec<bool>]) -> Scores {
    let classes = gold[0].len();
    let (mut tp, mut fp, mut fn_) = (vec![0.0; classes], vec![0.0; classes], vec![0.0; classes]);
    let mut jac = 0.0;
    for (g, q) in gold.iter().zip(pred) {
        let mut inter = 0.0;
        let mut union = 0.0;
        for c in 0..classes {
            match (g[c], q[c]) {
                (true, true) => tp[c] += 1.0,
                (false, true) => fp[c] += 1.0,
                (true, false) => fn_[c] += 1.0,
                _ => {}
            }
            inter += f64::from(u8::from(g[c] && q[c]));
            union += f64::from(u8::from(g[c] || q[c]));
        }
        jac += if union == 0.0 { 1.0 } else { inter / union };
    }
    let f1 = |t: f64, f: f64, n: f64| ratio(2.0 * t, 2.0 * t + f + n);
    let (st, sf, sn) = (tp.iter().sum(), fp.iter().sum(), fn_.iter().sum());
    Scores {
        micro: f1(st, sf, sn),
        macro_: (0..classes).map(|c| f1(tp[c], fp[c], fn_[c])).sum::<f64>() / classes as f64,
        jaccard: jac / gold.len() as f64,
    }
}

fn assert_block(block: &Value, expected: &Scores) {
    let close = |key: &str, want: f64| {
        let got = block[key].as_f64().unwrap();
        assert!((got - want).abs() < 1e-12, "{key}: got {got}, want {want}");
    };
    close("miF1", expected.micro);
    close("maF1", expected.macro_);
    close("jacS", expected.jaccard);
}

#[test]
fn validate_data_reports_statistics() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("stats");
    let stdout = ok(&[
        "validate-data",
        "--tsv",
        p(&core_fixture("ec_fixture-train.txt")),
        p(&core_fixture("ec_fixture-dev.txt")),
        p(&core_fixture("ec_fixture-test.txt")),
        "--out",
        p(&out),
    ]);
    assert!(stdout.contains("50"), "{stdout}");
    let stats = read_json(&out.join("stats.json"));
    assert_eq!(stats["total"], 50);
    assert_eq!(read_json(&out.join("run.json"))["command"], "validate-data");
}

#[test]
fn usage_errors_exit_with_two() {
    assert_eq!(run(&["no-such-command"]).status.code(), Some(2));
    assert_eq!(run(&["validate-data", "--bogus"]).status.code(), Some(2));
    assert_eq!(run(&["validate-data", "--tsv", "/definitely/missing.txt"]).status.code(), Some(2));
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("cfg.json");
    fs::write(&bad, r#"{"not_a_field": 1}"#).unwrap();
    let out = run(&[
        "train",
        "--train", p(&core_fixture("ec_fixture-train.txt")),
        "--valid", p(&core_fixture("ec_fixture-dev.txt")),
        "--out", p(&dir.path().join("run")),
        "--config", p(&bad),
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(run(&["--help"]).status.code(), Some(0));
}

#[test]
fn corrupt_checkpoint_is_a_runtime_failure() {
    let dir = tempfile::tempdir().unwrap();
    let ckpt = quick_train(&dir.path().join("run"), &[]);
    fs::write(ckpt.join("params.bin"), b"garbage").unwrap();
    let out = run(&["eval", "--checkpoint", p(&ckpt), "--tsv", p(&fixture("six-test.txt"))]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn ablation_is_recorded_in_checkpoint() {
    let dir = tempfile::tempdir().unwrap();
    let ckpt = quick_train(&dir.path().join("run"), &["--ablation", "no_label_segment"]);
    let meta = read_json(&ckpt.join("meta.json"));
    assert_eq!(meta["ablation"], "no_label_segment");
    assert_eq!(meta["head"], "pooled");

    let words = run(&[
        "analyze-words",
        "--checkpoint", p(&ckpt),
        "--tsv", p(&fixture("six-test.txt")),
        "--out", p(&dir.path().join("words")),
    ]);
    assert_eq!(words.status.code(), Some(2));
}

#[test]
fn stratified_eval_matches_hand_computed_metrics() {
    let dir = tempfile::tempdir().unwrap();
    let ckpt = quick_train(&dir.path().join("run"), &[]);
    let test = fixture("six-test.txt");
    let eval_out = dir.path().join("eval");
    let stdout = ok(&["eval", "--checkpoint", p(&ckpt), "--tsv", p(&test), "--strata", "1,2,3", "--out", p(&eval_out)]);
    assert!(stdout.contains("overall"));
    for k in 1..=3 {
        assert!(stdout.contains(&format!("at least {k} gold labels")), "{stdout}");
    }

    let pred_out = dir.path().join("pred");
    ok(&["predict", "--checkpoint", p(&ckpt), "--tsv", p(&test), "--out", p(&pred_out)]);
    let gold = label_rows(&test);
    let pred = label_rows(&pred_out.join("predictions.txt"));
    assert_eq!(gold.iter().map(|r| &r.0).collect::<Vec<_>>(), pred.iter().map(|r| &r.0).collect::<Vec<_>>());

    let report = read_json(&eval_out.join("eval.json"));
    let all_gold: Vec<_> = gold.iter().map(|r| r.1.clone()).collect();
    let all_pred: Vec<_> = pred.iter().map(|r| r.1.clone()).collect();
    assert_block(&report["overall"], &score(&all_gold, &all_pred));
    assert_eq!(report["overall"]["examples"], 6);

    // fixture rows carry 0, 1, 1, 2, 2 and 3 gold labels
    for (k, size) in [(1, 5), (2, 3), (3, 1)] {
        let keep: Vec<usize> = (0..6).filter(|&i| all_gold[i].iter().filter(|&&b| b).count() >= k).collect();
        assert_eq!(keep.len(), size);
        let g: Vec<_> = keep.iter().map(|&i| all_gold[i].clone()).collect();
        let q: Vec<_> = keep.iter().map(|&i| all_pred[i].clone()).collect();
        let block = &report["strata"][k.to_string()];
        assert_eq!(block["examples"], size);
        assert_block(block, &score(&g, &q));
    }
}

#[test]
fn predict_writes_task_layout_and_accepts_unlabeled_files() {
    let dir = tempfile::tempdir().unwrap();
    let ckpt = quick_train(&dir.path().join("run"), &["--threshold", "0.3"]);
    let out = dir.path().join("pred");
    ok(&["predict", "--checkpoint", p(&ckpt), "--tsv", p(&fixture("six-unlabeled.txt")), "--out", p(&out)]);

    let text = fs::read_to_string(out.join("predictions.txt")).unwrap();
    let header = fs::read_to_string(fixture("six-test.txt")).unwrap();
    assert_eq!(text.lines().next(), header.lines().next());
    let rows = label_rows(&out.join("predictions.txt"));
    assert_eq!(rows.len(), 6);
    for line in text.lines().skip(1) {
        assert_eq!(line.split('\t').count(), 13);
    }

    let probs = fs::read_to_string(out.join("probabilities.csv")).unwrap();
    assert_eq!(probs.lines().count(), 7);
    for (line, (id, labels)) in probs.lines().skip(1).zip(&rows) {
        let mut cells = line.split(',');
        assert_eq!(cells.next(), Some(id.as_str()));
        let p: Vec<f64> = cells.map(|v| v.parse().unwrap()).collect();
        assert_eq!(p.len(), 11);
        for (v, &on) in p.iter().zip(labels) {
            assert!((0.0..=1.0).contains(v));
            // the checkpoint keeps its training threshold
            assert_eq!(on, *v > 0.3);
        }
    }
}

#[test]
fn config_file_is_merged_with_flags_winning() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    fs::write(&cfg, r#"{"epochs": 1, "early_stop_patience": 1, "alpha": 0.7, "seed": 5, "toy_width": 8}"#).unwrap();
    let out = dir.path().join("run");
    ok(&[
        "train",
        "--train", p(&core_fixture("ec_fixture-train.txt")),
        "--valid", p(&core_fixture("ec_fixture-dev.txt")),
        "--out", p(&out),
        "--config", p(&cfg),
        "--alpha", "0.3",
    ]);
    let effective = read_json(&out.join("config.json"));
    assert_eq!(effective["alpha"], 0.3);
    assert_eq!(effective["epochs"], 1);
    assert_eq!(effective["seed"], 5);
    assert_eq!(effective["batch_size"], 32);
    assert_eq!(read_json(&out.join("run.json"))["config"], effective);
    assert_eq!(read_json(&out.join("checkpoint/meta.json"))["alpha"], 0.3);
}

#[test]
fn repeated_runs_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let test = fixture("six-test.txt");
    let mut files = Vec::new();
    for name in ["a", "b"] {
        let root = dir.path().join(name);
        let ckpt = quick_train(&root.join("run"), &["--seed", "9"]);
        ok(&["eval", "--checkpoint", p(&ckpt), "--tsv", p(&test), "--strata", "1,2", "--out", p(&root.join("eval"))]);
        ok(&["predict", "--checkpoint", p(&ckpt), "--tsv", p(&test), "--out", p(&root.join("pred"))]);
        ok(&["analyze-words", "--checkpoint", p(&ckpt), "--tsv", p(&test), "--k", "3", "--out", p(&root.join("words"))]);
        ok(&["analyze-correlations", "--tsv", p(&test), "--checkpoint", p(&ckpt), "--out", p(&root.join("corr"))]);
        files.push(
            [
                "run/train_log.csv",
                "run/config.json",
                "run/checkpoint/params.bin",
                "run/checkpoint/meta.json",
                "eval/eval.json",
                "pred/predictions.txt",
                "pred/probabilities.csv",
                "words/word_associations.csv",
            ]
            .map(|f| fs::read(root.join(f)).unwrap()),
        );
    }
    assert!(files[0] == files[1]);
}

#[test]
fn analysis_commands_write_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let ckpt = quick_train(&dir.path().join("run"), &[]);
    let test = fixture("six-test.txt");

    let heat = dir.path().join("heat");
    ok(&["analyze-heatmap", "--checkpoint", p(&ckpt), "--tsv", p(&test), "--id", "e5", "--out", p(&heat)]);
    assert!(fs::read_dir(&heat).unwrap().count() >= 2);
    let missing = run(&["analyze-heatmap", "--checkpoint", p(&ckpt), "--tsv", p(&test), "--id", "nope", "--out", p(&heat)]);
    assert_eq!(missing.status.code(), Some(2));

    let corr = dir.path().join("corr");
    ok(&["analyze-correlations", "--tsv", p(&test), "--out", p(&corr)]);
    assert!(fs::read_dir(&corr).unwrap().any(|e| e.unwrap().file_name().to_string_lossy().ends_with(".csv")));

    let sweep = dir.path().join("sweep");
    ok(&[
        "sweep-alpha",
        "--train", p(&core_fixture("ec_fixture-train.txt")),
        "--valid", p(&core_fixture("ec_fixture-dev.txt")),
        "--out", p(&sweep),
        "--grid", "0,1",
        "--epochs", "1", "--patience", "1", "--toy-width", "8",
    ]);
    let csv = fs::read_to_string(sweep.join("alpha_sweep.csv")).unwrap();
    assert_eq!(csv.lines().count(), 3, "{csv}");
    assert!(csv.starts_with("alpha,miF1,maF1,jacS,error"));
}
