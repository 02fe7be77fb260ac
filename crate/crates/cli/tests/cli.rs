//! End-to-end tests of the `lbf` binary: subcommand round trips, exit
//! codes, and determinism.

use std::path::Path;
use std::process::{Command, Output};

fn lbf(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lbf"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

/// Corpus CSV with graded character mixes so calibration thresholds have
/// room to move: keys are 'a'-heavy, non-keys 'a'-light.
fn write_corpus_csv(path: &Path, keys: usize, negatives: usize) {
    let mut csv = String::from("url,label\n");
    let mut state = 0x9e3779b97f4a7c15u64;
    let mut next = move || {
        state ^= state << 13;
        state ^= state >> 7;
        state ^= state << 17;
        state
    };
    for i in 0..keys {
        let body: String = (0..14)
            .map(|_| if next() % 10 < 7 { 'a' } else { 'b' })
            .collect();
        csv.push_str(&format!("{body}k{i}.com,1\n"));
    }
    for i in 0..negatives {
        let body: String = (0..14)
            .map(|_| if next() % 10 < 3 { 'a' } else { 'b' })
            .collect();
        csv.push_str(&format!("{body}n{i}.com,0\n"));
    }
    std::fs::write(path, csv).unwrap();
}

fn ingest(dir: &Path, keys: usize, negatives: usize) {
    let csv = dir.join("corpus.csv");
    write_corpus_csv(&csv, keys, negatives);
    let out = lbf(&[
        "ingest",
        "--corpus",
        csv.to_str().unwrap(),
        "--out",
        dir.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
}

#[test]
fn ingest_reports_summary_counts() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("c.csv");
    std::fs::write(&csv, "url,label\na.com,1\nb.com,0\nb.com,0\n").unwrap();
    let out = lbf(&[
        "ingest",
        "--corpus",
        csv.to_str().unwrap(),
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0);
    let summary: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(summary["keys"], 1);
    assert_eq!(summary["non_keys"], 1);
    assert_eq!(summary["duplicates_removed"], 1);
    assert!(dir.path().join("corpus.lbd").exists());
}

#[test]
fn ingest_rejects_majority_bad_labels() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("c.csv");
    std::fs::write(&csv, "url,label\na.com,2\nb.com,1\n").unwrap();
    let out = lbf(&[
        "ingest",
        "--corpus",
        csv.to_str().unwrap(),
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 2);
    assert!(stderr(&out).contains("line 2"), "{}", stderr(&out));
}

#[test]
fn missing_corpus_is_a_data_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = lbf(&[
        "ingest",
        "--corpus",
        dir.path().join("absent.csv").to_str().unwrap(),
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 2);
}

#[test]
fn unknown_subcommand_and_flags_are_usage_errors() {
    assert_eq!(code(&lbf(&["frobnicate"])), 1);
    assert_eq!(code(&lbf(&["train"])), 1); // missing required flags
    assert_eq!(code(&lbf(&["--help"])), 0);
}

#[test]
fn train_writes_deterministic_model_and_metrics() {
    let dir = tempfile::tempdir().unwrap();
    ingest(dir.path(), 60, 60);
    let corpus = dir.path().join("corpus.lbd");
    let run = |out_dir: &Path| {
        let out = lbf(&[
            "train",
            "--corpus",
            corpus.to_str().unwrap(),
            "--out",
            out_dir.to_str().unwrap(),
            "--classifier",
            "nb",
            "--seed",
            "7",
        ]);
        assert_eq!(code(&out), 0, "{}", stderr(&out));
        let metrics: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
        assert_eq!(metrics["kind"], "nb");
        assert!(metrics["f1_mean"].as_f64().unwrap() > 0.0);
        std::fs::read(out_dir.join("nb.lbm")).unwrap()
    };
    let a = run(&dir.path().join("a"));
    let b = run(&dir.path().join("b"));
    assert_eq!(a, b, "seeded reruns must produce identical model blobs");
}

#[test]
fn train_rejects_unknown_kind() {
    let dir = tempfile::tempdir().unwrap();
    ingest(dir.path(), 30, 30);
    let out = lbf(&[
        "train",
        "--corpus",
        dir.path().join("corpus.lbd").to_str().unwrap(),
        "--out",
        dir.path().to_str().unwrap(),
        "--classifier",
        "rnn",
    ]);
    assert_eq!(code(&out), 1);
    assert!(stderr(&out).contains("rnn"), "{}", stderr(&out));
}

#[test]
fn build_classic_and_query_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    ingest(dir.path(), 50, 50);
    let corpus = dir.path().join("corpus.lbd");
    let out = lbf(&[
        "build",
        "--corpus",
        corpus.to_str().unwrap(),
        "--out",
        dir.path().to_str().unwrap(),
        "--variant",
        "classic",
        "--epsilon",
        "0.01",
        "--seed",
        "3",
    ]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let info: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert!(info["payload_bytes"].as_u64().unwrap() > 0);
    let filter = dir.path().join("filter.lbf");

    // rebuild with the same seed: identical bytes
    let first = std::fs::read(&filter).unwrap();
    let again = lbf(&[
        "build",
        "--corpus",
        corpus.to_str().unwrap(),
        "--out",
        dir.path().to_str().unwrap(),
        "--variant",
        "classic",
        "--epsilon",
        "0.01",
        "--seed",
        "3",
    ]);
    assert_eq!(code(&again), 0);
    assert_eq!(std::fs::read(&filter).unwrap(), first);

    // an ingested key must be accepted (queries standardize like ingestion)
    let csv = std::fs::read_to_string(dir.path().join("corpus.csv")).unwrap();
    let key_url = csv.lines().nth(1).unwrap().split(',').next().unwrap();
    let out = lbf(&["query", "--filter", filter.to_str().unwrap(), "--key", key_url]);
    assert_eq!(code(&out), 0);
    assert_eq!(stdout(&out).trim(), "accept");
}

#[test]
fn build_learned_filter_and_batch_query() {
    let dir = tempfile::tempdir().unwrap();
    ingest(dir.path(), 80, 80);
    let corpus = dir.path().join("corpus.lbd");
    let out = lbf(&[
        "train",
        "--corpus",
        corpus.to_str().unwrap(),
        "--out",
        dir.path().to_str().unwrap(),
        "--classifier",
        "lr",
        "--seed",
        "5",
    ]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let out = lbf(&[
        "build",
        "--corpus",
        corpus.to_str().unwrap(),
        "--out",
        dir.path().to_str().unwrap(),
        "--variant",
        "lbf",
        "--model",
        dir.path().join("lr.lbm").to_str().unwrap(),
        "--epsilon",
        "0.05",
        "--epsilon-tau",
        "0.02",
        "--seed",
        "5",
    ]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let info: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert!(info["model_bytes"].as_u64().unwrap() > 0);

    // every ingested key queried in batch must come back `accept`
    let csv = std::fs::read_to_string(dir.path().join("corpus.csv")).unwrap();
    let keys_file = dir.path().join("keys.txt");
    let key_urls: Vec<&str> = csv
        .lines()
        .skip(1)
        .filter(|l| l.ends_with(",1"))
        .map(|l| l.split(',').next().unwrap())
        .collect();
    std::fs::write(&keys_file, key_urls.join("\n")).unwrap();
    let out = lbf(&[
        "query",
        "--filter",
        dir.path().join("filter.lbc").to_str().unwrap(),
        "--keys",
        keys_file.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let output = stdout(&out);
    let verdicts: Vec<&str> = output.lines().collect();
    assert_eq!(verdicts.len(), key_urls.len());
    assert!(verdicts.iter().all(|v| *v == "accept"));
}

#[test]
fn infeasible_budget_exits_with_constraint_code() {
    let dir = tempfile::tempdir().unwrap();
    ingest(dir.path(), 80, 80);
    let corpus = dir.path().join("corpus.lbd");
    let out = lbf(&[
        "train",
        "--corpus",
        corpus.to_str().unwrap(),
        "--out",
        dir.path().to_str().unwrap(),
        "--classifier",
        "lr",
    ]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    // epsilon_tau target far above epsilon: the calibrated rate lands at or
    // above epsilon and the LBF bound rejects it
    let out = lbf(&[
        "build",
        "--corpus",
        corpus.to_str().unwrap(),
        "--out",
        dir.path().to_str().unwrap(),
        "--variant",
        "lbf",
        "--model",
        dir.path().join("lr.lbm").to_str().unwrap(),
        "--epsilon",
        "0.001",
        "--epsilon-tau",
        "0.9",
    ]);
    assert_eq!(code(&out), 3, "{}", stderr(&out));
    assert!(
        stderr(&out).contains("epsilon_tau must be < epsilon"),
        "{}",
        stderr(&out)
    );
}

#[test]
fn corrupt_filter_blob_is_a_data_error() {
    let dir = tempfile::tempdir().unwrap();
    let bogus = dir.path().join("filter.lbf");
    std::fs::write(&bogus, b"LBF1truncated").unwrap();
    let out = lbf(&["query", "--filter", bogus.to_str().unwrap(), "--key", "a.com"]);
    assert_eq!(code(&out), 2);
    assert!(stderr(&out).contains("corrupt filter"), "{}", stderr(&out));
}

#[test]
fn sweep_baseline_only_and_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    ingest(dir.path(), 120, 120);
    let corpus = dir.path().join("corpus.lbd");
    let run = |out_dir: &Path| {
        let out = lbf(&[
            "sweep",
            "--corpus",
            corpus.to_str().unwrap(),
            "--out",
            out_dir.to_str().unwrap(),
            "--epsilon",
            "0.02",
            "--epsilon",
            "0.05",
            "--seed",
            "11",
            "--no-timing",
        ]);
        assert_eq!(code(&out), 0, "{}", stderr(&out));
        std::fs::read_to_string(out_dir.join("sweep.csv")).unwrap()
    };
    // no --ratio flags: baseline-only report, one row per epsilon
    let a = run(&dir.path().join("a"));
    assert_eq!(a.lines().count(), 1 + 2, "header + one baseline per epsilon:\n{a}");
    assert!(a.lines().nth(1).unwrap().starts_with("classic,"));
    let b = run(&dir.path().join("b"));
    assert_eq!(a, b, "seeded sweep reruns must emit identical CSVs");
}

#[test]
fn sweep_grid_row_count() {
    let dir = tempfile::tempdir().unwrap();
    ingest(dir.path(), 120, 120);
    let corpus = dir.path().join("corpus.lbd");
    let out = lbf(&[
        "sweep",
        "--corpus",
        corpus.to_str().unwrap(),
        "--out",
        dir.path().to_str().unwrap(),
        "--epsilon",
        "0.05",
        "--ratio",
        "0.25",
        "--ratio",
        "0.5",
        "--classifier",
        "nb",
        "--variant",
        "lbf",
        "--epochs",
        "5",
        "--seed",
        "11",
    ]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let csv = std::fs::read_to_string(dir.path().join("sweep.csv")).unwrap();
    // header + 1 baseline + 1 kind x 1 variant x 1 epsilon x 2 ratios
    assert_eq!(csv.lines().count(), 1 + 1 + 2, "{csv}");
    let header = csv.lines().next().unwrap();
    assert_eq!(
        header,
        "variant,classifier,epsilon,epsilon_tau,total_bytes,model_bytes,filter_bytes,\
         measured_fpr,mean_reject_s,skipped_reason"
    );
}
