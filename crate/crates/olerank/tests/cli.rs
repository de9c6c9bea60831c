//! End-to-end tests of the command-line binary.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use olerank::dataset::synthetic_dataset;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_olerank"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn assert_ok(out: &Output) {
    assert!(
        out.status.success(),
        "command failed\nstdout: {}\nstderr: {}",
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
}

fn write_synthetic(path: &Path, queries: usize, seed: u64) {
    let ds = synthetic_dataset(queries, 6, 5, 2, seed);
    fs::write(path, ds.to_letor()).unwrap();
}

#[test]
fn train_eval_predict_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("train.letor");
    let valid = dir.path().join("valid.letor");
    write_synthetic(&data, 20, 1);
    write_synthetic(&valid, 8, 2);
    let model = dir.path().join("m.model");

    let out = run(&[
        "train",
        "--data", data.to_str().unwrap(),
        "--objective", "mart",
        "--criterion", "ole",
        "--leaves", "6",
        "--learning-rate", "0.1",
        "--trees", "5",
        "--valid", valid.to_str().unwrap(),
        "--out", model.to_str().unwrap(),
    ]);
    assert_ok(&out);
    assert!(model.exists());

    let log = dir.path().join("m.model.log.csv");
    let log_text = fs::read_to_string(&log).unwrap();
    let mut lines = log_text.lines();
    assert_eq!(lines.next().unwrap(), "iter,train_loss,ndcg1,ndcg3,ndcg10,err");
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 5);
    for row in &rows {
        let cols: Vec<&str> = row.split(',').collect();
        assert_eq!(cols.len(), 6);
        assert!(!cols[2].is_empty(), "validation NDCG@1 missing in `{row}`");
    }

    let out = run(&["eval", "--model", model.to_str().unwrap(), "--data", valid.to_str().unwrap()]);
    assert_ok(&out);
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("NDCG@1 "), "{text}");
    assert!(text.contains("NDCG@10 "), "{text}");
    assert!(text.contains("ERR "), "{text}");

    let preds = dir.path().join("scores.txt");
    let out = run(&[
        "predict",
        "--model", model.to_str().unwrap(),
        "--data", valid.to_str().unwrap(),
        "--out", preds.to_str().unwrap(),
    ]);
    assert_ok(&out);
    let n_lines = fs::read_to_string(&preds).unwrap().lines().count();
    assert_eq!(n_lines, 8 * 6);
}

#[test]
fn zero_trees_is_a_valid_empty_model() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("d.letor");
    write_synthetic(&data, 5, 3);
    let model = dir.path().join("empty.model");
    let out = run(&[
        "train",
        "--data", data.to_str().unwrap(),
        "--objective", "mart",
        "--criterion", "se",
        "--trees", "0",
        "--out", model.to_str().unwrap(),
    ]);
    assert_ok(&out);
    let log_rows = fs::read_to_string(dir.path().join("empty.model.log.csv"))
        .unwrap()
        .lines()
        .count();
    assert_eq!(log_rows, 1, "only the header");
    let out = run(&["eval", "--model", model.to_str().unwrap(), "--data", data.to_str().unwrap()]);
    assert_ok(&out);
}

#[test]
fn empty_model_scores_input_order() {
    let dir = tempfile::tempdir().unwrap();
    let ideal = dir.path().join("ideal.letor");
    fs::write(&ideal, "2 qid:1 1:0.1\n1 qid:1 1:0.2\n0 qid:1 1:0.3\n").unwrap();
    let worst = dir.path().join("worst.letor");
    fs::write(&worst, "0 qid:1 1:0.1\n1 qid:1 1:0.2\n2 qid:1 1:0.3\n").unwrap();
    let model = dir.path().join("empty.model");
    let out = run(&[
        "train",
        "--data", ideal.to_str().unwrap(),
        "--objective", "mart",
        "--criterion", "se",
        "--trees", "0",
        "--out", model.to_str().unwrap(),
    ]);
    assert_ok(&out);

    // all-zero scores keep input order: ideal file scores 100.00
    let out = run(&["eval", "--model", model.to_str().unwrap(), "--data", ideal.to_str().unwrap()]);
    assert_ok(&out);
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("NDCG@3 100.00"), "{text}");

    // worst-order file reproduces the worked 58.69%
    let out = run(&["eval", "--model", model.to_str().unwrap(), "--data", worst.to_str().unwrap()]);
    assert_ok(&out);
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("NDCG@3 58.69"), "{text}");
}

#[test]
fn identical_flags_produce_byte_identical_models() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("d.letor");
    write_synthetic(&data, 15, 4);
    let args = |out: &Path| {
        vec![
            "train".to_string(),
            "--data".into(), data.to_str().unwrap().into(),
            "--objective".into(), "mcrank".into(),
            "--criterion".into(), "rwse".into(),
            "--leaves".into(), "5".into(),
            "--trees".into(), "3".into(),
            "--seed".into(), "7".into(),
            "--out".into(), out.to_str().unwrap().into(),
        ]
    };
    let m1 = dir.path().join("a.model");
    let m2 = dir.path().join("b.model");
    assert_ok(&bin().args(args(&m1)).output().unwrap());
    assert_ok(&bin().args(args(&m2)).output().unwrap());
    assert_eq!(fs::read(&m1).unwrap(), fs::read(&m2).unwrap());
}

#[test]
fn thread_count_does_not_change_the_model() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("d.letor");
    write_synthetic(&data, 15, 5);
    let train_with = |threads: &str, out: &Path| {
        let o = run(&[
            "train",
            "--threads", threads,
            "--data", data.to_str().unwrap(),
            "--objective", "lambdamart",
            "--criterion", "ole",
            "--leaves", "5",
            "--trees", "3",
            "--out", out.to_str().unwrap(),
        ]);
        assert_ok(&o);
    };
    let m1 = dir.path().join("t1.model");
    let m4 = dir.path().join("t4.model");
    train_with("1", &m1);
    train_with("4", &m4);
    assert_eq!(fs::read(&m1).unwrap(), fs::read(&m4).unwrap());
}

#[test]
fn rejects_incompatible_objective_criterion_pair() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("d.letor");
    write_synthetic(&data, 5, 6);
    let out = run(&[
        "train",
        "--data", data.to_str().unwrap(),
        "--objective", "mcrank",
        "--criterion", "mart",
        "--trees", "2",
        "--out", dir.path().join("x.model").to_str().unwrap(),
    ]);
    assert!(!out.status.success());
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("squared-loss"), "{err}");
}

#[test]
fn parse_errors_name_the_line() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("bad.letor");
    fs::write(&data, "1 qid:1 1:0.5\nx qid:1 1:0.5\n").unwrap();
    let out = run(&["stats", "--data", data.to_str().unwrap()]);
    assert!(!out.status.success());
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("line 2"), "{err}");
}

#[test]
fn verify_passes_and_writes_json_report() {
    let dir = tempfile::tempdir().unwrap();
    let report = dir.path().join("report.json");
    let out = run(&[
        "verify",
        "--seed", "11",
        "--cases", "30",
        "--out", report.to_str().unwrap(),
    ]);
    assert_ok(&out);
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("all checks passed"), "{text}");
    assert!(text.contains("pairwise_additivity_counterexample"), "{text}");
    let json: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(&report).unwrap()).unwrap();
    assert_eq!(json["cases"], 30);
    assert!(json["checks"].as_array().unwrap().len() >= 5);
}

#[test]
fn grid_emits_six_configurations() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("d.letor");
    write_synthetic(&data, 10, 8);
    let out_dir = dir.path().join("grid");
    let out = run(&[
        "grid",
        "--data", data.to_str().unwrap(),
        "--objective", "mart",
        "--criterion", "se",
        "--trees", "2",
        "--out-dir", out_dir.to_str().unwrap(),
    ]);
    assert_ok(&out);
    let models: Vec<_> = fs::read_dir(&out_dir)
        .unwrap()
        .filter_map(|e| e.ok())
        .filter(|e| e.path().extension().is_some_and(|x| x == "model"))
        .collect();
    assert_eq!(models.len(), 6);
    let logs = fs::read_dir(&out_dir)
        .unwrap()
        .filter_map(|e| e.ok())
        .filter(|e| e.path().to_string_lossy().ends_with(".log.csv"))
        .count();
    assert_eq!(logs, 6);
}

#[test]
fn stats_reports_counts() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("d.letor");
    fs::write(&data, "0 qid:1 3:1\n1 qid:1 3:2\n2 qid:1 3:3\n").unwrap();
    let out = run(&["stats", "--data", data.to_str().unwrap()]);
    assert_ok(&out);
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("queries 1"), "{text}");
    assert!(text.contains("documents 3"), "{text}");
    assert!(text.contains("docs/query 3"), "{text}");
    assert!(text.contains("features 4"), "{text}");
}

#[test]
fn split_writes_parts() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("d.letor");
    write_synthetic(&data, 10, 9);
    let prefix = dir.path().join("part");
    let out = run(&[
        "split",
        "--data", data.to_str().unwrap(),
        "--fractions", "0.5,0.5",
        "--seed", "3",
        "--out-prefix", prefix.to_str().unwrap(),
    ]);
    assert_ok(&out);
    let p0 = fs::read_to_string(format!("{}.part0.letor", prefix.display())).unwrap();
    let p1 = fs::read_to_string(format!("{}.part1.letor", prefix.display())).unwrap();
    assert_eq!(p0.lines().count() + p1.lines().count(), 60);
}
