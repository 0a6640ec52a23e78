use std::path::Path;
use std::process::{Command, Output};

use lmnet::dataset::surrogate;

fn lmnet(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lmnet"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn data_file(dir: &Path) -> String {
    let path = dir.join("adult.csv");
    std::fs::write(&path, surrogate::generate(1)).unwrap();
    path.display().to_string()
}

fn json_number(text: &str, pointer: &str) -> f64 {
    let v: serde_json::Value = serde_json::from_str(text).unwrap();
    v.pointer(pointer)
        .and_then(serde_json::Value::as_f64)
        .unwrap()
}

#[test]
fn help_and_version_succeed() {
    assert_eq!(lmnet(&["--help"]).status.code(), Some(0));
    assert_eq!(lmnet(&["--version"]).status.code(), Some(0));
    assert_eq!(lmnet(&["reproduce", "--help"]).status.code(), Some(0));
}

#[test]
fn usage_errors_exit_64() {
    assert_eq!(
        lmnet(&["summary", "--data", "x.csv", "--bogus"])
            .status
            .code(),
        Some(64)
    );
    assert_eq!(lmnet(&[]).status.code(), Some(64));
    assert_eq!(
        lmnet(&["score", "--model", "m", "--rows", "r", "--threshold", "1.5"])
            .status
            .code(),
        Some(64)
    );
    assert_eq!(
        lmnet(&["train", "--data", "x.csv", "--order", "0"])
            .status
            .code(),
        Some(64)
    );
    assert_eq!(
        lmnet(&["train", "--data", "x.csv", "--order", "1", "--order-select"])
            .status
            .code(),
        Some(64)
    );
}

#[test]
fn missing_data_file_exits_2_without_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let o = lmnet(&[
        "reproduce",
        "--data",
        dir.path().join("absent.csv").to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("absent.csv"));
    assert!(!out.exists());
}

#[test]
fn summary_reports_partition() {
    let dir = tempfile::tempdir().unwrap();
    let data = data_file(dir.path());
    let o = lmnet(&["summary", "--data", &data]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert!(text.contains("704 total"), "{text}");
    assert!(text.contains("424/140/140"), "{text}");

    let o = lmnet(&["summary", "--data", &data, "--json"]);
    let text = stdout(&o);
    assert_eq!(json_number(&text, "/n_total"), 704.0);
    assert_eq!(json_number(&text, "/partition_sizes/training"), 424.0);
}

#[test]
fn train_then_evaluate_matches_reproduce() {
    let dir = tempfile::tempdir().unwrap();
    let data = data_file(dir.path());
    let train_dir = dir.path().join("train");
    let log = dir.path().join("log.csv");
    let o = lmnet(&[
        "train",
        "--data",
        &data,
        "--order",
        "1",
        "--seed",
        "1",
        "--out",
        train_dir.to_str().unwrap(),
        "--train-log",
        log.to_str().unwrap(),
    ]);
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    let model = train_dir.join("model.lmnet.json");
    assert!(model.is_file());
    assert!(std::fs::read_to_string(&log)
        .unwrap()
        .starts_with("iteration,"));

    let o = lmnet(&[
        "evaluate",
        "--data",
        &data,
        "--model",
        model.to_str().unwrap(),
        "--json",
    ]);
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    let evaluated = json_number(&stdout(&o), "/accuracy_percent");

    let repro_dir = dir.path().join("repro");
    let o = lmnet(&[
        "reproduce",
        "--data",
        &data,
        "--order",
        "1",
        "--seed",
        "1",
        "--out",
        repro_dir.to_str().unwrap(),
        "--svg",
    ]);
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    let report = std::fs::read_to_string(repro_dir.join("report.json")).unwrap();
    assert_eq!(evaluated, json_number(&report, "/accuracy_percent"));
    for f in [
        "report.txt",
        "roc.csv",
        "gain.csv",
        "lift.csv",
        "order_history.csv",
        "model.lmnet.json",
        "roc.svg",
    ] {
        assert!(repro_dir.join(f).is_file(), "{f}");
    }
    assert_eq!(
        std::fs::read(model).unwrap(),
        std::fs::read(repro_dir.join("model.lmnet.json")).unwrap()
    );
}

#[test]
fn score_refuses_rows_with_missing_values() {
    let dir = tempfile::tempdir().unwrap();
    let data = data_file(dir.path());
    let train_dir = dir.path().join("train");
    let o = lmnet(&[
        "train",
        "--data",
        &data,
        "--order",
        "1",
        "--trials",
        "1",
        "--out",
        train_dir.to_str().unwrap(),
    ]);
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );

    // header plus one complete row, one with "?" and the class column dropped
    let full = surrogate::generate(1);
    let mut lines = full.lines();
    let header = lines.next().unwrap();
    let complete = full.lines().skip(1).find(|l| !l.contains('?')).unwrap();
    let missing = full.lines().skip(1).find(|l| l.contains('?')).unwrap();
    let strip = |l: &str| l.rsplit_once(',').unwrap().0.to_string();
    let rows = format!(
        "{}\n{}\n{}\n",
        strip(header),
        strip(complete),
        strip(missing)
    );
    let rows_path = dir.path().join("rows.csv");
    std::fs::write(&rows_path, rows).unwrap();

    let o = lmnet(&[
        "score",
        "--model",
        train_dir.join("model.lmnet.json").to_str().unwrap(),
        "--rows",
        rows_path.to_str().unwrap(),
    ]);
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    let text = stdout(&o);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "row,probability,prediction");
    assert!(
        lines[1].ends_with(",YES") || lines[1].ends_with(",NO"),
        "{text}"
    );
    assert_eq!(lines[2], "2,,REFUSED(missing)");
}

#[test]
fn corrupt_model_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let data = data_file(dir.path());
    let model = dir.path().join("model.lmnet.json");
    std::fs::write(&model, r#"{"format_version": 99}"#).unwrap();
    let o = lmnet(&[
        "evaluate",
        "--data",
        &data,
        "--model",
        model.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(2));
}
