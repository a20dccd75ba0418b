use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use cmll::data::{write_dataset, Dataset};
use cmll::Mat;
use tempfile::TempDir;

fn cmll(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cmll")).args(args).output().expect("spawn cmll")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

/// Deterministic dataset with labels tied to the first two features.
fn toy(n: usize) -> Dataset<f64> {
    let x = Mat::from_fn(n, 6, |i, j| ((i * 7 + j * 13) as f64 * 0.37).sin() + 0.1 * j as f64);
    let y = Mat::from_fn(n, 4, |i, j| {
        let s = x[(i, 0)] * (j as f64 - 1.5) + x[(i, 1)];
        if s > 0.2 || (i + j) % 9 == 0 { 1.0 } else { 0.0 }
    });
    Dataset::new(x, y, "toy").unwrap()
}

fn write_toy(dir: &TempDir, n: usize) -> PathBuf {
    let path = dir.path().join("toy.txt");
    fs::write(&path, write_dataset(&toy(n))).unwrap();
    path
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn fit_predict_eval_round_trip() {
    let dir = TempDir::new().unwrap();
    let data = write_toy(&dir, 40);
    let model = dir.path().join("m.bin");
    for method in ["cmll", "kcmll", "cmll_y", "mddm", "ori"] {
        let out = cmll(&["fit", "--data", s(&data), "--method", method, "--model", s(&model)]);
        assert!(out.status.success(), "{method}: {}", String::from_utf8_lossy(&out.stderr));
        assert!(fs::read(&model).unwrap().starts_with(b"CMLLMDL 1"));

        let out = cmll(&["predict", "--data", s(&data), "--model", s(&model), "--format", "csv"]);
        assert!(out.status.success());
        let text = stdout(&out);
        let mut lines = text.split("\r\n");
        assert_eq!(lines.next().unwrap(), "instance,labels,s0,s1,s2,s3");
        assert_eq!(text.split("\r\n").filter(|l| !l.is_empty()).count(), 41);

        let out = cmll(&["eval", "--data", s(&data), "--model", s(&model), "--format", "jsonl"]);
        assert!(out.status.success());
        let rows: Vec<serde_json::Value> = stdout(&out).lines().map(|l| serde_json::from_str(l).unwrap()).collect();
        assert_eq!(rows.len(), 6);
        assert_eq!(rows[0]["metric"], "average_precision");
    }
}

#[test]
fn cv_report_is_deterministic_and_written_to_file() {
    let dir = TempDir::new().unwrap();
    let data = write_toy(&dir, 50);
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    for (path, extra) in [(&a, None), (&b, Some("--parallel"))] {
        let mut args = vec!["cv", "--data", s(&data), "--folds", "5", "--seed", "4", "--format", "csv", "--out", s(path)];
        args.extend(extra);
        assert!(cmll(&args).status.success());
    }
    let text = fs::read_to_string(&a).unwrap();
    assert_eq!(text, fs::read_to_string(&b).unwrap());
    assert!(text.starts_with("method,metric,value_mean,value_std,folds,undefined\r\n"));
    assert_eq!(text.lines().count(), 7);
}

#[test]
fn grid_sensitivity_and_bounds_run() {
    let dir = TempDir::new().unwrap();
    let data = write_toy(&dir, 40);
    let out = cmll(&["grid", "--data", s(&data), "--folds", "3", "--format", "csv"]);
    assert!(out.status.success());
    assert_eq!(stdout(&out).lines().count(), 21);
    assert!(String::from_utf8_lossy(&out.stderr).contains("mu* ="));

    let out = cmll(&["sensitivity", "--data", s(&data), "--folds", "3", "--alphas", "0.01,1,100", "--format", "jsonl"]);
    assert!(out.status.success());
    assert_eq!(stdout(&out).lines().count(), 3);

    let out = cmll(&["bounds", "--data", s(&data)]);
    assert!(out.status.success());
    let text = stdout(&out);
    assert!(text.starts_with("instance"));
    assert!(text.lines().last().unwrap().starts_with("mean"));
}

#[test]
fn usage_and_invalid_input_exit_2() {
    let dir = TempDir::new().unwrap();
    let data = write_toy(&dir, 20);
    assert_eq!(cmll(&["cv"]).status.code(), Some(2));
    assert_eq!(cmll(&["cv", "--data", s(&data), "--mu", "1.5"]).status.code(), Some(2));
    assert_eq!(cmll(&["cv", "--data", s(&data), "--gamma", "wide"]).status.code(), Some(2));
    assert_eq!(cmll(&["fit", "--data", s(&data)]).status.code(), Some(2));
    assert_eq!(cmll(&["grid", "--data", s(&data), "--nu0", "0.25"]).status.code(), Some(2));
    assert_eq!(cmll(&["cv", "--data", s(&dir.path().join("missing.txt"))]).status.code(), Some(2));
}

#[test]
fn malformed_files_exit_3() {
    let dir = TempDir::new().unwrap();
    let bad = dir.path().join("bad.txt");
    fs::write(&bad, "2 3 2\n0 7:1\n1 0:1\n").unwrap();
    let out = cmll(&["cv", "--data", s(&bad)]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 2"));

    let data = write_toy(&dir, 20);
    let model = dir.path().join("m.bin");
    assert!(cmll(&["fit", "--data", s(&data), "--model", s(&model)]).status.success());
    let bytes = fs::read(&model).unwrap();
    fs::write(&model, &bytes[..bytes.len() - 3]).unwrap();
    assert_eq!(cmll(&["predict", "--data", s(&data), "--model", s(&model)]).status.code(), Some(3));
    fs::write(&model, b"CMLLMDL 9\nend\n").unwrap();
    assert_eq!(cmll(&["predict", "--data", s(&data), "--model", s(&model)]).status.code(), Some(3));
}

#[test]
fn singular_unregularized_fit_exits_4() {
    let dir = TempDir::new().unwrap();
    let d = toy(20);
    let x = Mat::from_fn(20, 4, |i, j| d.x[(i, j / 2)]);
    let path = dir.path().join("dup.txt");
    fs::write(&path, write_dataset(&Dataset::new(x, d.y, "dup").unwrap())).unwrap();
    let model = dir.path().join("m.bin");
    let args = ["fit", "--data", s(&path), "--method", "ori", "--learner", "ridge", "--rho", "0", "--model", s(&model)];
    assert_eq!(cmll(&args).status.code(), Some(4));
}
