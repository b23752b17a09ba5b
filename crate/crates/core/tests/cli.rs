use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn sca(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sca")).args(args).output().expect("binary runs")
}

fn ok(args: &[&str]) -> Output {
    let out = sca(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn small_scene(dir: &Path) {
    ok(&["synth", "--k", "3", "--f", "16", "--n", "100", "--seed", "7", "--out", p(dir)]);
}

#[test]
fn truncated_dataset_exits_with_1() {
    let dir = tempfile::tempdir().unwrap();
    small_scene(dir.path());
    let bytes = fs::read(dir.path().join("dataset.hsx")).unwrap();
    let bad = dir.path().join("bad.hsx");
    fs::write(&bad, &bytes[..bytes.len() - 5]).unwrap();
    let out = sca(&["train", "--data", p(&bad), "--out", p(dir.path())]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("format error"));
}

#[test]
fn k_above_f_exits_with_1() {
    let dir = tempfile::tempdir().unwrap();
    let out = sca(&["synth", "--k", "10", "--f", "5", "--out", p(dir.path())]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("k exceeds f"));
}

#[test]
fn singular_ground_truth_exits_with_2() {
    let dir = tempfile::tempdir().unwrap();
    small_scene(dir.path());
    let row = vec!["0.5"; 16].join(",");
    let gt = dir.path().join("dup.csv");
    fs::write(&gt, format!("{row}\n{row}\n{row}\n")).unwrap();
    let out = sca(&[
        "train", "--data", p(&dir.path().join("dataset.hsx")), "--init", "gt", "--gt", p(&gt), "--out", p(dir.path()),
    ]);
    assert_eq!(out.status.code(), Some(2), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn unknown_flag_exits_with_1() {
    assert_eq!(sca(&["train", "--bogus"]).status.code(), Some(1));
    assert_eq!(sca(&["--help"]).status.code(), Some(0));
}

#[test]
fn identical_runs_give_identical_bytes() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for dir in [a.path(), b.path()] {
        small_scene(dir);
        let data = dir.join("dataset.hsx");
        let run = dir.join("run");
        ok(&["train", "--data", p(&data), "--out", p(&run), "--epochs", "2", "--steps", "50", "--log-every", "25"]);
        ok(&["export", "--weights", p(&run.join("weights.hsx")), "--data", p(&data), "--gt", p(dir), "--out", p(&run.join("maps"))]);
    }
    for file in [
        "dataset.hsx",
        "endmembers.csv",
        "abundances.hsx",
        "run/weights.hsx",
        "run/history.csv",
        "run/maps/abundance_0.png",
        "run/maps/difference_2.png",
        "run/maps/simplex.csv",
    ] {
        assert_eq!(fs::read(a.path().join(file)).unwrap(), fs::read(b.path().join(file)).unwrap(), "{file}");
    }
}

#[test]
fn tail_and_eval_without_ground_truth() {
    let dir = tempfile::tempdir().unwrap();
    small_scene(dir.path());
    let data = dir.path().join("dataset.hsx");
    let tail = ok(&["tail", "--data", p(&data), "--k", "2"]);
    assert!(String::from_utf8_lossy(&tail.stdout).contains("tail_energy(k=2)"));

    let run = dir.path().join("gt");
    ok(&[
        "train", "--data", p(&data), "--init", "gt", "--gt", p(&dir.path().join("endmembers.csv")), "--lambda", "0",
        "--epochs", "1", "--steps", "1", "--out", p(&run),
    ]);
    let eval = ok(&["eval", "--weights", p(&run.join("weights.hsx")), "--data", p(&data), "--out", p(&run)]);
    assert!(String::from_utf8_lossy(&eval.stderr).contains("--gt"));
    let csv = fs::read_to_string(run.join("report.csv")).unwrap();
    assert!(csv.starts_with("rmse_y,biorth,volume"));
}

#[test]
fn every_subcommand_parses_and_sweep_runs() {
    for cmd in ["synth", "train", "eval", "export", "tail", "sweep"] {
        assert_eq!(sca(&[cmd, "--help"]).status.code(), Some(0), "{cmd}");
    }
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("sweep");
    ok(&[
        "sweep", "--kind", "outliers", "--outlier-counts", "5", "--f", "12", "--n", "80", "--epochs", "1", "--steps",
        "10", "--out", p(&out),
    ]);
    let csv = fs::read_to_string(out.join("sweep.csv")).unwrap();
    assert_eq!(csv.lines().count(), 2);
    assert!(csv.lines().nth(1).unwrap().starts_with("0,,0.001,5,4,"), "{csv}");
}
