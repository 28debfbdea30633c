//! End-to-end runs of the `scoregate` binary.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use scoregate_core::survey::BUNDLE_FILES;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_scoregate"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn demo() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data/demo")
}

fn golden() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden")
}

fn stdout_json(out: &Output) -> serde_json::Value {
    serde_json::from_slice(&out.stdout).expect("json on stdout")
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn check_image_worked_examples() {
    let base = ["check-image", "--acc", "0.9492", "--sens", "0.7965", "--spec", "0.9722", "--digits", "4"];
    let pass = run(&[&base[..], &["--p", "29412", "--n", "194965"]].concat());
    assert_eq!(pass.status.code(), Some(0));
    let v = stdout_json(&pass);
    assert_eq!(v["passed"], true);
    assert_eq!(v["eps"], "1/20000");
    assert_eq!(v["counts"]["p"], 29412);

    let fail = run(&[&base[..], &["--p", "29440", "--n", "300520"]].concat());
    assert_eq!(fail.status.code(), Some(0));
    let v = stdout_json(&fail);
    assert_eq!(v["passed"], false);
    assert!(!v["failed_conditions"].as_array().unwrap().is_empty());
}

#[test]
fn input_errors_exit_one_with_a_single_line() {
    let out = run(&["check-image", "--acc", "0.9", "--unknown"]);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(String::from_utf8_lossy(&out.stderr).trim_end().lines().count(), 1);

    let out = run(&["check-image", "--acc", "1.5", "--sens", "0.5", "--spec", "0.5", "--digits", "3", "--p", "5", "--n", "5"]);
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert_eq!(err.trim_end().lines().count(), 1, "{err}");
    assert!(err.contains("[0, 1]"), "{err}");

    let dir = tempfile::tempdir().unwrap();
    let scores = dir.path().join("scores.csv");
    fs::write(&scores, "image_id,acc,sens,spec,digits\n01,0.95,0.7q,0.97,3\n").unwrap();
    let out = run(&["adjust", "--scores", path(&scores), "--counts", path(&demo().join("counts.json"))]);
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert_eq!(err.trim_end().lines().count(), 1, "{err}");
    assert!(err.contains("line 2") && err.contains("sens"), "{err}");

    let counts = dir.path().join("counts.json");
    fs::write(&counts, r#"[{"image_id":"01","p_fov":5,"n_fov":5,"p_all":4,"n_all":9}]"#).unwrap();
    let out = run(&["check-aggregate", "--scores", path(&scores), "--counts", path(&counts), "--hypothesis", "fov"]);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(String::from_utf8_lossy(&out.stderr).trim_end().lines().count(), 1);
}

#[test]
fn exhausted_search_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let counts = dir.path().join("counts.json");
    fs::write(&counts, r#"[{"image_id":"01","p_fov":5,"n_fov":5,"p_all":5,"n_all":9}]"#).unwrap();
    let scores = dir.path().join("scores.csv");
    // tp = 2.5 solves the real system only
    fs::write(&scores, "image_id,acc,sens,spec,digits\n,0.50,0.50,0.50,2\n").unwrap();
    let args = ["check-aggregate", "--scores", path(&scores), "--counts", path(&counts), "--hypothesis", "fov"];
    let out = run(&[&args[..], &["--max-nodes", "1"]].concat());
    assert_eq!(out.status.code(), Some(2));
    let v = stdout_json(&out);
    assert_eq!(v["rows"][0]["verdict"]["inconclusive"], true);

    let out = run(&args);
    assert_eq!(out.status.code(), Some(0));
    let v = stdout_json(&out);
    assert_eq!(v["rows"][0]["verdict"]["passed"], false);
    assert_eq!(v["rows"][0]["verdict"]["failed_conditions"][0], "Integrality");
}

#[test]
fn survey_bundle_matches_golden_files() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("bundle");
    let log = dir.path().join("survey.log");
    let d = demo();
    let out = run(&[
        "survey",
        "--corpus",
        path(&d.join("corpus.csv")),
        "--counts",
        path(&d.join("counts.json")),
        "--splits",
        path(&d.join("splits.json")),
        "--out",
        path(&out_dir),
        "--log",
        path(&log),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    for name in BUNDLE_FILES {
        let got = fs::read_to_string(out_dir.join(name)).unwrap();
        let want = fs::read_to_string(golden().join(name)).unwrap();
        assert_eq!(got, want, "{name} differs from the golden file");
    }
    assert!(fs::read_to_string(log).unwrap().contains("started_unix="));
    let files: Vec<_> = fs::read_dir(&out_dir).unwrap().collect();
    assert_eq!(files.len(), BUNDLE_FILES.len());
}

#[test]
fn demo_truth_matches_categories() {
    let truth = fs::read_to_string(demo().join("truth.csv")).unwrap();
    let categories = fs::read_to_string(golden().join("categories.csv")).unwrap();
    for line in truth.lines().skip(1) {
        let (key, region) = line.split_once(',').unwrap();
        let expected = match region {
            "fov" => "FoV",
            "all_pixels" => "AllPixels",
            "outlier" => "Outlier",
            other => panic!("{other}"),
        };
        assert!(categories.lines().any(|l| l.starts_with(&format!("{key},{expected},"))), "{key}");
    }
}

#[test]
fn counts_and_synth_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&["synth", "--out", path(dir.path()), "--seed", "1"]);
    assert_eq!(out.status.code(), Some(0));
    for name in ["counts.json", "splits.json", "corpus.csv", "truth.csv"] {
        assert_eq!(
            fs::read(dir.path().join(name)).unwrap(),
            fs::read(demo().join(name)).unwrap(),
            "{name}"
        );
    }
    let counts = dir.path().join("recount.json");
    let splits = dir.path().join("resplit.json");
    let dataset = dir.path().join("dataset");
    let out = run(&[
        "counts",
        "--masks",
        path(&dataset.join("mask")),
        "--annotations",
        path(&dataset.join("1st_manual")),
        "--out",
        path(&counts),
        "--splits-out",
        path(&splits),
    ]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(fs::read(&counts).unwrap(), fs::read(demo().join("counts.json")).unwrap());
    assert_eq!(fs::read(&splits).unwrap(), fs::read(demo().join("splits.json")).unwrap());
}

#[test]
fn adjust_writes_intervals_and_flags_unadjustable_rows() {
    let d = demo();
    let out = run(&["adjust", "--scores", path(&d.join("scores.csv")), "--counts", path(&d.join("counts.json"))]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    let mut reader = csv::Reader::from_reader(text.as_bytes());
    let rows: Vec<csv::StringRecord> = reader.records().map(|r| r.unwrap()).collect();
    assert_eq!(rows.len(), 2);
    assert_eq!(&rows[0][3], "ok");
    let lower: f64 = rows[0][6].parse().unwrap();
    let upper: f64 = rows[0][7].parse().unwrap();
    assert!(lower <= upper && upper - lower < 0.01);
    // the FoV paper's row is not an all-pixels figure
    assert_eq!(&rows[1][3], "not_adjustable");
}

#[test]
fn sweep_writes_curves_and_metadata() {
    let dir = tempfile::tempdir().unwrap();
    let csv_path = dir.path().join("curves.csv");
    let out = run(&[
        "sweep",
        "--dataset",
        path(&demo().join("dataset")),
        "--digits",
        "3",
        "--kind",
        "image",
        "--out",
        path(&csv_path),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let text = fs::read_to_string(&csv_path).unwrap();
    assert!(text.starts_with("region_fraction,pass_rate_fov,pass_rate_all,mean_acc,digits,test_kind\n"));
    let meta: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("curves.csv.meta.json")).unwrap()).unwrap();
    assert_eq!(meta["levels"].as_u64().unwrap() as usize, text.lines().count() - 1);
    assert_eq!(meta["structuring_element"], "square3");
}

#[test]
fn thread_cap_does_not_change_output() {
    let d = demo();
    let (scores, counts) = (d.join("scores.csv"), d.join("counts.json"));
    let args = ["check-aggregate", "--scores", path(&scores), "--counts", path(&counts), "--hypothesis", "all"];
    let one = bin().args(args).env("SCOREGATE_THREADS", "1").output().unwrap();
    let many = bin().args(args).env("SCOREGATE_THREADS", "4").output().unwrap();
    assert_eq!(one.status.code(), Some(0));
    assert_eq!(one.stdout, many.stdout);
    let bad = bin().args(args).env("SCOREGATE_THREADS", "x").output().unwrap();
    assert_eq!(bad.status.code(), Some(1));
}
