use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use yieldlag::features;
use yieldlag::model::SavedModel;
use yieldlag::synth::{self, SynthConfig};

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

fn yieldlag(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_yieldlag"))
        .args(args)
        .arg("--out")
        .arg(out)
        .output()
        .expect("spawn yieldlag")
}

fn ok(args: &[&str], out: &Path) -> Output {
    let o = yieldlag(args, out);
    assert!(
        o.status.success(),
        "yieldlag {args:?}: {}",
        String::from_utf8_lossy(&o.stderr)
    );
    o
}

fn code(args: &[&str], out: &Path) -> i32 {
    yieldlag(args, out).status.code().expect("exit code")
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

/// simulate, interpolate and featurize the small fixture; returns the dataset path.
fn dataset(root: &Path) -> PathBuf {
    let sim = root.join("sim");
    ok(&["simulate", "--config", s(&fixture("small.json"))], &sim);
    ok(
        &[
            "interpolate",
            "--plots",
            s(&sim.join("plots.csv")),
            "--series",
            s(&sim.join("series.csv")),
        ],
        &root.join("weekly"),
    );
    ok(
        &[
            "featurize",
            "--plots",
            s(&sim.join("plots.csv")),
            "--weekly",
            s(&root.join("weekly/weekly.csv")),
        ],
        &root.join("features"),
    );
    root.join("features/dataset.csv")
}

#[test]
fn featurized_pipeline_matches_in_process_simulation() {
    let dir = tempfile::tempdir().unwrap();
    let path = dataset(dir.path());
    let cfg = SynthConfig::read(fixture("small.json")).unwrap();
    let expected = synth::generate_dataset(&cfg).unwrap().dataset;
    let got = features::read_dataset(&path).unwrap();
    assert_eq!(got.len(), cfg.n_plots);
    assert_eq!(got.columns, expected.columns);
    let (gx, ex) = (got.x_matrix(), expected.x_matrix());
    let worst = gx.iter().zip(ex.iter()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    assert!(worst < 1e-9, "{worst}");
    assert_eq!(got.y_vector(), expected.y_vector());
    let skips = std::fs::read_to_string(dir.path().join("features/skips.csv")).unwrap();
    assert_eq!(skips.lines().count(), 1, "{skips}");
}

#[test]
fn every_run_leaves_a_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("sim");
    ok(&["simulate", "--config", s(&fixture("small.json")), "--seed", "5"], &out);
    let m: serde_json::Value = serde_json::from_slice(&std::fs::read(out.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(m["command"], "simulate");
    assert_eq!(m["seed"], 5);
    assert_eq!(m["outputs"].as_array().unwrap().len(), 3);
}

#[test]
fn fit_with_fixed_lambda_then_report_with_charts() {
    let dir = tempfile::tempdir().unwrap();
    let data = dataset(dir.path());
    let fit = dir.path().join("fit");
    ok(&["fit", "--dataset", s(&data), "--model", "enet", "--lambda", "0.5"], &fit);
    assert!(!fit.join("cv_curve.csv").exists());
    assert!(matches!(
        SavedModel::read(fit.join("model.json")).unwrap(),
        SavedModel::Enet(_)
    ));
    let report = dir.path().join("report");
    ok(&["report", "--model", s(&fit.join("model.json")), "--svg"], &report);
    let svgs = std::fs::read_dir(&report)
        .unwrap()
        .filter(|e| e.as_ref().unwrap().path().extension().is_some_and(|x| x == "svg"))
        .count();
    assert_eq!(svgs, 6);
    let csv = std::fs::read_to_string(report.join("lag_report.csv")).unwrap();
    assert_eq!(csv.lines().count(), 73);
}

#[test]
fn cv_prints_the_selected_penalty() {
    let dir = tempfile::tempdir().unwrap();
    let data = dataset(dir.path());
    let o = ok(
        &["cv", "--dataset", s(&data), "--alpha", "1", "--n-lambdas", "10", "--folds", "3"],
        &dir.path().join("cv"),
    );
    let lambda: f64 = String::from_utf8(o.stdout).unwrap().trim().parse().unwrap();
    assert!(lambda > 0.0);
    let curve = std::fs::read_to_string(dir.path().join("cv/cv_curve.csv")).unwrap();
    assert_eq!(curve.lines().count(), 11);
}

#[test]
fn report_rejects_a_tree_model() {
    let dir = tempfile::tempdir().unwrap();
    let data = dataset(dir.path());
    let fit = dir.path().join("fit");
    ok(&["fit", "--dataset", s(&data), "--model", "gbt", "--rounds", "5"], &fit);
    assert_eq!(code(&["report", "--model", s(&fit.join("model.json"))], &dir.path().join("r")), 2);
}

#[test]
fn invalid_inputs_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("o");
    assert_eq!(code(&["simulate", "--config", "/nonexistent/config.json"], &out), 2);

    let garbage = dir.path().join("model.json");
    std::fs::write(&garbage, "{\"kind\": \"forest\"}").unwrap();
    assert_eq!(code(&["report", "--model", s(&garbage)], &out), 2);

    let bad = dir.path().join("bad.json");
    let text = std::fs::read_to_string(fixture("small.json")).unwrap();
    std::fs::write(&bad, text.replace("\"lag\": 8", "\"lag\": 13")).unwrap();
    assert_eq!(code(&["simulate", "--config", s(&bad)], &out), 2);

    assert_eq!(code(&["simulate", "--config", s(&fixture("small.json")), "--threads", "0"], &out), 2);
}

#[test]
fn empty_plot_table_featurizes_to_an_empty_dataset() {
    let dir = tempfile::tempdir().unwrap();
    let root = dir.path();
    ok(&["simulate", "--config", s(&fixture("small.json"))], &root.join("sim"));
    let plots = std::fs::read_to_string(root.join("sim/plots.csv")).unwrap();
    let header = plots.lines().next().unwrap();
    std::fs::write(root.join("empty.csv"), format!("{header}\n")).unwrap();
    ok(
        &[
            "interpolate",
            "--plots",
            s(&root.join("empty.csv")),
            "--series",
            s(&root.join("sim/series.csv")),
        ],
        &root.join("weekly"),
    );
    ok(
        &[
            "featurize",
            "--plots",
            s(&root.join("empty.csv")),
            "--weekly",
            s(&root.join("weekly/weekly.csv")),
        ],
        &root.join("features"),
    );
    let csv = std::fs::read_to_string(root.join("features/dataset.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1);
}
