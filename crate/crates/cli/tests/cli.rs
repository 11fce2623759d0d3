use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use pcs_uq::config::{CsvSource, RunConfig};
use pcs_uq::ingest::{ingest_csv, read_features};
use pcs_uq::{load_dataset, ModelFile};
use pcs_uq_core::{FeatureKind, Response, Task};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_pcs-uq"))
}

fn run(args: &[&str], cwd: &Path) -> Output {
    bin().args(args).current_dir(cwd).output().unwrap()
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p
}

fn csv_source(path: PathBuf, task: Task, categorical: &[&str]) -> CsvSource {
    CsvSource {
        path,
        target: None,
        task,
        categorical: categorical.iter().map(|s| s.to_string()).collect(),
        drop: Vec::new(),
    }
}

const TOY: &str = r#"{
  "schema_version": 1,
  "dataset": {"synthetic": {"generator": {"kind": "linear_heteroscedastic"}, "n": 240}},
  "seed": 5,
  "n_bootstraps": 30,
  "methods": [
    {"method": "pcs", "specs": [{"kind": "ols"}, {"kind": "knn", "neighbors": 7}]},
    {"method": "split_conformal", "learner": {"kind": "ols"}}
  ],
  "bench": {"n_repeats": 2, "baseline": "split_conformal[ols]"}
}"#;

#[test]
fn three_row_regression_csv() {
    let d = tempfile::tempdir().unwrap();
    let p = write(d.path(), "t.csv", "a,b,y\n1,2,3\n4,5,6\n7,8,9\n");
    let (ds, schema) = ingest_csv(&csv_source(p, Task::Regression, &[])).unwrap();
    assert_eq!(ds.n(), 3);
    assert_eq!(ds.d(), 2);
    assert_eq!(schema.target, "y");
    assert_eq!(ds.response.continuous().unwrap(), &[3.0, 6.0, 9.0]);
}

#[test]
fn categorical_codes_follow_first_appearance() {
    let d = tempfile::tempdir().unwrap();
    let p = write(d.path(), "t.csv", "c,x,y\na,1,0.5\nb,2,0.1\na,3,0.7\n");
    let (ds, schema) = ingest_csv(&csv_source(p, Task::Regression, &["c"])).unwrap();
    assert_eq!(ds.features.column(0), vec![1.0, 2.0, 1.0]);
    assert_eq!(ds.feature_kinds[0], FeatureKind::Categorical);
    assert_eq!(schema.codebook[0].levels, vec!["a", "b"]);
}

#[test]
fn string_classes_are_coded() {
    let d = tempfile::tempdir().unwrap();
    let p = write(d.path(), "t.csv", "x,label\n1,cat\n2,dog\n3,cat\n");
    let (ds, schema) = ingest_csv(&csv_source(p, Task::Classification, &[])).unwrap();
    assert_eq!(ds.num_classes(), Some(2));
    assert_eq!(schema.classes, vec!["cat", "dog"]);
    match &ds.response {
        Response::Classes { labels, .. } => assert_eq!(labels, &[0, 1, 0]),
        _ => panic!("expected classes"),
    }
}

#[test]
fn bad_cells_are_named() {
    let d = tempfile::tempdir().unwrap();
    let p = write(d.path(), "m.csv", "a,b,y\n1,,3\n");
    let e = format!("{:#}", ingest_csv(&csv_source(p, Task::Regression, &[])).unwrap_err());
    assert!(e.contains("row 1") && e.contains("column b"), "{e}");
    let p = write(d.path(), "n.csv", "a,b,y\n1,2,3\n1,zz,3\n");
    let e = format!("{:#}", ingest_csv(&csv_source(p, Task::Regression, &[])).unwrap_err());
    assert!(e.contains("non-numeric") && e.contains("row 2"), "{e}");
}

#[test]
fn toy_bench_writes_reports_and_replays() {
    let d = tempfile::tempdir().unwrap();
    write(d.path(), "cfg.json", TOY);
    let a = run(&["bench", "--config", "cfg.json", "--out", "a", "--jobs", "2"], d.path());
    assert!(a.status.success(), "{}", String::from_utf8_lossy(&a.stderr));
    for f in ["report.json", "report.csv", "manifest.json", "figures/subgroup_coverage.csv", "figures/repeats.csv"] {
        assert!(d.path().join("a").join(f).exists(), "{f}");
    }
    let rep: serde_json::Value = serde_json::from_slice(&fs::read(d.path().join("a/report.json")).unwrap()).unwrap();
    assert_eq!(rep["reports"].as_array().unwrap().len(), 2);
    let b = run(&["bench", "--config", "cfg.json", "--out", "b"], d.path());
    assert!(b.status.success());
    assert_eq!(
        fs::read(d.path().join("a/report.json")).unwrap(),
        fs::read(d.path().join("b/report.json")).unwrap()
    );
    let leftovers: Vec<_> = fs::read_dir(d.path().join("a"))
        .unwrap()
        .filter_map(|e| e.ok())
        .filter(|e| e.file_name().to_string_lossy().starts_with(".tmp"))
        .collect();
    assert!(leftovers.is_empty());
}

#[test]
fn invalid_alpha_writes_nothing() {
    let d = tempfile::tempdir().unwrap();
    write(d.path(), "cfg.json", TOY);
    let o = run(&["bench", "--config", "cfg.json", "--out", "out", "--alpha", "1.5"], d.path());
    assert!(!o.status.success());
    assert_eq!(o.status.code(), Some(pcs_uq::EXIT_CONFIG));
    assert!(!d.path().join("out").exists());
    write(d.path(), "bad.json", &TOY.replace("\"seed\": 5", "\"seed\": 5, \"alpha\": 1.5"));
    let o = run(&["bench", "--config", "bad.json", "--out", "out"], d.path());
    assert_eq!(o.status.code(), Some(pcs_uq::EXIT_CONFIG));
    assert!(!d.path().join("out").exists());
}

#[test]
fn hard_errors_leave_an_error_record() {
    let d = tempfile::tempdir().unwrap();
    write(
        d.path(),
        "cfg.json",
        r#"{"schema_version": 1,
            "dataset": {"csv": {"path": "missing.csv", "task": "regression"}},
            "methods": [{"method": "split_conformal", "learner": {"kind": "ols"}}]}"#,
    );
    let o = run(&["bench", "--config", "cfg.json", "--out", "out"], d.path());
    assert_eq!(o.status.code(), Some(pcs_uq::EXIT_FAILURE));
    let err: serde_json::Value = serde_json::from_slice(&fs::read(d.path().join("out/error.json")).unwrap()).unwrap();
    assert_eq!(err["command"], "bench");
    assert!(!d.path().join("out/report.json").exists());
}

fn training_csv(dir: &Path) -> PathBuf {
    let mut s = String::from("a,color,b,y\n");
    let cfg: RunConfig = serde_json::from_str(
        r#"{"schema_version": 1, "dataset": {"synthetic": {"generator": {"kind": "linear_homoscedastic"}, "n": 200, "seed": 4}}}"#,
    )
    .unwrap();
    let (ds, _) = load_dataset(&cfg).unwrap();
    let y = ds.response.continuous().unwrap();
    for i in 0..ds.n() {
        let c = ["red", "blue", "green"][i % 3];
        let shift = if c == "red" { 1.5 } else { 0.0 };
        s.push_str(&format!("{},{c},{},{}\n", ds.features.get(i, 0), ds.features.get(i, 1), y[i] + shift));
    }
    write(dir, "train.csv", &s)
}

#[test]
fn fit_then_predict_covers_training_responses() {
    let d = tempfile::tempdir().unwrap();
    training_csv(d.path());
    write(
        d.path(),
        "fit.json",
        r#"{"schema_version": 1,
            "dataset": {"csv": {"path": "train.csv", "task": "regression", "categorical": ["color"]}},
            "seed": 3,
            "methods": [{"method": "pcs", "specs": [{"kind": "ols"}, {"kind": "ridge"}], "config": {"n_bootstraps": 50}}]}"#,
    );
    let o = run(&["fit", "--config", "fit.json", "--out", "m"], d.path());
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let o = run(&["predict", "--model", "m/model.json", "--input", "train.csv", "--out", "p"], d.path());
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = fs::read_to_string(d.path().join("p/predictions.csv")).unwrap();
    let rows: Vec<&str> = text.lines().skip(1).collect();
    assert_eq!(rows.len(), 200);
    let covered = rows.iter().filter(|r| r.ends_with(",true")).count();
    assert!(covered as f64 / 200.0 >= 0.9, "{covered}");
}

#[test]
fn saved_model_predicts_bit_for_bit() {
    let d = tempfile::tempdir().unwrap();
    let train = training_csv(d.path());
    write(
        d.path(),
        "fit.json",
        r#"{"schema_version": 1,
            "dataset": {"csv": {"path": "train.csv", "task": "regression", "categorical": ["color"]}},
            "seed": 9,
            "methods": [{"method": "majority_vote", "learners": [{"kind": "ols"}, {"kind": "knn", "neighbors": 5}]}]}"#,
    );
    assert!(run(&["fit", "--config", "fit.json", "--out", "m"], d.path()).status.success());
    let cfg = RunConfig::load(&d.path().join("fit.json")).unwrap();
    let (ds, schema) = load_dataset(&cfg).unwrap();
    let rows: Vec<usize> = (0..ds.n()).collect();
    let fitted = cfg.methods()[0].fit(&ds, &rows, cfg.alpha, pcs_uq_core::SeedSpec::new(9)).unwrap();
    let loaded = ModelFile::load(&d.path().join("m/model.json")).unwrap();
    assert_eq!(loaded.schema, schema);
    let x = read_features(&train, &schema).unwrap().x;
    assert_eq!(fitted.predict(&x).unwrap(), loaded.fitted.predict(&x).unwrap());
}

#[test]
fn predict_rejects_wrong_columns_and_versions() {
    let d = tempfile::tempdir().unwrap();
    training_csv(d.path());
    write(
        d.path(),
        "fit.json",
        r#"{"schema_version": 1,
            "dataset": {"csv": {"path": "train.csv", "task": "regression", "categorical": ["color"]}},
            "methods": [{"method": "split_conformal", "learner": {"kind": "ols"}}]}"#,
    );
    assert!(run(&["fit", "--config", "fit.json", "--out", "m"], d.path()).status.success());
    write(d.path(), "narrow.csv", "a,b\n0.1,0.2\n");
    let o = run(&["predict", "--model", "m/model.json", "--input", "narrow.csv"], d.path());
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("dimension mismatch"));

    let text = fs::read_to_string(d.path().join("m/model.json")).unwrap();
    write(d.path(), "old.json", &text.replace("\"format_version\": 1", "\"format_version\": 99"));
    let o = run(&["predict", "--model", "old.json", "--input", "train.csv"], d.path());
    assert!(!o.status.success());
    let e = String::from_utf8_lossy(&o.stderr);
    assert!(e.contains("99") && e.contains("expects 1"), "{e}");
}

#[test]
fn ablate_bootstrap_grid_gives_two_points() {
    let d = tempfile::tempdir().unwrap();
    write(
        d.path(),
        "abl.json",
        r#"{"schema_version": 1,
            "dataset": {"synthetic": {"generator": {"kind": "friedman"}, "n": 200}},
            "ablation": {"kind": "n_bootstraps", "grid": [10, 100], "specs": [{"kind": "ols"}, {"kind": "knn", "neighbors": 5}]},
            "bench": {"n_repeats": 1, "subgroups": false}}"#,
    );
    let o = run(&["ablate", "--config", "abl.json", "--out", "a"], d.path());
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let rep: serde_json::Value = serde_json::from_slice(&fs::read(d.path().join("a/report.json")).unwrap()).unwrap();
    assert_eq!(rep["kind"], "n_bootstraps");
    assert_eq!(rep["points"].as_array().unwrap().len(), 2);
    assert!(d.path().join("a/figures/ablation_n_bootstraps.csv").exists());
}

#[test]
fn subgroups_prints_scheme() {
    let d = tempfile::tempdir().unwrap();
    write(d.path(), "cfg.json", TOY);
    let o = run(&["subgroups", "--config", "cfg.json"], d.path());
    assert!(o.status.success());
    let s: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert!(s["feature"].as_u64().is_some());
}

#[test]
fn fit_needs_exactly_one_method() {
    let d = tempfile::tempdir().unwrap();
    write(d.path(), "cfg.json", TOY);
    let o = run(&["fit", "--config", "cfg.json", "--out", "m"], d.path());
    assert_eq!(o.status.code(), Some(pcs_uq::EXIT_CONFIG));
    assert!(!d.path().join("m").exists());
}
