use std::fs;
use std::path::Path;
use std::process::Command;

use loadcast::cli::pipeline::{CompareReport, DiagnosticsReport, EvaluationReport, FitReport, ModelArtifact};
use loadcast::cli::run;
use serde::de::DeserializeOwned;
use serde::Serialize;

fn loadcast(args: &[&str]) -> i32 {
    let mut argv = vec!["loadcast", "--quiet"];
    argv.extend_from_slice(args);
    run(argv)
}

fn synth(dir: &Path) -> String {
    let csv = dir.join("data.csv");
    let out = csv.to_str().unwrap().to_string();
    assert_eq!(loadcast(&["synth", "--seed", "3", "--out", &out]), 0);
    out
}

/// Parses the file into `T` and checks that re-serializing reproduces it.
fn round_trip<T: Serialize + DeserializeOwned>(path: &Path) -> T {
    let text = fs::read_to_string(path).unwrap();
    let value: T = serde_json::from_str(&text).unwrap();
    let again = serde_json::to_string_pretty(&value).unwrap() + "\n";
    assert_eq!(again, text, "{} does not round-trip", path.display());
    value
}

#[test]
fn synth_is_byte_identical_across_runs() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    for p in [&a, &b] {
        assert_eq!(loadcast(&["synth", "--seed", "11", "--out", p.to_str().unwrap()]), 0);
    }
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
    let text = fs::read_to_string(&a).unwrap();
    assert!(text.starts_with("date,load,generation,deficit,temperature,humidity\n"));
    assert_eq!(text.lines().count(), 731);
}

#[test]
fn usage_errors_exit_one_with_usage_on_stderr() {
    let out = Command::new(env!("CARGO_BIN_EXE_loadcast"))
        .arg("frobnicate")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("Usage"), "{err}");
    assert!(out.stdout.is_empty());

    let dir = tempfile::tempdir().unwrap();
    let input = synth(dir.path());
    assert_eq!(loadcast(&["fit", "--input", &input]), 1);
    assert_eq!(loadcast(&["fit", "--input", &input, "--auto", "--family", "ses"]), 1);
    assert_eq!(loadcast(&["diagnose"]), 1);
}

#[test]
fn runtime_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("absent.csv");
    let out = Command::new(env!("CARGO_BIN_EXE_loadcast"))
        .args(["diagnose", "--input", missing.to_str().unwrap()])
        .env_remove("LOADCAST_OUT_DIR")
        .current_dir(dir.path())
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).starts_with("error:"));

    let bad = dir.path().join("bad.csv");
    fs::write(&bad, "date,load\n2023-01-01,abc\n").unwrap();
    let d = dir.path().to_str().unwrap();
    assert_eq!(
        loadcast(&["diagnose", "--input", bad.to_str().unwrap(), "--out-dir", d]),
        2
    );
}

#[test]
fn fit_forecast_evaluate_and_diagnose_emit_round_tripping_json() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().to_str().unwrap();
    let input = synth(dir.path());

    let code = loadcast(&[
        "fit",
        "--input",
        &input,
        "--order",
        "1,1,1",
        "--exog",
        "--split",
        "2023-10-01",
        "--out-dir",
        d,
    ]);
    assert_eq!(code, 0);
    let artifact: ModelArtifact = round_trip(&dir.path().join("model.json"));
    let report: FitReport = round_trip(&dir.path().join("fit_report.json"));
    assert_eq!(report.train_end.to_string(), "2023-09-30");
    assert_eq!(artifact.exog_columns.len(), 2);

    let model = dir.path().join("model.json");
    let model = model.to_str().unwrap();
    assert_eq!(
        loadcast(&["evaluate", "--model", model, "--input", &input, "--out-dir", d]),
        0
    );
    let metrics: EvaluationReport = round_trip(&dir.path().join("metrics.json"));
    assert_eq!(metrics.n_test, 92);
    assert!(metrics.original.rmse.is_finite());

    assert_eq!(
        loadcast(&[
            "forecast",
            "--model",
            model,
            "--input",
            &input,
            "--until",
            "2024-03-31",
            "--out-dir",
            d
        ]),
        0
    );
    let csv = fs::read_to_string(dir.path().join("forecast.csv")).unwrap();
    let rows: Vec<&str> = csv.lines().skip(1).collect();
    // the forecast continues from the last training day
    assert_eq!(rows.len(), 183);
    assert!(rows[0].starts_with("2023-10-01,"));
    assert!(rows[182].starts_with("2024-03-31,"));
    let svg = fs::read_to_string(dir.path().join("forecast.svg")).unwrap();
    assert!(svg.starts_with("<svg") && svg.ends_with("</svg>\n"));

    assert_eq!(
        loadcast(&["diagnose", "--input", &input, "--max-lag", "20", "--out-dir", d]),
        0
    );
    let diag: DiagnosticsReport = round_trip(&dir.path().join("diagnostics.json"));
    assert_eq!(diag.levels.acf.len(), 21);
    assert!(dir.path().join("correlogram.svg").exists());
}

#[test]
fn grid_and_auto_selection_through_the_cli() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().to_str().unwrap();
    let input = synth(dir.path());
    let grid = dir.path().join("grid.json");
    fs::write(&grid, r#"{"alpha": [0.2, 0.5, 0.9]}"#).unwrap();
    let code = loadcast(&[
        "fit",
        "--input",
        &input,
        "--grid",
        grid.to_str().unwrap(),
        "--grid-family",
        "ses",
        "--folds",
        "3",
        "--metric",
        "mae",
        "--out-dir",
        d,
    ]);
    assert_eq!(code, 0);
    let report: FitReport = round_trip(&dir.path().join("fit_report.json"));
    assert_eq!(report.grid.unwrap().entries.len(), 3);

    let code = loadcast(&[
        "fit",
        "--input",
        &input,
        "--auto",
        "--criterion",
        "bic",
        "--log",
        "--out-dir",
        d,
    ]);
    assert_eq!(code, 0);
    let report: FitReport = round_trip(&dir.path().join("fit_report.json"));
    assert!(report.auto.is_some());
    let _: ModelArtifact = round_trip(&dir.path().join("model.json"));
}

#[test]
fn compare_writes_every_model_row() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().to_str().unwrap();
    let input = synth(dir.path());
    let code = loadcast(&[
        "compare",
        "--input",
        &input,
        "--preset",
        "paper-deficit",
        "--hidden",
        "4",
        "--epochs",
        "2",
        "--out-dir",
        d,
    ]);
    assert_eq!(code, 0);
    let report: CompareReport = round_trip(&dir.path().join("compare.json"));
    let names: Vec<&str> = report.rows.iter().map(|r| r.model.as_str()).collect();
    assert_eq!(
        names,
        ["ARIMA", "Dynamic ARIMA", "LSTM", "Naive", "SARIMA", "SES", "XGBoost"]
    );
    let table = fs::read_to_string(dir.path().join("compare.txt")).unwrap();
    assert_eq!(table.lines().filter(|l| l.starts_with("SES")).count(), 1);
}
