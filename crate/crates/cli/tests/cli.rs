use std::f64::consts::PI;
use std::process::{Command, Output};

use serde_json::Value;

const GRID: &str = "513";

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_plasma-branch"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn json(o: &Output) -> Value {
    serde_json::from_slice(&o.stdout).expect("valid json")
}

fn field(v: &Value, k: &str) -> f64 {
    v[k].as_f64()
        .unwrap_or_else(|| panic!("{k} missing in {v}"))
}

#[test]
fn trace_csv_table() {
    let o = run(&["trace", "--grid-n", GRID]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let text = stdout(&o);
    let mut rd = csv::Reader::from_reader(text.as_bytes());
    let header: Vec<String> = rd.headers().unwrap().iter().map(String::from).collect();
    assert_eq!(
        header,
        ["lambda", "R", "r_lambda", "gamma", "alpha", "mu", "E", "sigma1", "nu1", "regime"]
    );
    let rows: Vec<csv::StringRecord> = rd.records().map(|r| r.unwrap()).collect();
    assert_eq!(rows.len(), 200);
    assert_eq!(&rows[0][1], "inf");
    let alpha0: f64 = rows[0][4].parse().unwrap();
    assert_eq!(alpha0, 1.0);
    let lambdas: Vec<f64> = rows.iter().map(|r| r[0].parse().unwrap()).collect();
    assert!(lambdas.windows(2).all(|w| w[1] > w[0]));
    assert!(rows.iter().any(|r| &r[9] == "free_boundary"));
    // spectral columns only in the positive regime
    for r in &rows {
        if &r[9] == "free_boundary" {
            assert!(r[7].is_empty() && r[8].is_empty());
        }
    }
}

#[test]
fn trace_json_document() {
    let o = run(&[
        "trace",
        "--grid-n",
        GRID,
        "--samples",
        "20",
        "--format",
        "json",
    ]);
    assert_eq!(code(&o), 0);
    let v = json(&o);
    let rows = v["rows"].as_array().unwrap();
    assert_eq!(rows.len(), 20);
    assert!(rows[0]["R"].is_null());
    assert_eq!(field(&rows[0], "alpha"), 1.0);
    assert!(field(&v["summary"], "lambda_plus") > 0.0);
}

#[test]
fn trace_writes_to_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("t.csv");
    let o = run(&[
        "trace",
        "--grid-n",
        GRID,
        "--samples",
        "10",
        "--out",
        path.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0);
    assert!(o.stdout.is_empty());
    let text = std::fs::read_to_string(&path).unwrap();
    assert_eq!(text.lines().count(), 11);
}

#[test]
fn bell_summary() {
    let o = run(&["bell", "--grid-n", GRID, "--format", "json"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let v = json(&o);
    let s = &v["summary"];
    let (lt, lp) = (field(s, "lambda_t"), field(s, "lambda_plus"));
    assert!(0.0 < lt && lt < lp);
    assert!((field(s, "E_inf") - 3.0 / (16.0 * PI)).abs() < 1e-6);
    let mus: Vec<f64> = v["rows"]
        .as_array()
        .unwrap()
        .iter()
        .map(|r| field(r, "mu"))
        .collect();
    let top = mus.iter().cloned().fold(0.0, f64::max);
    assert!(mus[0] < 1e-6 * top);
    assert!(*mus.last().unwrap() < 1e-6 * top);
}

#[test]
fn bell_csv_carries_summary_comments() {
    let o = run(&["bell", "--grid-n", GRID]);
    assert_eq!(code(&o), 0);
    let text = stdout(&o);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "lambda,mu,E");
    assert_eq!(lines.iter().filter(|l| l.starts_with('#')).count(), 2);
    assert_eq!(lines.len(), 1 + 200 + 2);
}

#[test]
fn bell_rejects_other_factors() {
    assert_eq!(
        code(&run(&[
            "bell",
            "--grid-n",
            GRID,
            "--lambda-max-factor",
            "2"
        ])),
        2
    );
}

#[test]
fn verify_default_pair_passes() {
    let o = run(&["verify"]);
    let text = stdout(&o);
    assert_eq!(code(&o), 0, "{text}");
    assert!(text.lines().all(|l| !l.starts_with("FAIL")));
}

#[test]
fn verify_three_dimensions_passes() {
    let o = run(&["verify", "--dim", "3", "--p", "2"]);
    assert_eq!(code(&o), 0, "{}", stdout(&o));
}

#[test]
fn verify_names_failures_on_a_corrupted_profile() {
    let o = run(&["verify", "--grid-n", GRID, "--corrupt-profile", "1.001"]);
    assert_eq!(code(&o), 1);
    assert!(stdout(&o).contains("FAIL lane_emden.pohozaev"));
    assert!(String::from_utf8_lossy(&o.stderr).contains("lane_emden.pohozaev"));
}

#[test]
fn sobolev_values() {
    let o = run(&["sobolev", "--format", "json"]);
    assert_eq!(code(&o), 0);
    let v = json(&o);
    // first Dirichlet eigenvalue of the unit-area disk: π j₀₁²
    let j01 = 2.404_825_557_695_773;
    assert!((field(&v, "Lambda_t") - PI * j01 * j01).abs() < 1e-3);
    assert!(
        (field(&v, "lambda1") - field(&v, "lambda_plus")).abs() < 1e-5 * field(&v, "lambda_plus")
    );
    assert!(field(&v, "lambda0") < field(&v, "lambda_plus"));
}

#[test]
fn sobolev_rejects_supercritical_t() {
    assert_eq!(code(&run(&["sobolev", "--dim", "3", "--t", "6"])), 2);
}

#[test]
fn invalid_configurations_exit_two() {
    for args in [
        &["trace", "--p", "1"][..],
        &["trace", "--dim", "3", "--p", "3"],
        &["trace", "--dim", "1"],
        &["trace", "--grid-n", "512"],
        &["trace", "--grid-n", "65"],
        &["trace", "--samples", "3"],
        &["trace", "--lambda-max-factor", "-1"],
        &["verify", "--tol", "no.such.check=1"],
        &["verify", "--tol", "solver.order"],
        &["trace", "--format", "xml"],
        &["nonsense"],
    ] {
        let o = run(args);
        assert_eq!(code(&o), 2, "{args:?}");
        assert!(!o.stderr.is_empty());
    }
}

#[test]
fn numerical_failure_exits_three() {
    let o = run(&["trace", "--dim", "2", "--p", "40", "--grid-n", "129"]);
    assert_eq!(code(&o), 3);
}

#[test]
fn output_is_deterministic() {
    let args = ["trace", "--grid-n", GRID, "--samples", "40"];
    assert_eq!(run(&args).stdout, run(&args).stdout);
}

#[test]
fn help_exits_zero() {
    assert_eq!(code(&run(&["--help"])), 0);
}
