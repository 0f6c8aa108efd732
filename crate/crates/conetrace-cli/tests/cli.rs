//! End-to-end checks of the binary: exit codes, output shape, determinism.

use std::path::Path;
use std::process::{Command, Output};

const SQUARE: &str =
    r#"{"type":"doubled_polygon","vertices":[[0.0,0.0],[1.0,0.0],[1.0,1.0],[0.0,1.0]]}"#;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_conetrace"))
}

fn run(args: &[&str], dir: &Path) -> Output {
    bin()
        .args(args)
        .current_dir(dir)
        .env("CONETRACE_CACHE", dir.join("cache"))
        .output()
        .expect("binary runs")
}

fn write_square(dir: &Path) {
    std::fs::write(dir.join("square.json"), SQUARE).unwrap();
}

fn parse(output: &Output) -> serde_json::Value {
    assert!(
        output.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&output.stderr)
    );
    serde_json::from_slice(&output.stdout).expect("stdout is JSON")
}

#[test]
fn dlspec_contains_edge_and_diagonal_bounces() {
    let dir = tempfile::tempdir().unwrap();
    write_square(dir.path());
    let out = run(&["dlspec", "--surface", "square.json", "--max-length", "3"], dir.path());
    let v = parse(&out);
    let lengths: Vec<f64> = v["result"]
        .as_array()
        .unwrap()
        .iter()
        .map(|e| e["length"].as_f64().unwrap())
        .collect();
    assert!(lengths.iter().any(|&l| (l - 2.0).abs() < 1e-9));
    assert!(lengths.iter().any(|&l| (l - 2.0 * 2f64.sqrt()).abs() < 1e-9));
    assert!(!v["manifest"]["id"].as_str().unwrap().is_empty());
}

#[test]
fn diffract_four_pi_value() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(
        &["diffract", "--alpha", "12.566370614359172", "--theta-in", "0", "--theta-out", "0"],
        dir.path(),
    );
    let v = parse(&out);
    let value = v["result"]["value"].as_array().unwrap();
    let re = value[0].as_f64().unwrap();
    let im = value[1].as_f64().unwrap();
    assert!(re.abs() < 1e-12);
    assert!((im + 1.0 / (4.0 * std::f64::consts::PI)).abs() < 1e-12);
}

#[test]
fn compare_missing_eigs_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    write_square(dir.path());
    let out = run(
        &["compare", "--surface", "square.json", "--eigs", "missing.txt"],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn invalid_surface_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("bad.json"), r#"{"type":"doubled_polygon"}"#).unwrap();
    let out = run(&["dlspec", "--surface", "bad.json", "--max-length", "3"], dir.path());
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn budget_abort_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    write_square(dir.path());
    let out = run(
        &[
            "dlspec", "--surface", "square.json", "--max-length", "3", "--node-budget", "5",
        ],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn unknown_flag_exits_64_with_usage() {
    let dir = tempfile::tempdir().unwrap();
    write_square(dir.path());
    let out = run(
        &["dlspec", "--surface", "square.json", "--max-length", "3", "--bogus"],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(64));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.to_lowercase().contains("usage"), "stderr: {stderr}");
    let out = run(&["not-a-subcommand"], dir.path());
    assert_eq!(out.status.code(), Some(64));
}

#[test]
fn outputs_deterministic_modulo_timestamp() {
    let dir = tempfile::tempdir().unwrap();
    write_square(dir.path());
    let args = [
        "trace", "--surface", "square.json", "--max-length", "4", "--out", "pred.json",
    ];
    run(&args, dir.path());
    let mut first: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("pred.json")).unwrap())
            .unwrap();
    run(&args, dir.path());
    let mut second: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("pred.json")).unwrap())
            .unwrap();
    // Manifest id covers inputs+parameters and must agree between runs.
    assert_eq!(first["manifest"]["id"], second["manifest"]["id"]);
    first["manifest"]["timestamp"] = serde_json::Value::Null;
    second["manifest"]["timestamp"] = serde_json::Value::Null;
    assert_eq!(first, second);
}

#[test]
fn compare_pipeline_with_csv() {
    let dir = tempfile::tempdir().unwrap();
    write_square(dir.path());
    // Exact doubled-square frequencies pi sqrt(m^2+n^2) up to 200.
    let mut freqs = Vec::new();
    for m in 0..=70i64 {
        for n in 0..=70i64 {
            let l = std::f64::consts::PI * ((m * m + n * n) as f64).sqrt();
            if l <= 200.0 {
                freqs.push(l);
                if m >= 1 && n >= 1 {
                    freqs.push(l);
                }
            }
        }
    }
    let body: String = freqs.iter().map(|f| format!("{f:.17}\n")).collect();
    std::fs::write(dir.path().join("freqs.txt"), body).unwrap();
    let out = run(
        &[
            "compare", "--surface", "square.json", "--eigs", "freqs.txt", "--sigma", "0.05",
            "--tmax", "3.0", "--out", "report.json", "--csv", "trace.csv",
        ],
        dir.path(),
    );
    assert!(out.status.success());
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("report.json")).unwrap())
            .unwrap();
    // The length-2 edge bounce must be matched.
    let matched: Vec<f64> = report["result"]["matches"]
        .as_array()
        .unwrap()
        .iter()
        .map(|m| m["predicted_location"].as_f64().unwrap())
        .collect();
    assert!(matched.iter().any(|&l| (l - 2.0).abs() < 1e-9), "{matched:?}");
    // CSV: manifest line, header, then 17-significant-digit float rows.
    let csv = std::fs::read_to_string(dir.path().join("trace.csv")).unwrap();
    let mut lines = csv.lines();
    assert!(lines.next().unwrap().starts_with("# manifest "));
    assert_eq!(lines.next().unwrap(), "t,re,im,abs");
    let row = lines.next().unwrap();
    for cell in row.split(',') {
        let v: f64 = cell.parse().unwrap();
        assert_eq!(cell, format!("{v:.16e}"), "cell {cell} not 17-digit");
    }
}

#[test]
fn bands_reports_threshold() {
    let dir = tempfile::tempdir().unwrap();
    // Two cone points at distance 1, both diffractive.
    let spec = r#"{"type":"cone_graph",
        "cone_points":[{"id":0,"circumference":12.566370614359172,"position":[0.0,0.0]},
                       {"id":1,"circumference":12.566370614359172,"position":[1.0,0.0]}],
        "segments":[{"a":0,"theta_a":0.0,"b":1,"theta_b":0.0,"length":1.0}]}"#;
    std::fs::write(dir.path().join("pair.json"), spec).unwrap();
    let out = run(
        &["bands", "--surface", "pair.json", "--epsilon", "0.05"],
        dir.path(),
    );
    let v = parse(&out);
    assert_eq!(v["result"]["rho_star"].as_f64().unwrap(), 0.5);
    assert_eq!(v["result"]["applicable"].as_bool().unwrap(), true);
}

#[test]
fn geodesics_uses_cache_dir() {
    let dir = tempfile::tempdir().unwrap();
    write_square(dir.path());
    let args = ["geodesics", "--surface", "square.json", "--max-length", "3"];
    let first = parse(&run(&args, dir.path()));
    assert!(dir.path().join("cache").is_dir(), "cache dir not created");
    let second = parse(&run(&args, dir.path()));
    assert_eq!(first["result"], second["result"]);
}
