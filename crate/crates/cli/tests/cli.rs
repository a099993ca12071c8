//! End-to-end checks of the `splitkit` binary: exit codes, file outputs and
//! determinism.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn splitkit(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_splitkit"))
        .args(args)
        .current_dir(cwd)
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn write(dir: &TempDir, name: &str, text: &str) -> PathBuf {
    let path = dir.path().join(name);
    std::fs::write(&path, text).unwrap();
    path
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn export_preset(dir: &TempDir, kind: &str) -> PathBuf {
    let out = splitkit(
        &["preset", kind, "--sigma", "1,0.5", "--lip", "2", "-o", "design.json"],
        dir.path(),
    );
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    dir.path().join("design.json")
}

// ---------------------------------------------------------------- validate

#[test]
fn exported_presets_validate() {
    for kind in ["dfbr", "pdyr", "sdyr"] {
        let dir = TempDir::new().unwrap();
        let path = export_preset(&dir, kind);
        let out = splitkit(&["validate", path.to_str().unwrap()], dir.path());
        assert_eq!(code(&out), 0, "{}: {}", kind, stdout(&out));
        assert_eq!(stdout(&out).matches("PASS").count(), 3);
    }
}

#[test]
fn broken_column_sum_is_named() {
    let dir = TempDir::new().unwrap();
    let path = export_preset(&dir, "dfbr");
    let mut design = read_json(&path);
    design["H"][2][1] = Value::from(design["H"][2][1].as_f64().unwrap() + 0.25);
    std::fs::write(&path, design.to_string()).unwrap();
    let out = splitkit(&["validate", "design.json"], dir.path());
    assert_eq!(code(&out), 1);
    assert!(stdout(&out).contains("column 2 of H sums to"), "{}", stdout(&out));
}

#[test]
fn command_line_constants_override_the_file() {
    let dir = TempDir::new().unwrap();
    export_preset(&dir, "sdyr");
    // Much weaker cocoercivity breaks the PSD certificate.
    let out = splitkit(
        &["validate", "design.json", "--sigma", "0.01,0.01", "--lip", "2"],
        dir.path(),
    );
    assert_eq!(code(&out), 1);
    assert!(stdout(&out).contains("(c) psd:               FAIL"));
}

#[test]
fn malformed_design_is_an_input_error() {
    let dir = TempDir::new().unwrap();
    write(&dir, "bad.json", "{\n  \"n\": 3,\n  \"m\": oops\n}");
    let out = splitkit(&["validate", "bad.json"], dir.path());
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 3"));

    let out = splitkit(&["validate", "absent.json"], dir.path());
    assert_eq!(code(&out), 2);
}

// --------------------------------------------------------------------- run

const GAME: &str = r#"{
  "family": "game", "n": 4, "m": 2, "l": 2, "d": 3, "seed": 7,
  "distribution": "uniform", "method": "crfb",
  "max_iter": 4000, "tol": 1e-8, "metric": "gap", "metric_every": 25,
  "trace": "trace.csv", "summary": "summary.json"
}"#;

#[test]
fn run_writes_deterministic_outputs() {
    let dir = TempDir::new().unwrap();
    write(&dir, "game.json", GAME);
    let first = splitkit(&["run", "game.json"], dir.path());
    assert_eq!(code(&first), 0, "{}", String::from_utf8_lossy(&first.stderr));
    let trace = std::fs::read(dir.path().join("trace.csv")).unwrap();
    let summary = read_json(&dir.path().join("summary.json"));
    assert_eq!(summary["converged"], Value::Bool(true));
    assert!(summary["final_metric"].as_f64().unwrap() < 1e-5);

    let second = splitkit(&["run", "game.json"], dir.path());
    assert_eq!(code(&second), 0);
    assert_eq!(std::fs::read(dir.path().join("trace.csv")).unwrap(), trace);
}

#[test]
fn run_without_convergence_exits_one_and_keeps_summary() {
    let dir = TempDir::new().unwrap();
    write(
        &dir,
        "game.json",
        &GAME.replace("\"max_iter\": 4000", "\"max_iter\": 5"),
    );
    let out = splitkit(&["run", "game.json"], dir.path());
    assert_eq!(code(&out), 1);
    let summary = read_json(&dir.path().join("summary.json"));
    assert_eq!(summary["iterations"], Value::from(5));
    assert_eq!(summary["converged"], Value::Bool(false));
}

#[test]
fn run_with_missing_design_is_an_input_error() {
    let dir = TempDir::new().unwrap();
    write(
        &dir,
        "game.json",
        &GAME.replace(
            "\"method\": \"crfb\"",
            "\"method\": \"file\", \"design\": \"nowhere.json\"",
        ),
    );
    let out = splitkit(&["run", "game.json"], dir.path());
    assert_eq!(code(&out), 2);
}

#[test]
fn run_rejects_unknown_fields() {
    let dir = TempDir::new().unwrap();
    write(&dir, "game.json", &GAME.replace("\"seed\"", "\"sede\""));
    assert_eq!(code(&splitkit(&["run", "game.json"], dir.path())), 2);
}

#[test]
fn run_refuses_an_uncertified_design() {
    // A unit-constant preset is far too aggressive for a game with ±10 payoffs.
    let dir = TempDir::new().unwrap();
    let out = splitkit(
        &["preset", "dfbr", "--sigma", "1,1", "--lip", "1", "-o", "d.json"],
        dir.path(),
    );
    assert_eq!(code(&out), 0);
    write(
        &dir,
        "game.json",
        r#"{"family": "game", "n": 3, "m": 2, "l": 1, "d": 3, "seed": 7,
            "distribution": "uniform", "method": "file", "design": "d.json"}"#,
    );
    let out = splitkit(&["run", "game.json"], dir.path());
    assert_eq!(code(&out), 1);
    assert!(String::from_utf8_lossy(&out.stderr).contains("psd:               FAIL"));
}

// ------------------------------------------------------------------ select

#[test]
fn selected_design_validates() {
    let dir = TempDir::new().unwrap();
    write(&dir, "p.json", r#"{"hg": [0, 1, 2], "e": [0, 1, 1], "f": [0, 0, 1]}"#);
    let out = splitkit(
        &["select", "p.json", "--sigma", "1,1", "--lip", "1", "-o", "d.json"],
        dir.path(),
    );
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let design = read_json(&dir.path().join("d.json"));
    assert!(design.get("M").is_none());
    assert!(design.get("laplacian").is_some());
    let out = splitkit(&["validate", "d.json"], dir.path());
    assert_eq!(code(&out), 0, "{}", stdout(&out));
}

#[test]
fn forced_pattern_gives_the_unique_coupling() {
    // Two rows, one cocoercive term: H must be e₂ and G must be e₁ᵀ, so
    // ‖Υ‖₂ = ‖(e₂ − e₁)/√(2σ)‖ = 1/√2 at σ = 2.
    let dir = TempDir::new().unwrap();
    write(&dir, "p.json", r#"{"hg": [0, 1], "e": [0, 0], "f": [0, 0]}"#);
    let out = splitkit(&["select", "p.json", "--sigma", "2", "-o", "d.json"], dir.path());
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8_lossy(&out.stderr).contains("‖Υ‖₂ = 0.707107"));
    let design = read_json(&dir.path().join("d.json"));
    assert_eq!(design["H"], serde_json::json!([[0.0], [1.0]]));
    assert_eq!(design["G"], serde_json::json!([[1.0, 0.0]]));
    assert_eq!(code(&splitkit(&["validate", "d.json"], dir.path())), 0);
}

#[test]
fn selection_is_reproducible() {
    let dir = TempDir::new().unwrap();
    write(
        &dir,
        "p.json",
        r#"{"hg": [0, 1, 2, 3], "e": [0, 1, 2, 2], "f": [0, 0, 1, 2]}"#,
    );
    let args = [
        "select", "p.json", "--sigma", "1,2,0.5", "--lip", "1,3", "--iters", "500",
    ];
    let a = splitkit(&args, dir.path());
    let b = splitkit(&args, dir.path());
    assert_eq!(code(&a), 0);
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn infeasible_pattern_exits_one() {
    let dir = TempDir::new().unwrap();
    write(&dir, "p.json", r#"{"hg": [0, 1], "e": [0, 1], "f": [0, 1]}"#);
    let out = splitkit(&["select", "p.json", "--sigma", "1", "--lip", "1"], dir.path());
    assert_eq!(code(&out), 1);
}

// ------------------------------------------------------------------- bench

#[test]
fn single_method_bench_has_one_column() {
    let dir = TempDir::new().unwrap();
    write(
        &dir,
        "suite.json",
        r#"{"n": 4, "d": 2, "settings": ["normal"], "epsilons": [1e-2, 1e-300],
            "methods": ["sdyr"], "seeds": [0], "max_iter": 300}"#,
    );
    let out = splitkit(&["bench", "suite.json", "-o", "table.csv"], dir.path());
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(dir.path().join("table.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "setting,epsilon,sdyr");
    assert!(lines[1].starts_with("normal,1e-2,"));
    assert!(lines[1].split(',').nth(2).unwrap().parse::<usize>().is_ok());
    assert_eq!(lines[2], "normal,1e-300,DNF");
}
