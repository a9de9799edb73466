use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_confgeom")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn write_dsl(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.display().to_string()
}

fn validator() -> jsonschema::Validator {
    let text = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/schema/report.schema.json")).unwrap();
    jsonschema::validator_for(&serde_json::from_str(&text).unwrap()).unwrap()
}

/// Runs with `--json <tmp>` and returns the validated report.
fn run_json(args: &[&str]) -> (Output, Value) {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("report.json");
    let mut full: Vec<&str> = args.to_vec();
    let p = path.display().to_string();
    full.extend(["--json", &p]);
    let out = run(&full);
    let report: Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    let v = validator();
    let errors: Vec<String> = v.iter_errors(&report).map(|e| e.to_string()).collect();
    assert!(errors.is_empty(), "{errors:?}");
    (out, report)
}

#[test]
fn compute_cylinder_prints_half_eigenvalues() {
    let (out, report) = run_json(&["compute", "--surface", "cmc-cylinder", "--at", "0,0"]);
    assert_eq!(code(&out), 0);
    assert!(stdout(&out).contains("eig B [-5.0000000000000000e-1, 5.0000000000000000e-1]"), "{}", stdout(&out));
    assert_eq!(report["schema_version"], "1.0.0");
    assert_eq!(report["points"][0]["second_form_eigenvalues"][1].as_f64(), Some(0.5));
}

#[test]
fn compute_on_a_grid() {
    let (out, report) = run_json(&["compute", "--surface", "sl-H1xH1", "--grid", "3"]);
    assert_eq!(code(&out), 0);
    assert_eq!(report["points"].as_array().unwrap().len(), 9);
}

#[test]
fn compute_rejects_bad_parameter() {
    let out = run(&["compute", "--surface", "sl-H1xH1", "--param", "r=1.2"]);
    assert_eq!(code(&out), 1);
    assert!(String::from_utf8_lossy(&out.stderr).contains("invalid parameter"));
}

#[test]
fn compute_umbilic_sphere_is_degenerate() {
    let dir = tempfile::tempdir().unwrap();
    let f = write_dsl(dir.path(), "sphere.dsl", "map(u, v) -> (cos(u)*cos(v), cos(u)*sin(v), sin(u)) ambient R 3 0\n");
    let out = run(&["compute", "--file", &f, "--at", "0,0"]);
    assert_eq!(code(&out), 2);
}

#[test]
fn compute_fails_verification_at_zero_tolerance() {
    let out = run(&["compute", "--surface", "cmc-sphere-product", "--tol", "0"]);
    assert_eq!(code(&out), 3);
}

#[test]
fn classify_cylinder() {
    let (out, report) = run_json(&["classify", "--surface", "cmc-cylinder"]);
    assert_eq!(code(&out), 0);
    let first = stdout(&out).lines().next().unwrap().to_string();
    assert_eq!(first, "para-umbilical, lambda=0.125000, mu=0.500000, case=Flat");
    let c = &report["classification"];
    assert!((c["lambda"].as_f64().unwrap() - 0.125).abs() < 1e-8);
    assert!((c["mu"].as_f64().unwrap() - 0.5).abs() < 1e-8);
    assert_eq!(c["space_form_case"], "Flat");
}

#[test]
fn classify_space_like_product_is_conformal() {
    let (out, report) = run_json(&["classify", "--surface", "sl-H1xS1", "--param", "r=1"]);
    assert_eq!(code(&out), 0);
    assert_eq!(report["classification"]["conformal"], true);
}

#[test]
fn classify_graph_is_not_conformal() {
    let dir = tempfile::tempdir().unwrap();
    let f = write_dsl(dir.path(), "graph.dsl", "map(u, v) -> (u, v, u^2 + 3*v^3) ambient R 3 0\n");
    let (out, report) = run_json(&["classify", "--file", &f]);
    assert_eq!(code(&out), 0);
    assert!(stdout(&out).starts_with("not conformal"));
    assert_eq!(report["classification"]["verdict"], "not conformal");
}

#[test]
fn classify_umbilic_is_degenerate() {
    let dir = tempfile::tempdir().unwrap();
    let f = write_dsl(dir.path(), "sphere.dsl", "map(u, v) -> (cos(u)*cos(v), cos(u)*sin(v), sin(u)) ambient R 3 0\n");
    let (out, report) = run_json(&["classify", "--file", &f]);
    assert_eq!(code(&out), 2);
    assert_eq!(report["classification"]["regular"], false);
}

#[test]
fn verify_frame_ode_case_one() {
    let (out, report) = run_json(&["verify", "--suite", "frame-ode", "--case", "I", "--r", "0.6"]);
    assert_eq!(code(&out), 0, "{}", stdout(&out));
    assert_eq!(report["passed"], true);
    let err = report["residuals"]
        .as_array()
        .unwrap()
        .iter()
        .find(|r| r["name"] == "max_error")
        .and_then(|r| r["value"].as_f64())
        .unwrap();
    assert!(err < 1e-7);
}

#[test]
fn verify_frame_ode_rejects_bad_r() {
    let out = run(&["verify", "--suite", "frame-ode", "--case", "I", "--r", "1.5"]);
    assert_eq!(code(&out), 1);
}

#[test]
fn verify_identities_passes_on_catalog() {
    let (out, report) = run_json(&["verify", "--suite", "identities"]);
    assert_eq!(code(&out), 0);
    let rows = report["residuals"].as_array().unwrap();
    assert_eq!(rows.len(), 3 * 12);
    assert!(rows.iter().all(|r| r["pass"] == true));
}

#[test]
fn verify_reports_failures_with_code_three() {
    let out = run(&["verify", "--suite", "identities", "--tol", "0"]);
    assert_eq!(code(&out), 3);
    assert!(stdout(&out).contains("FAIL"));
}

#[test]
fn invariance_suite_is_reproducible() {
    let args = ["verify", "--suite", "invariance", "--samples", "4", "--seed", "7"];
    let (a, ra) = run_json(&args);
    let (_, rb) = run_json(&args);
    assert_eq!(code(&a), 0, "{}", stdout(&a));
    assert_eq!(ra["residuals"], rb["residuals"]);
}

#[test]
fn catalog_lists_entries() {
    let (out, report) = run_json(&["catalog"]);
    assert_eq!(code(&out), 0);
    assert!(report["catalog"].as_array().unwrap().len() >= 11);
    assert!(stdout(&out).lines().count() >= 11);
}

#[test]
fn catalog_shows_one_entry() {
    let out = run(&["catalog", "--name", "sl-H1xH1"]);
    assert_eq!(code(&out), 0);
    let text = stdout(&out);
    assert!(text.contains("0 < r < 1"));
    assert!(text.contains("map(u, v)"));
    assert_eq!(code(&run(&["catalog", "--name", "nosuch"])), 1);
}

#[test]
fn usage_errors_exit_one() {
    assert_eq!(code(&run(&[])), 1);
    assert_eq!(code(&run(&["compute"])), 1);
    assert_eq!(code(&run(&["compute", "--surface", "cmc-cylinder", "--at", "0,x"])), 1);
    assert_eq!(code(&run(&["compute", "--surface", "cmc-cylinder", "--at", "0,0,0"])), 1);
    assert_eq!(code(&run(&["--help"])), 0);
}

#[test]
fn json_to_stdout_round_trips() {
    let out = run(&["classify", "--surface", "cmc-h-product", "--json", "-"]);
    assert_eq!(code(&out), 0);
    let text = stdout(&out);
    let start = text.find("\n{").unwrap() + 1;
    let value: Value = serde_json::from_str(&text[start..]).unwrap();
    assert!(validator().is_valid(&value));
    let again: Value = serde_json::from_str(&serde_json::to_string(&value).unwrap()).unwrap();
    assert_eq!(again, value);
    assert_eq!(value["classification"]["space_form_case"], "Hyperbolic");
}
