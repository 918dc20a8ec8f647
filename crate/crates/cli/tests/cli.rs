//! End-to-end tests against the compiled binary.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_waveparticle"))
}

fn write(dir: &TempDir, name: &str, text: &str) -> PathBuf {
    let path = dir.path().join(name);
    fs::write(&path, text).unwrap();
    path
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

const MZ_SETUP2: &str = r#"{"kind":"mach_zehnder","setup":2,"trials":10000,"seed":42}"#;

#[test]
fn simulate_writes_results_with_an_exactly_dark_port() {
    let dir = TempDir::new().unwrap();
    let scenario = write(&dir, "mz.json", MZ_SETUP2);
    let out = dir.path().join("results.json");
    let output = run(&["simulate", path_str(&scenario), "--out", path_str(&out)]);
    assert!(output.status.success(), "{}", String::from_utf8_lossy(&output.stderr));
    let value: serde_json::Value = serde_json::from_str(&fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(value["detector_counts"]["det1"], 0);
    assert_eq!(value["detector_counts"]["det2"], 10_000);
    assert_eq!(value["seed"], 42);
    // success leaves no temp file behind
    assert!(!dir.path().join("results.json.tmp").exists());
}

#[test]
fn missing_scenario_file_exits_two() {
    let output = run(&["simulate", "/nonexistent/scenario.json"]);
    assert_eq!(output.status.code(), Some(2));
    assert!(!output.stderr.is_empty());
}

#[test]
fn malformed_json_exits_one() {
    let dir = TempDir::new().unwrap();
    let scenario = write(&dir, "broken.json", "{not json");
    let output = run(&["simulate", path_str(&scenario)]);
    assert_eq!(output.status.code(), Some(1));
}

#[test]
fn unknown_key_exits_one_with_the_field_path() {
    let dir = TempDir::new().unwrap();
    let scenario = write(
        &dir,
        "extra.json",
        r#"{"kind":"mach_zehnder","setup":2,"detector_gain":3,"trials":10,"seed":1}"#,
    );
    let output = run(&["simulate", path_str(&scenario)]);
    assert_eq!(output.status.code(), Some(1));
    let stderr = String::from_utf8_lossy(&output.stderr);
    assert!(stderr.contains("detector_gain"), "stderr: {stderr}");
}

#[test]
fn report_emits_the_documented_csv_header() {
    let dir = TempDir::new().unwrap();
    let scenario = write(&dir, "mz.json", MZ_SETUP2);
    let out = dir.path().join("results.json");
    assert!(run(&["simulate", path_str(&scenario), "--out", path_str(&out)]).status.success());
    let output = run(&["report", path_str(&out), "--format", "csv"]);
    assert!(output.status.success());
    let stdout = String::from_utf8(output.stdout).unwrap();
    assert_eq!(stdout.lines().next(), Some("phase_rad,det1_count,det2_count,visibility"));
}

#[test]
fn histogram_report_emits_bin_columns() {
    let dir = TempDir::new().unwrap();
    let scenario = write(
        &dir,
        "slit.json",
        r#"{"kind":"double_slit","slit_centers":[-5e-5,5e-5],"slit_width":1e-5,
            "open":[true,true],"wavelength":6.33e-7,"distance":1.0,
            "screen_halfwidth":0.025,"grid_points":256,"trials":1000,"seed":3}"#,
    );
    let out = dir.path().join("results.json");
    assert!(run(&["simulate", path_str(&scenario), "--out", path_str(&out)]).status.success());
    let output = run(&["report", path_str(&out), "--format", "csv"]);
    assert!(output.status.success());
    let stdout = String::from_utf8(output.stdout).unwrap();
    assert_eq!(stdout.lines().next(), Some("bin_left_m,bin_right_m,count,pdf_value"));
    assert_eq!(stdout.lines().count(), 257);
}

#[test]
fn repeated_runs_are_identical_apart_from_the_timestamp() {
    let dir = TempDir::new().unwrap();
    let scenario = write(&dir, "mz.json", MZ_SETUP2);
    let out_a = dir.path().join("a.json");
    let out_b = dir.path().join("b.json");
    for (out, trials) in [(&out_a, "500"), (&out_b, "500")] {
        let output = run(&[
            "simulate",
            path_str(&scenario),
            "--out",
            path_str(out),
            "--trials",
            trials,
            "--keep-records",
        ]);
        assert!(output.status.success());
    }
    let mut a: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(&out_a).unwrap()).unwrap();
    let mut b: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(&out_b).unwrap()).unwrap();
    assert!(a["timestamp"].is_string());
    a["timestamp"] = serde_json::Value::Null;
    b["timestamp"] = serde_json::Value::Null;
    assert_eq!(a, b);
    assert_eq!(a["trials"], 500);
    assert_eq!(a["records"].as_array().unwrap().len(), 500);
}

#[test]
fn trials_override_must_satisfy_scenario_invariants() {
    let dir = TempDir::new().unwrap();
    let scenario = write(
        &dir,
        "beams.json",
        r#"{"kind":"independent_beams","angle":1e-3,"wavelength":6.33e-7,
            "photons_per_trial":100,"n_trial_groups":10,"trials":1000,"seed":1}"#,
    );
    let ok = run(&["simulate", path_str(&scenario), "--out", path_str(&dir.path().join("r.json"))]);
    assert!(ok.status.success());
    let bad = run(&["simulate", path_str(&scenario), "--trials", "999"]);
    assert_eq!(bad.status.code(), Some(1));
}

#[test]
fn oracle_prints_the_closed_form_prediction() {
    let dir = TempDir::new().unwrap();
    let scenario = write(&dir, "mz.json", MZ_SETUP2);
    let output = run(&["oracle", path_str(&scenario)]);
    assert!(output.status.success());
    let stdout = String::from_utf8(output.stdout).unwrap();
    assert!(stdout.contains("P(det1) = 0.0"), "stdout: {stdout}");
    assert!(stdout.contains("P(det2) = 1.0"), "stdout: {stdout}");
}

#[test]
fn report_on_a_directory_exits_two() {
    let dir = TempDir::new().unwrap();
    let output = run(&["report", path_str(dir.path())]);
    assert_eq!(output.status.code(), Some(2));
}
