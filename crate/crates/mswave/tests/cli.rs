//! End-to-end tests of the command-line interface: exit-code taxonomy,
//! output file formats, and sweep determinism.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_mswave"))
}

fn write_config(dir: &Path, body: &str) -> std::path::PathBuf {
    let path = dir.join("run.toml");
    fs::write(&path, body).unwrap();
    path
}

const SMALL: &str = r#"
epsilon = 0.1
mu = 1.0
t_end = 10.0
n = 256
rel_tol = 1e-10
ic.kind = "sine"
ic.amplitude = 0.01
ic.mode = 1
"#;

fn run_ok(out: &Output) -> i32 {
    out.status.code().expect("process exited with a signal")
}

#[test]
fn simulate_small_run_exits_zero_with_1001_rows() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL);
    let out = bin()
        .args(["simulate", "--config"])
        .arg(&cfg)
        .arg("--output-dir")
        .arg(dir.path())
        .output()
        .unwrap();
    assert_eq!(run_ok(&out), 0, "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let csv = fs::read_to_string(dir.path().join("output.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    // header + samples at t = 0, 0.01, ..., 10
    assert_eq!(lines.len(), 1002);
    assert!(lines[0].starts_with("t,energy_e,functional_h,slope_sup"));
    assert!(!csv.contains('\r'));
    let summary: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("output.json")).unwrap()).unwrap();
    assert_eq!(summary["termination"], "Completed");
    assert_eq!(summary["config"]["params"]["mu"], 1.0);
    assert_eq!(summary["breaking_report"]["criterion_satisfied"], false);
}

#[test]
fn simulate_breaking_fixture_exits_two_within_window() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        r#"
epsilon = 0.1
mu = 0.5
t_end = 0.021
n = 4096
s_max = 1100.0
sample_interval = 2e-4
ic.kind = "bump"
ic.amplitude = 1.5
ic.width = 0.002
"#,
    );
    let out = bin()
        .args(["simulate", "--config"])
        .arg(&cfg)
        .arg("--output-dir")
        .arg(dir.path())
        .output()
        .unwrap();
    assert_eq!(run_ok(&out), 2, "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let summary: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("output.json")).unwrap()).unwrap();
    assert_eq!(summary["termination"], "BreakingDetected");
    let report = &summary["breaking_report"];
    assert_eq!(report["criterion_satisfied"], true);
    let t_stop = summary["t_stop"].as_f64().unwrap();
    let t_lower = report["t_lower"].as_f64().unwrap();
    let t_upper = report["t_upper"].as_f64().unwrap();
    assert!(t_stop >= 0.5 * t_lower && t_stop <= t_upper, "t_stop = {t_stop}");
}

#[test]
fn simulate_unwritable_output_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL);
    let out = bin()
        .args(["simulate", "--config"])
        .arg(&cfg)
        .args(["--output-dir", "/nonexistent-dir-for-sure"])
        .output()
        .unwrap();
    assert_eq!(run_ok(&out), 1);
    assert!(!out.stderr.is_empty());
}

#[test]
fn bad_config_exits_one_naming_the_field() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), &SMALL.replace("epsilon = 0.1", "epsilon = -1.0"));
    let out = bin()
        .args(["simulate", "--config"])
        .arg(&cfg)
        .arg("--output-dir")
        .arg(dir.path())
        .output()
        .unwrap();
    assert_eq!(run_ok(&out), 1);
    assert!(String::from_utf8_lossy(&out.stderr).contains("epsilon"));
}

#[test]
fn set_overrides_win_over_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL);
    let out = bin()
        .args(["criterion", "--config"])
        .arg(&cfg)
        .args(["--set", "epsilon=0.25", "--set", "ic.amplitude=0.02"])
        .output()
        .unwrap();
    assert_eq!(run_ok(&out), 0);
    let doc: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(doc["config"]["params"]["epsilon"], 0.25);
}

#[test]
fn criterion_zero_profile_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        r#"
epsilon = 0.1
mu = 1.0
t_end = 1.0
ic.kind = "multisine"
ic.coefficients = []
"#,
    );
    let out = bin().args(["criterion", "--config"]).arg(&cfg).output().unwrap();
    assert_eq!(run_ok(&out), 1);
}

#[test]
fn kernel_reports_closed_form_sup_norm() {
    let out = bin().args(["kernel", "--mu", "3.0", "--n", "1024"]).output().unwrap();
    assert_eq!(run_ok(&out), 0);
    let doc: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let ninf = doc["norms"]["ninf_numeric"].as_f64().unwrap();
    let coth1 = 1.0f64 / 1.0f64.tanh();
    assert!((ninf - coth1).abs() / coth1 < 1e-6);
    // Stable lexicographic key order in the document.
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.find("\"mu\"").unwrap() < text.find("\"n\"").unwrap());
}

#[test]
fn check_self_test_passes() {
    let out = bin().arg("check").output().unwrap();
    assert_eq!(run_ok(&out), 0, "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let doc: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(doc["all_passed"], true);
}

#[test]
fn amplitude_sweep_is_monotone_and_deterministic() {
    let base = r#"
epsilon = 0.1
mu = 1.0
t_end = 0.05
n = 2048
sample_interval = 0.01
ic.kind = "bump"
ic.amplitude = 1.0
ic.width = 0.002
"#;
    let run_sweep = |workers: &str| -> (tempfile::TempDir, String) {
        let dir = tempfile::tempdir().unwrap();
        let cfg = write_config(dir.path(), base);
        let out = bin()
            .args(["sweep", "--config"])
            .arg(&cfg)
            .args(["--axis", "ic.amplitude", "--values", "0.01,0.1,1.0", "--workers", workers])
            .arg("--output-dir")
            .arg(dir.path())
            .output()
            .unwrap();
        assert_eq!(run_ok(&out), 0, "stderr: {}", String::from_utf8_lossy(&out.stderr));
        let index = fs::read_to_string(dir.path().join("sweep_index.csv")).unwrap();
        (dir, index)
    };
    let (_d1, a) = run_sweep("1");
    let (_d2, b) = run_sweep("3");
    assert_eq!(a, b);
    let rows: Vec<&str> = a.lines().collect();
    assert_eq!(rows.len(), 4);
    assert_eq!(rows[0], "value,termination,t_stop,criterion_satisfied,t_lower,t_upper");
    let satisfied: Vec<&str> = rows[1..]
        .iter()
        .map(|r| r.split(',').nth(3).unwrap())
        .collect();
    assert_eq!(satisfied, ["false", "true", "true"]);
}

#[test]
fn sweep_empty_values_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL);
    let out = bin()
        .args(["sweep", "--config"])
        .arg(&cfg)
        .args(["--axis", "epsilon", "--values", ""])
        .arg("--output-dir")
        .arg(dir.path())
        .output()
        .unwrap();
    assert_eq!(run_ok(&out), 1);
}
