//! Command implementations behind the CLI: simulate, criterion, kernel,
//! sweep, check. Each emits machine-parsable JSON (and CSV for trajectories);
//! exit codes classify outcomes: 0 success/Completed, 2 breaking detected,
//! 3 resolution loss or step underflow, 1 error.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde_json::json;

use crate::config::RunConfig;
use crate::diagnostics::{breaking_report, BreakingReport};
use crate::error::{invalid, Error, Result};
use crate::kernel::{kernel_norms, residual_helmholtz_kernel, KernelNorms};
use crate::model::{identity_residual, rhs_direct, rhs_nonlocal, Params, State};
use crate::output::{fmt_float, to_json_string, write_diagnostics_csv};
use crate::spectral::{Dealias, Grid, RealField};
use crate::timestepper::{integrate, RunResult, Termination};

pub fn exit_code_for(termination: Termination) -> i32 {
    match termination {
        Termination::Completed => 0,
        Termination::BreakingDetected => 2,
        Termination::ResolutionLost | Termination::StepUnderflow => 3,
    }
}

fn resolve_path(output_dir: &Path, p: &Path) -> PathBuf {
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        output_dir.join(p)
    }
}

fn norms_for(config: &RunConfig) -> Result<KernelNorms> {
    let grid = Grid::new(config.n.max(1024))?;
    kernel_norms(config.params.mu, &grid)
}

fn report_for(config: &RunConfig, u0: &RealField) -> Result<BreakingReport> {
    let norms = norms_for(config)?;
    breaking_report(u0, &config.params, &norms, config.norms_source)
}

/// Run one simulation and write the diagnostics CSV plus a JSON summary.
pub fn run_simulate(config: &RunConfig, output_dir: &Path) -> Result<i32> {
    let u0 = config.initial_field()?;
    let initial = State::new(u0.clone(), 0.0)?;
    let report = report_for(config, &u0).ok();
    let result = integrate(&initial, &config.params, &config.controls)?;
    write_run_outputs(
        config,
        &result,
        report.as_ref(),
        &resolve_path(output_dir, &config.output_csv),
        &resolve_path(output_dir, &config.output_json),
    )?;
    Ok(exit_code_for(result.termination))
}

fn write_run_outputs(
    config: &RunConfig,
    result: &RunResult,
    report: Option<&BreakingReport>,
    csv_path: &Path,
    json_path: &Path,
) -> Result<()> {
    let csv_file = fs::File::create(csv_path)
        .map_err(|e| Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", csv_path.display()))))?;
    write_diagnostics_csv(csv_file, &result.diagnostics)?;
    let summary = run_summary(config, result, report)?;
    fs::write(json_path, to_json_string(&summary))
        .map_err(|e| Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", json_path.display()))))?;
    Ok(())
}

fn run_summary(
    config: &RunConfig,
    result: &RunResult,
    report: Option<&BreakingReport>,
) -> Result<serde_json::Value> {
    Ok(json!({
        "config": serde_json::to_value(config).map_err(|e| invalid(e.to_string()))?,
        "termination": format!("{:?}", result.termination),
        "t_stop": result.t_stop,
        "breaking_report": report
            .map(|r| serde_json::to_value(r).unwrap_or(serde_json::Value::Null)),
        "final": serde_json::to_value(result.diagnostics.last())
            .map_err(|e| invalid(e.to_string()))?,
    }))
}

/// Evaluate the breaking criterion on the configured initial data.
pub fn run_criterion(config: &RunConfig, mut out: impl Write) -> Result<i32> {
    let u0 = config.initial_field()?;
    let report = report_for(config, &u0)?;
    let doc = json!({
        "config": serde_json::to_value(config).map_err(|e| invalid(e.to_string()))?,
        "breaking_report": serde_json::to_value(&report).map_err(|e| invalid(e.to_string()))?,
    });
    out.write_all(to_json_string(&doc).as_bytes())?;
    Ok(0)
}

/// Kernel norms and operator residual at a given mu and grid size.
pub fn run_kernel(mu: f64, n: usize, mut out: impl Write) -> Result<i32> {
    let grid = Grid::new(n)?;
    let norms = kernel_norms(mu, &grid)?;
    let residual = residual_helmholtz_kernel(mu, &grid)?;
    let doc = json!({
        "mu": mu,
        "n": n,
        "norms": serde_json::to_value(&norms).map_err(|e| invalid(e.to_string()))?,
        "residual": residual,
    });
    out.write_all(to_json_string(&doc).as_bytes())?;
    Ok(0)
}

/// Built-in self-test: two-form equivalence and the differentiated identity
/// on a fixed smooth fixture set.
pub fn run_check(mut out: impl Write) -> Result<i32> {
    const THRESHOLD: f64 = 1e-9;
    let grid = Grid::new(256)?;
    let fixtures: [(&str, RealField); 2] = [
        (
            "sine",
            RealField::from_fn(grid.clone(), |x| 0.1 * (2.0 * std::f64::consts::PI * x).sin()),
        ),
        (
            "three_mode",
            RealField::from_fn(grid.clone(), |x| {
                use std::f64::consts::PI;
                0.17 * (2.0 * PI * x).sin() - 0.11 * (4.0 * PI * x).cos()
                    + 0.07 * (6.0 * PI * x).sin()
            }),
        ),
    ];
    let mut entries = Vec::new();
    let mut all_ok = true;
    for &eps in &[0.1, 1.0] {
        for &mu in &[1.0, 12.0] {
            let params = Params::new(eps, mu)?;
            for (name, field) in &fixtures {
                let state = State::new(field.clone(), 0.0)?;
                let a = rhs_nonlocal(&state, &params, Dealias::TwoThirds)?;
                let b = rhs_direct(&state, &params, Dealias::TwoThirds)?;
                let two_form = a.max_abs_diff(&b);
                let identity = identity_residual(&state, &params, Dealias::TwoThirds)?;
                all_ok &= two_form <= THRESHOLD && identity <= THRESHOLD;
                entries.push(json!({
                    "epsilon": eps,
                    "mu": mu,
                    "fixture": name,
                    "two_form_residual": two_form,
                    "identity_residual": identity,
                }));
            }
        }
    }
    let doc = json!({
        "threshold": THRESHOLD,
        "checks": entries,
        "all_passed": all_ok,
    });
    out.write_all(to_json_string(&doc).as_bytes())?;
    Ok(if all_ok { 0 } else { 3 })
}

/// One row of the sweep index.
#[derive(Clone, Debug)]
struct SweepRow {
    value: f64,
    termination: String,
    t_stop: f64,
    criterion_satisfied: Option<bool>,
    t_lower: f64,
    t_upper: f64,
}

fn apply_axis(config: &RunConfig, axis: &str, value: f64) -> Result<RunConfig> {
    let mut cfg = config.clone();
    match axis {
        "epsilon" => cfg.params = Params::new(value, cfg.params.mu)?,
        "mu" => cfg.params = Params::new(cfg.params.epsilon, value)?,
        "ic.amplitude" => {
            use crate::config::InitialCondition::*;
            match &mut cfg.ic {
                Sine { amplitude, .. }
                | Multisine { amplitude, .. }
                | Bump { amplitude, .. }
                | Fourier { amplitude, .. } => *amplitude = value,
            }
        }
        other => {
            return Err(invalid(format!(
                "sweep axis {other:?} is not one of epsilon, mu, ic.amplitude"
            )))
        }
    }
    Ok(cfg)
}

fn sweep_one(config: &RunConfig, axis: &str, value: f64, output_dir: &Path, idx: usize) -> SweepRow {
    let run = || -> Result<SweepRow> {
        let cfg = apply_axis(config, axis, value)?;
        let u0 = cfg.initial_field()?;
        let report = report_for(&cfg, &u0).ok();
        let initial = State::new(u0, 0.0)?;
        let result = integrate(&initial, &cfg.params, &cfg.controls)?;
        let json_path = output_dir.join(format!("sweep_{idx:04}.json"));
        let csv_path = output_dir.join(format!("sweep_{idx:04}.csv"));
        write_run_outputs(&cfg, &result, report.as_ref(), &csv_path, &json_path)?;
        Ok(SweepRow {
            value,
            termination: format!("{:?}", result.termination),
            t_stop: result.t_stop,
            criterion_satisfied: report.as_ref().map(|r| r.criterion_satisfied),
            t_lower: report.as_ref().map(|r| r.t_lower).unwrap_or(f64::NAN),
            t_upper: report.as_ref().map(|r| r.t_upper).unwrap_or(f64::NAN),
        })
    };
    run().unwrap_or_else(|e| SweepRow {
        value,
        termination: format!("Error({e})"),
        t_stop: f64::NAN,
        criterion_satisfied: None,
        t_lower: f64::NAN,
        t_upper: f64::NAN,
    })
}

/// Sweep one parameter axis over a list of values. Independent runs execute
/// on a bounded worker pool; the index CSV keeps input order.
pub fn run_sweep(
    config: &RunConfig,
    axis: &str,
    values: &[f64],
    workers: usize,
    output_dir: &Path,
) -> Result<i32> {
    if values.is_empty() {
        return Err(invalid("sweep values list is empty"));
    }
    if !values.iter().all(|v| v.is_finite()) {
        return Err(invalid("sweep values must all be finite"));
    }
    apply_axis(config, axis, values[0])?; // validate the axis name up front
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| invalid(format!("worker pool: {e}")))?;
    let rows: Vec<SweepRow> = pool.install(|| {
        use rayon::prelude::*;
        values
            .par_iter()
            .enumerate()
            .map(|(i, &v)| sweep_one(config, axis, v, output_dir, i))
            .collect()
    });
    let mut csv = String::from("value,termination,t_stop,criterion_satisfied,t_lower,t_upper\n");
    for r in &rows {
        let crit = match r.criterion_satisfied {
            Some(b) => b.to_string(),
            None => "unknown".into(),
        };
        csv.push_str(&format!(
            "{},{},{},{},{},{}\n",
            fmt_float(r.value),
            r.termination,
            fmt_float(r.t_stop),
            crit,
            fmt_float(r.t_lower),
            fmt_float(r.t_upper),
        ));
    }
    fs::write(output_dir.join("sweep_index.csv"), csv)?;
    Ok(0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::parse_config;

    const SMALL: &str = r#"
epsilon = 0.1
mu = 1.0
t_end = 0.2
n = 128
sample_interval = 0.05
ic.kind = "sine"
ic.amplitude = 0.01
ic.mode = 1
"#;

    #[test]
    fn simulate_small_run_completes() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = parse_config(SMALL, &[]).unwrap();
        let code = run_simulate(&cfg, dir.path()).unwrap();
        assert_eq!(code, 0);
        let csv = fs::read_to_string(dir.path().join("output.csv")).unwrap();
        assert_eq!(csv.lines().count(), 6); // header + 5 samples (t=0..0.2)
        let json: serde_json::Value =
            serde_json::from_str(&fs::read_to_string(dir.path().join("output.json")).unwrap())
                .unwrap();
        assert_eq!(json["termination"], "Completed");
        assert!(json["breaking_report"]["criterion_satisfied"].is_boolean());
        assert!(json["config"]["params"]["epsilon"].as_f64().unwrap() == 0.1);
    }

    #[test]
    fn simulate_unwritable_path_errors() {
        let cfg = parse_config(SMALL, &[]).unwrap();
        let err = run_simulate(&cfg, Path::new("/nonexistent-dir-for-sure"));
        assert!(err.is_err());
    }

    #[test]
    fn criterion_rejects_zero_profile() {
        let cfg = parse_config(&SMALL.replace("ic.amplitude = 0.01", "ic.amplitude = 0.0"), &[]);
        // amplitude 0 is rejected at config time
        assert!(cfg.is_err());
    }

    #[test]
    fn kernel_command_emits_norms() {
        let mut buf = Vec::new();
        let code = run_kernel(3.0, 1024, &mut buf).unwrap();
        assert_eq!(code, 0);
        let doc: serde_json::Value = serde_json::from_slice(&buf).unwrap();
        let ninf = doc["norms"]["ninf_numeric"].as_f64().unwrap();
        assert!((ninf - 1.313035).abs() < 1e-5);
        assert!(doc["residual"].as_f64().unwrap() <= 1e-10);
    }

    #[test]
    fn check_command_passes() {
        let mut buf = Vec::new();
        let code = run_check(&mut buf).unwrap();
        assert_eq!(code, 0);
        let doc: serde_json::Value = serde_json::from_slice(&buf).unwrap();
        assert_eq!(doc["all_passed"], true);
    }

    #[test]
    fn sweep_rows_keep_input_order_and_are_deterministic() {
        let dir1 = tempfile::tempdir().unwrap();
        let dir2 = tempfile::tempdir().unwrap();
        let cfg = parse_config(SMALL, &[]).unwrap();
        let values = [0.02, 0.01, 0.03];
        run_sweep(&cfg, "ic.amplitude", &values, 1, dir1.path()).unwrap();
        run_sweep(&cfg, "ic.amplitude", &values, 4, dir2.path()).unwrap();
        let a = fs::read_to_string(dir1.path().join("sweep_index.csv")).unwrap();
        let b = fs::read_to_string(dir2.path().join("sweep_index.csv")).unwrap();
        assert_eq!(a, b);
        let second_row = a.lines().nth(1).unwrap();
        assert!(second_row.starts_with("2.0000000000000000e-2,"));
    }

    #[test]
    fn sweep_rejects_empty_values_and_bad_axis() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = parse_config(SMALL, &[]).unwrap();
        assert!(run_sweep(&cfg, "epsilon", &[], 1, dir.path()).is_err());
        assert!(run_sweep(&cfg, "bogus", &[0.1], 1, dir.path()).is_err());
    }
}
