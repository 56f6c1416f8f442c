//! Adaptive explicit time integration with step-doubling error control,
//! blow-up and resolution-loss detection, and a fixed diagnostics schedule.

use serde::{Deserialize, Serialize};

use crate::diagnostics::{self, DiagnosticsRecord};
use crate::error::{invalid, Error, Result};
use crate::model::{rhs_nonlocal, Params, State};
use crate::spectral::{tail_fraction, Dealias};

/// Integration controls. Defaults follow the run-configuration defaults.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct StepControls {
    pub dt_init: f64,
    pub dt_min: f64,
    pub rel_tol: f64,
    /// Blow-up threshold on the slope supremum S(t).
    pub s_max: f64,
    /// Spectral-tail-fraction threshold for resolution loss.
    pub tail_max: f64,
    pub t_end: f64,
    pub sample_interval: f64,
    #[serde(default)]
    pub dealias: Dealias,
    /// Optional exponential spectral filter; off in all acceptance runs.
    #[serde(default)]
    pub exp_filter: bool,
}

impl StepControls {
    pub fn with_t_end(t_end: f64) -> Self {
        StepControls {
            dt_init: 1e-3,
            dt_min: 1e-12,
            rel_tol: 1e-10,
            s_max: 1e6,
            tail_max: 1e-3,
            t_end,
            sample_interval: t_end / 1000.0,
            dealias: Dealias::TwoThirds,
            exp_filter: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("dt_init", self.dt_init),
            ("dt_min", self.dt_min),
            ("rel_tol", self.rel_tol),
            ("s_max", self.s_max),
            ("tail_max", self.tail_max),
            ("t_end", self.t_end),
            ("sample_interval", self.sample_interval),
        ] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(invalid(format!("{name} = {v} must be positive and finite")));
            }
        }
        if !(self.dt_min < self.dt_init && self.dt_init <= self.t_end) {
            return Err(invalid(format!(
                "require dt_min < dt_init <= t_end (got {}, {}, {})",
                self.dt_min, self.dt_init, self.t_end
            )));
        }
        Ok(())
    }
}

/// Why an integration stopped.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Termination {
    Completed,
    BreakingDetected,
    ResolutionLost,
    StepUnderflow,
}

#[derive(Clone, Debug)]
pub struct RunResult {
    pub final_state: State,
    pub termination: Termination,
    pub t_stop: f64,
    pub diagnostics: Vec<DiagnosticsRecord>,
}

/// One classical 4-stage explicit step of the nonlocal form.
pub fn step_rk4(state: &State, dt: f64, params: &Params, rule: Dealias) -> Result<State> {
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(invalid(format!("dt = {dt} must be positive and finite")));
    }
    let u = &state.u;
    let k1 = rhs_nonlocal(state, params, rule)?;
    let s2 = State { u: u.axpy(0.5 * dt, &k1), t: state.t + 0.5 * dt };
    let k2 = rhs_nonlocal(&s2, params, rule)?;
    let s3 = State { u: u.axpy(0.5 * dt, &k2), t: state.t + 0.5 * dt };
    let k3 = rhs_nonlocal(&s3, params, rule)?;
    let s4 = State { u: u.axpy(dt, &k3), t: state.t + dt };
    let k4 = rhs_nonlocal(&s4, params, rule)?;
    let incr = k1.add(&k4).axpy(2.0, &k2).axpy(2.0, &k3);
    let next = State { u: u.axpy(dt / 6.0, &incr), t: state.t + dt };
    if next.u.is_finite() {
        Ok(next)
    } else {
        Err(Error::NumericalOverflow { t: state.t, dt })
    }
}

fn exp_filter(state: &mut State) {
    let mut hat = state.u.to_spectral();
    let kmax = (state.u.grid().n() / 2) as f64;
    let grid = hat.grid().clone();
    for (i, c) in hat.coeffs_mut().iter_mut().enumerate() {
        let r = grid.mode(i).unsigned_abs() as f64 / kmax;
        *c *= (-36.0 * r.powi(36)).exp();
    }
    state.u = hat.to_real();
}

/// Advance `initial` to `t_end` (or an earlier termination) with step-doubling
/// error control, sampling diagnostics every `sample_interval`.
pub fn integrate(initial: &State, params: &Params, controls: &StepControls) -> Result<RunResult> {
    controls.validate()?;
    if !initial.u.is_finite() {
        return Err(invalid("initial state contains non-finite values"));
    }
    let rule = controls.dealias;
    if tail_fraction(&initial.u, rule) > controls.tail_max {
        return Err(invalid(
            "initial spectral tail fraction exceeds tail_max; refine the grid",
        ));
    }

    let mut state = State { u: initial.u.clone(), t: initial.t };
    let t0 = initial.t;
    let mut records = vec![diagnostics::record(&state, params, rule)?];
    let mut sample_idx: u64 = 1;
    let mut dt = controls.dt_init;

    let finish = |state: State,
                  termination: Termination,
                  mut records: Vec<DiagnosticsRecord>,
                  params: &Params|
     -> Result<RunResult> {
        let t_stop = state.t;
        let last_t = records.last().map(|r| r.t).unwrap_or(f64::NEG_INFINITY);
        if t_stop > last_t {
            records.push(diagnostics::record(&state, params, rule)?);
        }
        Ok(RunResult { final_state: state, termination, t_stop, diagnostics: records })
    };

    loop {
        // Termination checks, in priority order, on the current state.
        if state.t >= controls.t_end - 1e-14 * controls.t_end {
            state.t = state.t.max(controls.t_end);
            return finish(state, Termination::Completed, records, params);
        }
        let (slope, _) = diagnostics::slope_sup(&state)?;
        if slope > controls.s_max {
            return finish(state, Termination::BreakingDetected, records, params);
        }
        if tail_fraction(&state.u, rule) > controls.tail_max {
            return finish(state, Termination::ResolutionLost, records, params);
        }

        // Clamp the step to the next sample time or the end time.
        let next_sample = t0 + sample_idx as f64 * controls.sample_interval;
        let t_target = next_sample.min(controls.t_end);
        let dt_eff = dt.min(t_target - state.t).max(0.0);
        if dt_eff <= 0.0 {
            // Sample boundary already reached by snapping.
            if records.last().map_or(true, |r| r.t < state.t) {
                records.push(diagnostics::record(&state, params, rule)?);
            }
            sample_idx += 1;
            continue;
        }

        // Step doubling: one full step vs two half steps.
        let trial = (|| -> Result<(State, f64)> {
            let full = step_rk4(&state, dt_eff, params, rule)?;
            let half = step_rk4(&state, 0.5 * dt_eff, params, rule)?;
            let half2 = step_rk4(&half, 0.5 * dt_eff, params, rule)?;
            let err = half2.u.sub(&full.u).l2_norm();
            Ok((half2, err))
        })();

        let (mut accepted, err) = match trial {
            Ok(pair) => pair,
            Err(Error::NumericalOverflow { .. }) => {
                // Non-finite trial state: refine, or stop at the last finite state.
                dt = 0.5 * dt_eff;
                if dt < controls.dt_min {
                    return finish(state, Termination::ResolutionLost, records, params);
                }
                continue;
            }
            Err(e) => return Err(e),
        };

        let scale = controls.rel_tol * state.u.l2_norm();
        if err > scale {
            dt = 0.5 * dt_eff;
            if dt < controls.dt_min {
                return finish(state, Termination::StepUnderflow, records, params);
            }
            continue;
        }

        // Accept.
        if (accepted.t - t_target).abs() <= 1e-12 * t_target.max(1.0) {
            accepted.t = t_target;
        }
        if controls.exp_filter {
            exp_filter(&mut accepted);
        }
        state = accepted;
        if state.t == t_target && t_target == next_sample && state.t < controls.t_end {
            records.push(diagnostics::record(&state, params, rule)?);
            sample_idx += 1;
        }
        if err < 0.1 * scale {
            dt = dt_eff * 1.5;
        } else {
            dt = dt_eff;
        }
    }
}
