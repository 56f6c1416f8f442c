//! Monitored functionals (E, H, Sobolev norms), slope-supremum tracking,
//! the wave-breaking criterion on initial data, and the breaking-time
//! envelopes and bounds.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::kernel::KernelNorms;
use crate::model::{Params, State};
use crate::spectral::{
    derivative, nodal_max_refined, nodal_min_refined, tail_fraction, Dealias, RealField,
};

/// Per-time-sample scalar diagnostics.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct DiagnosticsRecord {
    pub t: f64,
    pub energy_e: f64,
    pub functional_h: f64,
    pub slope_sup: f64,
    pub slope_argmax: f64,
    pub min_ux: f64,
    pub max_abs_u: f64,
    pub mean_u: f64,
    pub tail_fraction: f64,
}

/// Which kernel-norm values feed the breaking criterion.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NormsSource {
    Numeric,
    Paper,
}

impl Default for NormsSource {
    fn default() -> Self {
        NormsSource::Numeric
    }
}

/// Criterion evaluation on initial data plus breaking-time bounds.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct BreakingReport {
    pub c0: f64,
    pub inf_slope_sq: f64,
    pub threshold: f64,
    pub criterion_satisfied: bool,
    pub s0: f64,
    pub t_lower: f64,
    pub t_upper: f64,
    pub norms_source: NormsSource,
}

/// E = (1/2) int (u^2 + (mu/12) u_x^2) dx, via the spectral Parseval sum.
pub fn energy_e(state: &State, mu: f64) -> Result<f64> {
    if !(mu > 0.0) || !mu.is_finite() {
        return Err(invalid(format!("mu = {mu} must be positive and finite")));
    }
    let hat = state.u.to_spectral();
    let mut sum = 0.0;
    for (i, c) in hat.coeffs().iter().enumerate() {
        let w = hat.grid().omega(i);
        sum += (1.0 + mu / 12.0 * w * w) * c.norm_sqr();
    }
    Ok(0.5 * sum)
}

/// H = (1/2) int (u^2 + (mu/6) u_x^2 + (mu^2/144) u_xx^2) dx.
pub fn functional_h(state: &State, mu: f64) -> Result<f64> {
    if !(mu > 0.0) || !mu.is_finite() {
        return Err(invalid(format!("mu = {mu} must be positive and finite")));
    }
    let hat = state.u.to_spectral();
    let mut sum = 0.0;
    for (i, c) in hat.coeffs().iter().enumerate() {
        let w2 = hat.grid().omega(i).powi(2);
        sum += (1.0 + mu / 6.0 * w2 + mu * mu / 144.0 * w2 * w2) * c.norm_sqr();
    }
    Ok(0.5 * sum)
}

/// Spectral Sobolev norm (sum_k (1 + (2 pi k)^2)^s |u_hat_k|^2)^{1/2}, s in [0,4].
pub fn sobolev_norm(state: &State, s: f64) -> Result<f64> {
    if !(0.0..=4.0).contains(&s) {
        return Err(invalid(format!("Sobolev exponent s = {s} not in [0,4]")));
    }
    let hat = state.u.to_spectral();
    let mut sum = 0.0;
    for (i, c) in hat.coeffs().iter().enumerate() {
        let w2 = hat.grid().omega(i).powi(2);
        sum += (1.0 + w2).powf(s) * c.norm_sqr();
    }
    Ok(sum.sqrt())
}

/// S(t) = sup_x u_x with its argmax, nodal max plus parabolic refinement.
pub fn slope_sup(state: &State) -> Result<(f64, f64)> {
    let ux = derivative(&state.u, 1)?;
    Ok(nodal_max_refined(&ux))
}

/// C0 = int (u0^2 + (mu/12) u0_x^2) dx = 2 E(u0).
pub fn c0_energy(u0: &RealField, mu: f64) -> Result<f64> {
    let state = State { u: u0.clone(), t: 0.0 };
    Ok(2.0 * energy_e(&state, mu)?)
}

/// max_x u^2 <= (13/mu) C0.
pub fn amplitude_bound(c0: f64, mu: f64) -> f64 {
    13.0 / mu * c0
}

/// The bracketed sum of the breaking criterion scaled by 12/(mu eps), using
/// n2 and n_inf from the selected source.
pub fn breaking_threshold(
    params: &Params,
    c0: f64,
    norms: &KernelNorms,
    source: NormsSource,
) -> Result<f64> {
    if c0 < 0.0 {
        return Err(invalid(format!("c0 = {c0} must be nonnegative")));
    }
    let (n2, ninf) = match source {
        NormsSource::Numeric => (norms.n2_numeric, norms.ninf_numeric),
        NormsSource::Paper => (norms.n2_paper, norms.ninf_paper),
    };
    let e = params.epsilon;
    let mu = params.mu;
    let r = 13.0 / mu;
    let sqrt_c0 = c0.sqrt();
    let bracket = 2.0 * n2 * sqrt_c0
        + 2.5 * e * ninf * c0
        + 0.125 * e * e * ninf * r.sqrt() * c0.powf(1.5)
        + (3.0 / 64.0) * e.powi(3) * ninf * r * c0 * c0
        + 1.75 * e * ninf * c0
        + 2.0 * r.sqrt() * sqrt_c0
        + 2.5 * e * r * c0
        + 0.125 * e * e * r.powf(1.5) * c0.powf(1.5)
        + (3.0 / 64.0) * e.powi(3) * r * r * c0 * c0;
    Ok(12.0 / (mu * e) * bracket)
}

/// Assemble the breaking report for initial data u0.
pub fn breaking_report(
    u0: &RealField,
    params: &Params,
    norms: &KernelNorms,
    source: NormsSource,
) -> Result<BreakingReport> {
    let state = State { u: u0.clone(), t: 0.0 };
    let (s0, _) = slope_sup(&state)?;
    if s0 <= 1e-14 * u0.max_abs().max(1.0) {
        return Err(invalid(
            "initial profile has S(0) = 0 (zero or constant field); breaking bounds undefined",
        ));
    }
    let c0 = c0_energy(u0, params.mu)?;
    let ux = derivative(u0, 1)?;
    let (min_ux, _) = nodal_min_refined(&ux);
    let inf_slope_sq = min_ux * min_ux;
    let threshold = breaking_threshold(params, c0, norms, source)?;
    Ok(BreakingReport {
        c0,
        inf_slope_sq,
        threshold,
        criterion_satisfied: inf_slope_sq > threshold,
        s0,
        t_lower: 4.0 / (11.0 * params.epsilon * s0),
        t_upper: 4.0 / (3.0 * params.epsilon * s0),
        norms_source: source,
    })
}

/// Slope envelopes (slow, fast) = (s0/(1 - (3/4) eps s0 t), s0/(1 - (11/4) eps s0 t)).
pub fn envelope_bounds(s0: f64, epsilon: f64, t: f64) -> Result<(f64, f64)> {
    if !(s0 > 0.0) || !(epsilon > 0.0) || !(t >= 0.0) {
        return Err(invalid("envelope_bounds requires s0 > 0, epsilon > 0, t >= 0"));
    }
    let fast_den = 1.0 - 2.75 * epsilon * s0 * t;
    if fast_den <= 0.0 {
        return Err(Error::OutOfDomain(format!(
            "t = {t} at or past the fast envelope blow-up time {}",
            4.0 / (11.0 * epsilon * s0)
        )));
    }
    let slow_den = 1.0 - 0.75 * epsilon * s0 * t;
    if slow_den <= 0.0 {
        return Err(Error::OutOfDomain(format!(
            "t = {t} at or past the slow envelope blow-up time {}",
            4.0 / (3.0 * epsilon * s0)
        )));
    }
    Ok((s0 / slow_den, s0 / fast_den))
}

/// Full diagnostics record for a state.
pub fn record(state: &State, params: &Params, rule: Dealias) -> Result<DiagnosticsRecord> {
    let (s, xi) = slope_sup(state)?;
    let ux = derivative(&state.u, 1)?;
    let (min_ux, _) = nodal_min_refined(&ux);
    Ok(DiagnosticsRecord {
        t: state.t,
        energy_e: energy_e(state, params.mu)?,
        functional_h: functional_h(state, params.mu)?,
        slope_sup: s,
        slope_argmax: xi,
        min_ux,
        max_abs_u: state.u.max_abs(),
        mean_u: state.u.mean(),
        tail_fraction: tail_fraction(&state.u, rule),
    })
}
