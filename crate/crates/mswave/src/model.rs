//! Right-hand side of the evolution in both formulations: the quasi-linear
//! nonlocal form u_t = (d_x + (7/2) eps u d_x) u + f(u) with
//! f(u) = -(1 - (mu/12) d_xx)^{-1} d_x g(u), and the direct form obtained by
//! inverting the Helmholtz operator on the full equation. Both are first-class
//! and cross-checked; the integrator drives the nonlocal form.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::spectral::{
    dealias_truncate, derivative, helmholtz_inverse, Dealias, RealField, SpectralCoeffs,
};

/// The two nondimensional model parameters.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct Params {
    /// Amplitude parameter epsilon.
    pub epsilon: f64,
    /// Shallowness parameter mu.
    pub mu: f64,
}

impl Params {
    pub fn new(epsilon: f64, mu: f64) -> Result<Self> {
        if !(epsilon > 0.0) || !epsilon.is_finite() {
            return Err(invalid(format!("epsilon = {epsilon} must be positive and finite")));
        }
        if !(mu > 0.0) || !mu.is_finite() {
            return Err(invalid(format!("mu = {mu} must be positive and finite")));
        }
        Ok(Params { epsilon, mu })
    }
}

/// Surface elevation samples plus simulation time.
#[derive(Clone, Debug)]
pub struct State {
    pub u: RealField,
    pub t: f64,
}

impl State {
    pub fn new(u: RealField, t: f64) -> Result<Self> {
        if !u.is_finite() {
            return Err(invalid("state field contains non-finite values"));
        }
        if !(t >= 0.0) || !t.is_finite() {
            return Err(invalid(format!("time t = {t} must be nonnegative and finite")));
        }
        Ok(State { u, t })
    }
}

fn overflow_at(t: f64) -> Error {
    Error::NumericalOverflow { t, dt: 0.0 }
}

fn finite_or_overflow(field: RealField, t: f64) -> Result<RealField> {
    if field.is_finite() {
        Ok(field)
    } else {
        Err(overflow_at(t))
    }
}

/// Nonlinear part of g evaluated pointwise from nodal u and u_x.
fn g_nonlinear_pointwise(u: &[f64], ux: &[f64], params: &Params) -> Vec<f64> {
    let e = params.epsilon;
    let em = params.epsilon * params.mu;
    u.iter()
        .zip(ux)
        .map(|(&v, &vx)| {
            let v2 = v * v;
            2.5 * e * v2 - 0.125 * e * e * v2 * v + (3.0 / 64.0) * e * e * e * v2 * v2
                - (7.0 / 48.0) * em * vx * vx
        })
        .collect()
}

/// g(u) = 2u + (5/2) eps u^2 - (1/8) eps^2 u^3 + (3/64) eps^3 u^4
///        - (7/48) eps mu u_x^2, with the nonlinear part dealiased.
pub fn g_of_u(state: &State, params: &Params, rule: Dealias) -> Result<RealField> {
    let u = &state.u;
    let grid = u.grid().clone();
    let nl = match rule {
        Dealias::TwoThirds => {
            let ux = derivative(u, 1)?;
            let vals = g_nonlinear_pointwise(u.values(), ux.values(), params);
            let raw = RealField::new(grid.clone(), vals).map_err(|_| overflow_at(state.t))?;
            dealias_truncate(&raw, rule)
        }
        Dealias::Padded => {
            let m = Dealias::padded_size(grid.n());
            let hat = u.to_spectral();
            let fine_hat = hat.padded(m)?;
            let fine_u = fine_hat.to_real();
            let fine_ux = fine_derivative(&fine_hat);
            let vals = g_nonlinear_pointwise(fine_u.values(), fine_ux.values(), params);
            let raw =
                RealField::new(fine_u.grid().clone(), vals).map_err(|_| overflow_at(state.t))?;
            raw.to_spectral().projected(&grid)?.to_real()
        }
    };
    finite_or_overflow(u.scaled(2.0).add(&nl), state.t)
}

fn fine_derivative(hat: &SpectralCoeffs) -> RealField {
    let mut d = hat.clone();
    let grid = d.grid().clone();
    let nyq = grid.n() / 2;
    for (i, c) in d.coeffs_mut().iter_mut().enumerate() {
        if i == nyq {
            *c = num_complex::Complex64::new(0.0, 0.0);
        } else {
            *c *= num_complex::Complex64::new(0.0, grid.omega(i));
        }
    }
    d.to_real()
}

/// f(u) = -(1 - (mu/12) d_xx)^{-1} d_x g(u).
pub fn f_of_u(state: &State, params: &Params, rule: Dealias) -> Result<RealField> {
    let g = g_of_u(state, params, rule)?;
    let smoothed = helmholtz_inverse(&g, params.mu)?;
    finite_or_overflow(derivative(&smoothed, 1)?.scaled(-1.0), state.t)
}

/// Quasi-linear nonlocal right-hand side: u_x + (7/2) eps u u_x + f(u).
pub fn rhs_nonlocal(state: &State, params: &Params, rule: Dealias) -> Result<RealField> {
    let u = &state.u;
    let ux = derivative(u, 1)?;
    let transport = crate::spectral::product(u, &ux, rule)?;
    let f = f_of_u(state, params, rule)?;
    let rhs = ux.axpy(3.5 * params.epsilon, &transport).add(&f);
    finite_or_overflow(rhs, state.t)
}

/// Direct form: invert (1 - (mu/12) d_xx) on the full evolution equation.
pub fn rhs_direct(state: &State, params: &Params, rule: Dealias) -> Result<RealField> {
    let u = &state.u;
    let grid = u.grid().clone();
    let e = params.epsilon;
    let mu = params.mu;

    let nonlinear = match rule {
        Dealias::TwoThirds => {
            let ux = derivative(u, 1)?;
            let uxx = derivative(u, 2)?;
            let uxxx = derivative(u, 3)?;
            let vals = direct_nonlinear_pointwise(
                u.values(),
                ux.values(),
                uxx.values(),
                uxxx.values(),
                e,
                mu,
            );
            let raw = RealField::new(grid.clone(), vals).map_err(|_| overflow_at(state.t))?;
            dealias_truncate(&raw, rule)
        }
        Dealias::Padded => {
            let m = Dealias::padded_size(grid.n());
            let hat = u.to_spectral().padded(m)?;
            let fine_u = hat.to_real();
            let fine_ux = fine_derivative(&hat);
            let fine_uxx = fine_derivative_order2(&hat);
            let fine_uxxx = fine_derivative_order3(&hat);
            let vals = direct_nonlinear_pointwise(
                fine_u.values(),
                fine_ux.values(),
                fine_uxx.values(),
                fine_uxxx.values(),
                e,
                mu,
            );
            let raw =
                RealField::new(fine_u.grid().clone(), vals).map_err(|_| overflow_at(state.t))?;
            raw.to_spectral().projected(&grid)?.to_real()
        }
    };

    let ux = derivative(u, 1)?;
    let uxxx = derivative(u, 3)?;
    let bracket = ux.axpy(mu / 12.0, &uxxx).add(&nonlinear);
    let rhs = helmholtz_inverse(&bracket, mu)?.scaled(-1.0);
    finite_or_overflow(rhs, state.t)
}

fn direct_nonlinear_pointwise(
    u: &[f64],
    ux: &[f64],
    uxx: &[f64],
    uxxx: &[f64],
    e: f64,
    mu: f64,
) -> Vec<f64> {
    (0..u.len())
        .map(|j| {
            let (v, vx, vxx, vxxx) = (u[j], ux[j], uxx[j], uxxx[j]);
            1.5 * e * v * vx - 0.375 * e * e * v * v * vx
                + (3.0 / 16.0) * e * e * e * v * v * v * vx
                + (7.0 / 24.0) * e * mu * (v * vxxx + 2.0 * vx * vxx)
        })
        .collect()
}

fn fine_derivative_order2(hat: &SpectralCoeffs) -> RealField {
    let mut d = hat.clone();
    let grid = d.grid().clone();
    for (i, c) in d.coeffs_mut().iter_mut().enumerate() {
        let w = grid.omega(i);
        *c *= -w * w;
    }
    d.to_real()
}

fn fine_derivative_order3(hat: &SpectralCoeffs) -> RealField {
    let mut d = hat.clone();
    let grid = d.grid().clone();
    let nyq = grid.n() / 2;
    for (i, c) in d.coeffs_mut().iter_mut().enumerate() {
        if i == nyq {
            *c = num_complex::Complex64::new(0.0, 0.0);
        } else {
            let w = grid.omega(i);
            *c *= num_complex::Complex64::new(0.0, -w * w * w);
        }
    }
    d.to_real()
}

/// Max-norm residual of the differentiated identity
/// d_xx (P * g) = (12/mu) (P * g) - (12/mu) g.
pub fn identity_residual(state: &State, params: &Params, rule: Dealias) -> Result<f64> {
    let g = g_of_u(state, params, rule)?;
    let pg = helmholtz_inverse(&g, params.mu)?;
    let lhs = derivative(&pg, 2)?;
    let rhs = pg.sub(&g).scaled(12.0 / params.mu);
    Ok(lhs.max_abs_diff(&rhs))
}
