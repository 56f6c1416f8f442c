//! Uniform periodic grid on [0,1), discrete Fourier transforms, spectral
//! differentiation, and the Fourier-multiplier inverse of (1 - (mu/12) d_xx).
//!
//! Wavenumber layout follows the usual real-DFT convention: index i in 0..n
//! maps to the integer mode k = i for i <= n/2 and k = i - n otherwise, so
//! k ranges over {-n/2+1, ..., n/2}. The angular wavenumber is 2*pi*k.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{invalid, Result};

/// Uniform periodic grid with cached FFT plans.
#[derive(Clone)]
pub struct Grid {
    n: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for Grid {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Grid").field("n", &self.n).finish()
    }
}

impl PartialEq for Grid {
    fn eq(&self, other: &Self) -> bool {
        self.n == other.n
    }
}

impl Grid {
    /// Build a grid with `n` nodes x_j = j/n. `n` must be even and >= 8.
    pub fn new(n: usize) -> Result<Self> {
        if n < 8 {
            return Err(invalid(format!("grid size n = {n} violates n >= 8")));
        }
        if n % 2 != 0 {
            return Err(invalid(format!("grid size n = {n} must be even")));
        }
        let mut planner = FftPlanner::new();
        Ok(Grid {
            n,
            forward: planner.plan_fft_forward(n),
            inverse: planner.plan_fft_inverse(n),
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn spacing(&self) -> f64 {
        1.0 / self.n as f64
    }

    pub fn node(&self, j: usize) -> f64 {
        j as f64 / self.n as f64
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..self.n).map(|j| self.node(j)).collect()
    }

    /// Integer mode for storage index `i`: k in {-n/2+1, ..., n/2}.
    pub fn mode(&self, i: usize) -> i64 {
        if i <= self.n / 2 {
            i as i64
        } else {
            i as i64 - self.n as i64
        }
    }

    /// Angular wavenumber 2*pi*k for storage index `i`.
    pub fn omega(&self, i: usize) -> f64 {
        2.0 * PI * self.mode(i) as f64
    }
}

/// Real-valued nodal samples of a period-1 function.
#[derive(Clone, Debug, PartialEq)]
pub struct RealField {
    grid: Grid,
    values: Vec<f64>,
}

impl RealField {
    pub fn new(grid: Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.n() {
            return Err(invalid(format!(
                "field length {} does not match grid size {}",
                values.len(),
                grid.n()
            )));
        }
        if !values.iter().all(|v| v.is_finite()) {
            return Err(invalid("field contains non-finite values"));
        }
        Ok(RealField { grid, values })
    }

    pub fn zeros(grid: Grid) -> Self {
        let n = grid.n();
        RealField {
            grid,
            values: vec![0.0; n],
        }
    }

    pub fn constant(grid: Grid, c: f64) -> Self {
        let n = grid.n();
        RealField {
            grid,
            values: vec![c; n],
        }
    }

    /// Sample a function of x in [0,1) at the grid nodes.
    pub fn from_fn(grid: Grid, f: impl Fn(f64) -> f64) -> Self {
        let values = (0..grid.n()).map(|j| f(grid.node(j))).collect();
        RealField { grid, values }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    /// Discrete L2[0,1] norm: sqrt of the mean of squares.
    pub fn l2_norm(&self) -> f64 {
        (self.values.iter().map(|v| v * v).sum::<f64>() / self.values.len() as f64).sqrt()
    }

    pub fn scaled(&self, a: f64) -> RealField {
        RealField {
            grid: self.grid.clone(),
            values: self.values.iter().map(|v| a * v).collect(),
        }
    }

    /// self + a * other, elementwise.
    pub fn axpy(&self, a: f64, other: &RealField) -> RealField {
        debug_assert_eq!(self.grid, other.grid);
        RealField {
            grid: self.grid.clone(),
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(x, y)| x + a * y)
                .collect(),
        }
    }

    pub fn add(&self, other: &RealField) -> RealField {
        self.axpy(1.0, other)
    }

    pub fn sub(&self, other: &RealField) -> RealField {
        self.axpy(-1.0, other)
    }

    pub fn max_abs_diff(&self, other: &RealField) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()))
    }

    pub fn to_spectral(&self) -> SpectralCoeffs {
        let mut buf: Vec<Complex64> = self
            .values
            .iter()
            .map(|&v| Complex64::new(v, 0.0))
            .collect();
        self.grid.forward.process(&mut buf);
        let scale = 1.0 / self.grid.n() as f64;
        for c in &mut buf {
            *c *= scale;
        }
        SpectralCoeffs {
            grid: self.grid.clone(),
            coeffs: buf,
        }
    }
}

/// Complex Fourier coefficients u_hat_k, normalized so u_hat_0 is the mean.
#[derive(Clone, Debug)]
pub struct SpectralCoeffs {
    grid: Grid,
    coeffs: Vec<Complex64>,
}

impl SpectralCoeffs {
    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [Complex64] {
        &mut self.coeffs
    }

    pub fn to_real(&self) -> RealField {
        let mut buf = self.coeffs.clone();
        self.grid.inverse.process(&mut buf);
        RealField {
            grid: self.grid.clone(),
            values: buf.iter().map(|c| c.re).collect(),
        }
    }

    /// Multiply each coefficient by a real function of the angular wavenumber.
    pub fn apply_multiplier(&mut self, m: impl Fn(f64) -> f64) {
        let grid = self.grid.clone();
        for (i, c) in self.coeffs.iter_mut().enumerate() {
            *c *= m(grid.omega(i));
        }
    }

    /// Zero every mode with |k| > k_keep.
    pub fn truncate_above(&mut self, k_keep: usize) {
        let grid = self.grid.clone();
        for (i, c) in self.coeffs.iter_mut().enumerate() {
            if grid.mode(i).unsigned_abs() as usize > k_keep {
                *c = Complex64::new(0.0, 0.0);
            }
        }
    }

    /// Zero-pad to a finer grid of `m` nodes (m >= n, even). The Nyquist
    /// coefficient is split across +n/2 and -n/2 so real fields stay real.
    pub fn padded(&self, m: usize) -> Result<SpectralCoeffs> {
        let n = self.grid.n();
        if m < n || m % 2 != 0 {
            return Err(invalid(format!("pad target {m} must be even and >= {n}")));
        }
        if m == n {
            return Ok(self.clone());
        }
        let fine = Grid::new(m)?;
        let mut coeffs = vec![Complex64::new(0.0, 0.0); m];
        for i in 0..n {
            let k = self.grid.mode(i);
            if k == (n / 2) as i64 {
                let half = self.coeffs[i] * 0.5;
                coeffs[n / 2] = half;
                coeffs[m - n / 2] = half.conj();
            } else {
                let idx = if k >= 0 { k as usize } else { (m as i64 + k) as usize };
                coeffs[idx] = self.coeffs[i];
            }
        }
        Ok(SpectralCoeffs { grid: fine, coeffs })
    }

    /// Project onto a coarser grid of `n` nodes, discarding modes beyond n/2.
    /// The +-n/2 pair is folded into the coarse Nyquist slot.
    pub fn projected(&self, coarse: &Grid) -> Result<SpectralCoeffs> {
        let m = self.grid.n();
        let n = coarse.n();
        if n > m {
            return Err(invalid(format!("projection target {n} exceeds source {m}")));
        }
        if n == m {
            return Ok(self.clone());
        }
        let mut coeffs = vec![Complex64::new(0.0, 0.0); n];
        for (i, c) in coeffs.iter_mut().enumerate() {
            let k = coarse.mode(i);
            if k == (n / 2) as i64 {
                let plus = self.coeffs[n / 2];
                let minus = self.coeffs[m - n / 2];
                *c = plus + minus;
            } else {
                let idx = if k >= 0 { k as usize } else { (m as i64 + k) as usize };
                *c = self.coeffs[idx];
            }
        }
        Ok(SpectralCoeffs {
            grid: coarse.clone(),
            coeffs,
        })
    }
}

/// Spectral derivative of the given order (1, 2 or 3).
///
/// Odd orders zero the Nyquist coefficient; even orders keep it.
pub fn derivative(field: &RealField, order: u32) -> Result<RealField> {
    if !(1..=3).contains(&order) {
        return Err(invalid(format!("derivative order {order} not in {{1,2,3}}")));
    }
    let mut hat = field.to_spectral();
    let grid = hat.grid.clone();
    let nyquist = grid.n() / 2;
    for (i, c) in hat.coeffs.iter_mut().enumerate() {
        let w = grid.omega(i);
        let factor = match order {
            1 => Complex64::new(0.0, w),
            2 => Complex64::new(-w * w, 0.0),
            _ => Complex64::new(0.0, -w * w * w),
        };
        if order % 2 == 1 && i == nyquist {
            *c = Complex64::new(0.0, 0.0);
        } else {
            *c *= factor;
        }
    }
    Ok(hat.to_real())
}

/// Apply (1 - (mu/12) d_xx)^{-1} as the Fourier multiplier
/// 1 / (1 + (mu/12) (2 pi k)^2).
pub fn helmholtz_inverse(field: &RealField, mu: f64) -> Result<RealField> {
    if !(mu > 0.0) || !mu.is_finite() {
        return Err(invalid(format!("mu = {mu} must be positive and finite")));
    }
    let mut hat = field.to_spectral();
    let c = mu / 12.0;
    hat.apply_multiplier(|w| 1.0 / (1.0 + c * w * w));
    Ok(hat.to_real())
}

/// Dealiasing strategy for pointwise nonlinear products.
#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Dealias {
    /// 2/3-rule truncation: products are formed on the native grid and modes
    /// with |k| > n/3 are zeroed afterwards.
    TwoThirds,
    /// Exact dealiasing for the quartic nonlinearity: products are evaluated
    /// on a zero-padded grid of at least 5n/2 nodes, then projected back.
    Padded,
}

impl Default for Dealias {
    fn default() -> Self {
        Dealias::TwoThirds
    }
}

impl Dealias {
    /// Largest retained mode for a grid of `n` nodes.
    pub fn active_mode_max(self, n: usize) -> usize {
        match self {
            Dealias::TwoThirds => n / 3,
            Dealias::Padded => n / 2,
        }
    }

    /// Padded working-grid size (even, >= 5n/2).
    pub fn padded_size(n: usize) -> usize {
        let m = (5 * n).div_ceil(2);
        if m % 2 == 0 {
            m
        } else {
            m + 1
        }
    }
}

/// Truncate a field per the 2/3 rule (no-op band limit for `Padded` callers,
/// which dealias through the padded product path instead).
pub fn dealias_truncate(field: &RealField, rule: Dealias) -> RealField {
    match rule {
        Dealias::TwoThirds => {
            let mut hat = field.to_spectral();
            hat.truncate_above(field.grid().n() / 3);
            hat.to_real()
        }
        Dealias::Padded => field.clone(),
    }
}

/// Fraction of field energy carried by the top third of the active band.
///
/// The active band is [0, n/3] under the 2/3 rule (higher modes are inert by
/// construction) and [0, n/2] with padded products; the tail is the top third
/// of that band. Used as the under-resolution monitor.
pub fn tail_fraction(field: &RealField, rule: Dealias) -> f64 {
    let hat = field.to_spectral();
    let n = field.grid().n();
    let k_active = rule.active_mode_max(n);
    let k_cut = 2 * k_active / 3;
    let mut total = 0.0;
    let mut tail = 0.0;
    for (i, c) in hat.coeffs().iter().enumerate() {
        let k = hat.grid().mode(i).unsigned_abs() as usize;
        let e = c.norm_sqr();
        total += e;
        if k > k_cut {
            tail += e;
        }
    }
    if total <= f64::MIN_POSITIVE {
        0.0
    } else {
        (tail / total).clamp(0.0, 1.0)
    }
}

/// Nodal maximum with three-point parabolic refinement, returning the refined
/// value and its location in [0,1). Near-ties resolve to the smallest node.
pub fn nodal_max_refined(field: &RealField) -> (f64, f64) {
    let v = field.values();
    let n = v.len();
    let vmax = v.iter().fold(f64::NEG_INFINITY, |m, &x| m.max(x));
    let tol = 1e-13 * field.max_abs().max(1.0);
    let j = v.iter().position(|&x| x >= vmax - tol).unwrap_or(0);
    let h = field.grid().spacing();
    let vm = v[(j + n - 1) % n];
    let v0 = v[j];
    let vp = v[(j + 1) % n];
    let curv = vm - 2.0 * v0 + vp;
    if curv < -tol {
        let offset = 0.5 * (vm - vp) / curv * h;
        let b = (vp - vm) / (2.0 * h);
        let value = v0 - b * b * h * h / (2.0 * curv);
        let mut x = field.grid().node(j) + offset;
        x -= x.floor();
        (value, x)
    } else {
        (v0, field.grid().node(j))
    }
}

/// Nodal minimum with parabolic refinement; value and location in [0,1).
pub fn nodal_min_refined(field: &RealField) -> (f64, f64) {
    let (v, x) = nodal_max_refined(&field.scaled(-1.0));
    (-v, x)
}

/// Pointwise product of two fields, dealiased per `rule`.
pub fn product(a: &RealField, b: &RealField, rule: Dealias) -> Result<RealField> {
    match rule {
        Dealias::TwoThirds => {
            let raw = RealField {
                grid: a.grid().clone(),
                values: a
                    .values()
                    .iter()
                    .zip(b.values())
                    .map(|(x, y)| x * y)
                    .collect(),
            };
            Ok(dealias_truncate(&raw, rule))
        }
        Dealias::Padded => {
            let m = Dealias::padded_size(a.grid().n());
            let fa = a.to_spectral().padded(m)?.to_real();
            let fb = b.to_spectral().padded(m)?.to_real();
            let raw = RealField {
                grid: fa.grid.clone(),
                values: fa
                    .values()
                    .iter()
                    .zip(fb.values())
                    .map(|(x, y)| x * y)
                    .collect(),
            };
            Ok(raw.to_spectral().projected(a.grid())?.to_real())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    #[test]
    fn grid_rejects_odd_or_small_n() {
        assert!(Grid::new(7).is_err());
        assert!(Grid::new(6).is_err());
        assert!(Grid::new(8).is_ok());
    }

    #[test]
    fn grid_nodes_are_uniform() {
        let g = Grid::new(8).unwrap();
        let expected = [0.0, 0.125, 0.25, 0.375, 0.5, 0.625, 0.75, 0.875];
        for (j, &x) in expected.iter().enumerate() {
            assert_eq!(g.node(j), x);
        }
    }

    #[test]
    fn grid_mode_layout() {
        let g = Grid::new(256).unwrap();
        let modes: Vec<i64> = (0..256).map(|i| g.mode(i)).collect();
        assert_eq!(*modes.iter().min().unwrap(), -127);
        assert_eq!(*modes.iter().max().unwrap(), 128);
        assert_eq!(modes[0], 0);
        assert_eq!(modes[128], 128);
        assert_eq!(modes[129], -127);
    }

    #[test]
    fn derivative_of_sine_is_cosine() {
        let g = Grid::new(64).unwrap();
        let u = RealField::from_fn(g.clone(), |x| (2.0 * PI * x).sin());
        let du = derivative(&u, 1).unwrap();
        let exact = RealField::from_fn(g, |x| 2.0 * PI * (2.0 * PI * x).cos());
        assert!(du.max_abs_diff(&exact) < 1e-12);
    }

    #[test]
    fn derivative_of_constant_is_zero() {
        let g = Grid::new(32).unwrap();
        let u = RealField::constant(g, 3.7);
        for order in 1..=3 {
            let du = derivative(&u, order).unwrap();
            assert!(du.max_abs() < 1e-12, "order {order}");
        }
    }

    #[test]
    fn second_derivative_of_cosine() {
        let g = Grid::new(64).unwrap();
        let u = RealField::from_fn(g.clone(), |x| (2.0 * PI * x).cos());
        let ddu = derivative(&u, 2).unwrap();
        let exact = RealField::from_fn(g, |x| -4.0 * PI * PI * (2.0 * PI * x).cos());
        assert!(ddu.max_abs_diff(&exact) < 1e-10);
    }

    #[test]
    fn derivative_exact_for_every_resolvable_mode() {
        let g = Grid::new(64).unwrap();
        for m in 1..32usize {
            let w = 2.0 * PI * m as f64;
            let u = RealField::from_fn(g.clone(), |x| (w * x).sin());
            let du = derivative(&u, 1).unwrap();
            let exact = RealField::from_fn(g.clone(), |x| w * (w * x).cos());
            assert!(du.max_abs_diff(&exact) < 1e-11, "mode {m}");
        }
    }

    #[test]
    fn derivative_rejects_bad_order() {
        let g = Grid::new(16).unwrap();
        let u = RealField::zeros(g);
        assert!(derivative(&u, 0).is_err());
        assert!(derivative(&u, 4).is_err());
    }

    #[test]
    fn helmholtz_preserves_constants() {
        let g = Grid::new(32).unwrap();
        let u = RealField::constant(g, -2.5);
        let v = helmholtz_inverse(&u, 0.7).unwrap();
        assert!(v.max_abs_diff(&u) < 1e-13);
    }

    #[test]
    fn helmholtz_single_mode_multiplier() {
        let g = Grid::new(64).unwrap();
        let u = RealField::from_fn(g.clone(), |x| (2.0 * PI * x).cos());
        let v = helmholtz_inverse(&u, 12.0).unwrap();
        let factor = 1.0 / (1.0 + 4.0 * PI * PI);
        let exact = RealField::from_fn(g, |x| factor * (2.0 * PI * x).cos());
        assert!(v.max_abs_diff(&exact) < 1e-13);
    }

    #[test]
    fn helmholtz_round_trip() {
        let g = Grid::new(128).unwrap();
        let u = RealField::from_fn(g, |x| {
            (2.0 * PI * x).sin() + 0.3 * (6.0 * PI * x).cos() + 0.1 * (10.0 * PI * x).sin()
        });
        let mu = 0.9;
        let v = helmholtz_inverse(&u, mu).unwrap();
        let back = v.axpy(-mu / 12.0, &derivative(&v, 2).unwrap());
        assert!(back.max_abs_diff(&u) < 1e-10);
    }

    #[test]
    fn helmholtz_rejects_nonpositive_mu() {
        let g = Grid::new(16).unwrap();
        let u = RealField::zeros(g);
        assert!(helmholtz_inverse(&u, 0.0).is_err());
        assert!(helmholtz_inverse(&u, -1.0).is_err());
    }

    #[test]
    fn helmholtz_mean_preservation() {
        let g = Grid::new(64).unwrap();
        let u = RealField::from_fn(g, |x| 0.4 + (4.0 * PI * x).sin() - 0.2 * (2.0 * PI * x).cos());
        let v = helmholtz_inverse(&u, 3.3).unwrap();
        assert!((v.mean() - u.mean()).abs() < 1e-14);
    }

    #[test]
    fn padded_product_is_exact_projection() {
        // sin(2 pi x)^2 = 1/2 - cos(4 pi x)/2, fully resolvable.
        let g = Grid::new(32).unwrap();
        let u = RealField::from_fn(g.clone(), |x| (2.0 * PI * x).sin());
        let p = product(&u, &u, Dealias::Padded).unwrap();
        let exact = RealField::from_fn(g, |x| 0.5 - 0.5 * (4.0 * PI * x).cos());
        assert!(p.max_abs_diff(&exact) < 1e-13);
    }

    #[test]
    fn tail_fraction_of_constant_is_zero() {
        let g = Grid::new(64).unwrap();
        let u = RealField::constant(g, 1.0);
        assert_eq!(tail_fraction(&u, Dealias::TwoThirds), 0.0);
    }

    #[test]
    fn tail_fraction_detects_high_modes() {
        let g = Grid::new(64).unwrap();
        // Mode 20 lies in the top third of the 2/3-rule band [0, 21].
        let u = RealField::from_fn(g, |x| (2.0 * PI * x).sin() + (40.0 * PI * x).sin());
        assert!(tail_fraction(&u, Dealias::TwoThirds) > 0.4);
    }

    proptest! {
        #[test]
        fn transform_round_trip(vals in proptest::collection::vec(-10.0f64..10.0, 64)) {
            let g = Grid::new(64).unwrap();
            let u = RealField::new(g, vals).unwrap();
            let back = u.to_spectral().to_real();
            let scale = u.max_abs().max(1.0);
            prop_assert!(u.max_abs_diff(&back) <= 1e-12 * scale);
        }

        #[test]
        fn conjugate_symmetry(vals in proptest::collection::vec(-5.0f64..5.0, 32)) {
            let g = Grid::new(32).unwrap();
            let hat = RealField::new(g, vals).unwrap().to_spectral();
            let c = hat.coeffs();
            for k in 1..16usize {
                let diff = (c[k] - c[32 - k].conj()).norm();
                prop_assert!(diff <= 1e-12 * (1.0 + c[k].norm()));
            }
        }

        #[test]
        fn helmholtz_linearity(a in -3.0f64..3.0, b in -3.0f64..3.0) {
            let g = Grid::new(64).unwrap();
            let f = RealField::from_fn(g.clone(), |x| (2.0 * PI * x).sin());
            let h = RealField::from_fn(g, |x| (6.0 * PI * x).cos());
            let mu = 2.0;
            let lhs = helmholtz_inverse(&f.scaled(a).axpy(b, &h), mu).unwrap();
            let rhs = helmholtz_inverse(&f, mu).unwrap().scaled(a)
                .axpy(b, &helmholtz_inverse(&h, mu).unwrap());
            prop_assert!(lhs.max_abs_diff(&rhs) <= 1e-12 * (1.0 + a.abs() + b.abs()));
        }
    }
}
