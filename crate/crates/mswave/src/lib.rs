//! Pseudo-spectral simulator and analysis toolkit for the periodic Cauchy
//! problem of a moderate-amplitude shallow-water wave equation.
//!
//! The solver evolves period-1 initial data under the quasi-linear nonlocal
//! form of the model, tracks conserved and monitored functionals, evaluates
//! the wave-breaking criterion on initial data, and reports breaking-time
//! bounds. See the `mswave` binary for the command-line front end.

pub mod commands;
pub mod config;
pub mod diagnostics;
pub mod error;
pub mod kernel;
pub mod model;
pub mod output;
pub mod spectral;
pub mod timestepper;

pub use error::{Error, Result};
