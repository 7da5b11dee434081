//! Radial solutions of quasilinear elliptic systems
//!
//! ```text
//! Δp uj = aj(|x|) fj(u1, ..., um),   x ∈ R^N,  j = 1..m,  N - 1 >= p > 1
//! ```
//!
//! computed by monotone successive approximation of the equivalent integral
//! equations, together with numerical classifiers for the integral conditions
//! that decide existence of bounded solutions and largeness of all solutions.
//!
//! Modules, bottom-up:
//! - [`expr`]: the coefficient / nonlinearity expression language.
//! - [`grid`]: radial grids and cumulative quadrature.
//! - [`solver`]: Picard iteration, the scalar majorant, lower/upper sandwich.
//! - [`criteria`]: improper-integral classification and the prediction table.
//! - [`verify`]: residuals, iterate invariants and growth under domain doubling.
//! - [`io`]: problem files, JSON reports and CSV profiles.
//! - [`cli`]: the `plap-radial` command line.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod criteria;
mod error;
pub mod expr;
pub mod grid;
pub mod io;
pub mod solver;
pub mod verify;

pub use error::{Error, Result};
pub use expr::{parse, Expression};
pub use grid::{Grading, GridFunction, RadialGrid};
pub use solver::{IterationConfig, ProblemSpec, ProfileSet, SolveReport};

/// Version string embedded in every report.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
