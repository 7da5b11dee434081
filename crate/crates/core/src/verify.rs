//! Checks on computed profiles that do not reuse the convergence test of the
//! solver: fixed-point and differential residuals, monotonicity of the
//! iterates, and the bounded-versus-large behaviour under domain doubling.

use std::sync::Arc;

use rayon::prelude::*;
use serde::Serialize;

use crate::grid::{make_grid, Grading, RadialGrid};
use crate::solver::{
    self, find_decrease, IterationConfig, MonotoneViolation, ProblemSpec, ProfileSet,
    RadialOperator,
};
use crate::{Error, Result};

/// Relative sup increase over the last doubling below which growth has stopped.
pub const SATURATION_TOL: f64 = 1e-3;
/// Smallest log-log slope that counts as growth.
pub const MIN_GROWTH_EXPONENT: f64 = 0.2;
/// Allowed change between the last two slopes for them to count as stable.
pub const SLOPE_STABILITY: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ResidualReport {
    /// `sup |T[u]_i(r) - u_i(r)|` over all components and nodes.
    pub sup_fixed_point_residual: f64,
    /// Sup of the radial p-Laplacian residual, two nodes trimmed at each end.
    pub sup_ode_residual_interior: f64,
    /// Node where the fixed-point residual peaks.
    pub node_of_max: usize,
}

pub fn fixed_point_residual(
    problem: &ProblemSpec,
    grid: &Arc<RadialGrid>,
    profiles: &ProfileSet,
) -> Result<ResidualReport> {
    let image = solver::picard_step(problem, grid, profiles)?;
    let mut sup = 0.0;
    let mut node_of_max = 0;
    for (a, b) in image.profiles().iter().zip(profiles.profiles()) {
        for (k, (x, y)) in a.iter().zip(b).enumerate() {
            let d = (x - y).abs();
            if d > sup {
                sup = d;
                node_of_max = k;
            }
        }
    }
    let op = RadialOperator::new(problem, problem.coefficients(), grid, problem.beta())?;
    let ode = ode_residual(problem, grid, profiles, op.forcing())?;
    Ok(ResidualReport {
        sup_fixed_point_residual: sup,
        sup_ode_residual_interior: ode,
        node_of_max,
    })
}

/// `(p-1) (u')^(p-2) u'' + ((N-1)/r) (u')^(p-1) - a f(u)` by three-point
/// differences on the (possibly nonuniform) grid.
fn ode_residual(
    problem: &ProblemSpec,
    grid: &RadialGrid,
    profiles: &ProfileSet,
    coefficients: &[Vec<f64>],
) -> Result<f64> {
    let r = grid.nodes();
    let n = r.len();
    let m = problem.m();
    let p = problem.p();
    let spatial = f64::from(problem.dimension()) - 1.0;
    let mut point = vec![0.0; m];
    let mut sup = 0.0f64;
    for k in 2..n.saturating_sub(2) {
        let (h1, h2) = (r[k] - r[k - 1], r[k + 1] - r[k]);
        for (i, x) in point.iter_mut().enumerate() {
            *x = profiles.profile(i)[k];
        }
        #[allow(clippy::needless_range_loop)]
        for i in 0..m {
            let u = profiles.profile(i);
            let (back, fwd) = (u[k - 1] - u[k], u[k + 1] - u[k]);
            let d1 = (h1 / (h2 * (h1 + h2))) * fwd - (h2 / (h1 * (h1 + h2))) * back;
            let d2 = 2.0 * (h2 * back + h1 * fwd) / (h1 * h2 * (h1 + h2));
            // u' >= 0 analytically; differencing noise below zero is dropped.
            let d1 = d1.max(0.0);
            let diffusion = if d1 == 0.0 && p < 2.0 {
                0.0
            } else {
                (p - 1.0) * d1.powf(p - 2.0) * d2
            };
            let lhs = diffusion + spatial / r[k] * d1.powf(p - 1.0);
            let a = coefficients[i][k];
            let rhs = if a == 0.0 {
                0.0
            } else {
                a * problem.nonlinearities()[i].eval_slice(&point)?
            };
            let res = (lhs - rhs).abs();
            if !res.is_finite() {
                return Err(Error::NonFiniteValue {
                    component: i,
                    node: k,
                    radius: r[k],
                });
            }
            sup = sup.max(res);
        }
    }
    Ok(sup)
}

/// First place where an iterate falls below its predecessor, if any.
pub fn check_monotone_in_k(history: &[ProfileSet]) -> Option<MonotoneViolation> {
    history
        .windows(2)
        .enumerate()
        .find_map(|(k, pair)| find_decrease(&pair[0], &pair[1], k + 1))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind")]
pub enum GrowthClass {
    Saturating,
    /// `exponent` is `None` when a solve hit the value cap.
    Growing {
        exponent: Option<f64>,
    },
    Inconclusive,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GrowthReport {
    pub domain_radii: Vec<f64>,
    pub sup_values: Vec<f64>,
    /// `log2(sup(2R) / sup(R))` for consecutive radii.
    pub slopes: Vec<f64>,
    pub converged: Vec<bool>,
    pub capped: Vec<bool>,
    pub classification: GrowthClass,
}

/// Grid for the k-th domain of a sweep: uniform, with the spacing of
/// `base_points` nodes on `[0, base_r]`, so every domain shares the nodes of
/// the smaller ones.
pub fn sweep_grid(base_r: f64, base_points: usize, k: u32) -> Result<Arc<RadialGrid>> {
    let scale = 1usize << k;
    make_grid(
        base_r * scale as f64,
        (base_points - 1) * scale + 1,
        Grading::Uniform,
    )
}

/// Solves on `[0, R], [0, 2R], ..., [0, 2^d R]` and classifies the growth of
/// `sup u` with the domain.
pub fn classify_growth(
    problem: &ProblemSpec,
    base_r: f64,
    base_points: usize,
    doublings: u32,
    config: &IterationConfig,
) -> Result<GrowthReport> {
    if doublings < 2 {
        return Err(Error::InvalidArgument(format!(
            "growth classification needs at least 2 doublings, got {doublings}"
        )));
    }
    if doublings > 20 {
        return Err(Error::InvalidArgument(format!(
            "{doublings} doublings is too many"
        )));
    }
    let runs = (0..=doublings)
        .into_par_iter()
        .map(|k| {
            let grid = sweep_grid(base_r, base_points, k)?;
            let (u, report) = solver::solve_radial_system(problem, &grid, config)?;
            Ok((grid.r_max(), u.sup(), report.converged, report.capped))
        })
        .collect::<Result<Vec<_>>>()?;

    let domain_radii: Vec<f64> = runs.iter().map(|r| r.0).collect();
    let sup_values: Vec<f64> = runs.iter().map(|r| r.1).collect();
    let converged: Vec<bool> = runs.iter().map(|r| r.2).collect();
    let capped: Vec<bool> = runs.iter().map(|r| r.3).collect();
    let slopes: Vec<f64> = sup_values
        .windows(2)
        .map(|w| (w[1] / w[0]).log2())
        .collect();
    let classification = classify(&sup_values, &slopes, &converged, &capped);
    Ok(GrowthReport {
        domain_radii,
        sup_values,
        slopes,
        converged,
        capped,
        classification,
    })
}

fn classify(sup: &[f64], slopes: &[f64], converged: &[bool], capped: &[bool]) -> GrowthClass {
    if capped.iter().any(|&c| c) {
        return GrowthClass::Growing { exponent: None };
    }
    if !converged.iter().all(|&c| c) {
        return GrowthClass::Inconclusive;
    }
    let n = sup.len();
    if (sup[n - 1] - sup[n - 2]) < SATURATION_TOL * sup[n - 2].abs() {
        return GrowthClass::Saturating;
    }
    let last = slopes[slopes.len() - 1];
    let prev = slopes[slopes.len() - 2];
    let stable = (last - prev).abs() <= SLOPE_STABILITY * last.abs().max(1.0);
    let accelerating =
        slopes.iter().all(|&s| s > MIN_GROWTH_EXPONENT) && slopes.windows(2).all(|w| w[1] >= w[0]);
    if last > MIN_GROWTH_EXPONENT && (stable || accelerating) {
        GrowthClass::Growing {
            exponent: Some(last),
        }
    } else {
        GrowthClass::Inconclusive
    }
}
