//! Monotone successive approximation for the radial system
//!
//! ```text
//! u_i(r) = β + ∫_0^r ( t^(1-N) ∫_0^t s^(N-1) a_i(s) f_i(u_1(s), ..., u_m(s)) ds )^(1/(p-1)) dt
//! ```
//!
//! Each step evaluates the right-hand side on the previous iterate for every
//! component at once (Jacobi order). Starting from the constant `β`, iterates
//! increase in `k` and are nondecreasing in `r` whenever `a_i >= 0` and the
//! `f_i` are coordinatewise nondecreasing.

use std::sync::Arc;

use serde::Serialize;

use crate::expr::{self, Expression};
use crate::grid::{cumulative_trapezoid, weighted_inner_into, RadialGrid};
use crate::{Error, Result};

/// Relative slack when comparing consecutive iterates for monotonicity.
pub const MONOTONE_SLACK: f64 = 1e-12;

/// One instance of the system: sizes, exponents, coefficients and nonlinearities.
#[derive(Debug, Clone, PartialEq)]
pub struct ProblemSpec {
    p: f64,
    dimension: u32,
    coefficients: Vec<Expression>,
    coefficients_lower: Option<Vec<Expression>>,
    nonlinearities: Vec<Expression>,
    beta: f64,
}

impl ProblemSpec {
    /// Coefficients must be expressions in `r`, nonlinearities in `u1..um`.
    /// `beta` defaults to `1/m`.
    pub fn new(
        p: f64,
        dimension: u32,
        coefficients: Vec<Expression>,
        coefficients_lower: Option<Vec<Expression>>,
        nonlinearities: Vec<Expression>,
        beta: Option<f64>,
    ) -> Result<Self> {
        let m = nonlinearities.len();
        if m == 0 {
            return Err(Error::InvalidArgument(
                "at least one equation is required".into(),
            ));
        }
        if !(p > 1.0) || !p.is_finite() {
            return Err(Error::InvalidArgument(format!("p must exceed 1, got {p}")));
        }
        if !(f64::from(dimension) - 1.0 >= p) {
            return Err(Error::InvalidArgument(format!(
                "N - 1 >= p is required, got N = {dimension}, p = {p}"
            )));
        }
        if coefficients.len() != m {
            return Err(Error::InvalidArgument(format!(
                "{} coefficients for {m} equations",
                coefficients.len()
            )));
        }
        let radial = ["r".to_string()];
        for a in coefficients
            .iter()
            .chain(coefficients_lower.iter().flatten())
        {
            if a.variables() != radial {
                return Err(Error::InvalidArgument(format!(
                    "coefficient `{a}` must be an expression in r"
                )));
            }
        }
        if let Some(lower) = &coefficients_lower {
            if lower.len() != m {
                return Err(Error::InvalidArgument(format!(
                    "{} lower coefficients for {m} equations",
                    lower.len()
                )));
            }
        }
        let unknowns = expr::unknown_names(m);
        for f in &nonlinearities {
            if f.variables() != unknowns.as_slice() {
                return Err(Error::InvalidArgument(format!(
                    "nonlinearity `{f}` must be an expression in u1..u{m}"
                )));
            }
        }
        let beta = beta.unwrap_or(1.0 / m as f64);
        if !(beta > 0.0) || !beta.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "beta must be positive, got {beta}"
            )));
        }
        Ok(ProblemSpec {
            p,
            dimension,
            coefficients,
            coefficients_lower,
            nonlinearities,
            beta,
        })
    }

    /// Parses coefficient and nonlinearity sources and builds the problem.
    pub fn from_sources(
        p: f64,
        dimension: u32,
        coefficients: &[&str],
        coefficients_lower: Option<&[&str]>,
        nonlinearities: &[&str],
        beta: Option<f64>,
    ) -> Result<Self> {
        let m = nonlinearities.len();
        let names = expr::unknown_names(m);
        let names: Vec<&str> = names.iter().map(String::as_str).collect();
        let parse_all = |sources: &[&str], vars: &[&str]| -> Result<Vec<Expression>> {
            sources
                .iter()
                .map(|s| expr::parse(s, vars).map_err(Error::from))
                .collect()
        };
        Self::new(
            p,
            dimension,
            parse_all(coefficients, &["r"])?,
            coefficients_lower
                .map(|l| parse_all(l, &["r"]))
                .transpose()?,
            parse_all(nonlinearities, &names)?,
            beta,
        )
    }

    pub fn m(&self) -> usize {
        self.nonlinearities.len()
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn dimension(&self) -> u32 {
        self.dimension
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn coefficients(&self) -> &[Expression] {
        &self.coefficients
    }

    pub fn coefficients_lower(&self) -> Option<&[Expression]> {
        self.coefficients_lower.as_deref()
    }

    /// The lower coefficients if given, otherwise the coefficients themselves
    /// (radially symmetric data has equal spherical max and min).
    pub fn lower_or_coefficients(&self) -> &[Expression] {
        self.coefficients_lower
            .as_deref()
            .unwrap_or(&self.coefficients)
    }

    pub fn nonlinearities(&self) -> &[Expression] {
        &self.nonlinearities
    }

    pub fn with_beta(&self, beta: f64) -> Result<Self> {
        Self::new(
            self.p,
            self.dimension,
            self.coefficients.clone(),
            self.coefficients_lower.clone(),
            self.nonlinearities.clone(),
            Some(beta),
        )
    }

    /// Same problem with the main coefficients replaced.
    pub fn with_coefficients(&self, coefficients: Vec<Expression>) -> Result<Self> {
        Self::new(
            self.p,
            self.dimension,
            coefficients,
            None,
            self.nonlinearities.clone(),
            Some(self.beta),
        )
    }

    /// Checks `ψ_j <= φ_j` at every node.
    pub fn check_lower_coefficients(&self, grid: &RadialGrid) -> Result<()> {
        let Some(lower) = &self.coefficients_lower else {
            return Ok(());
        };
        for (j, (phi, psi)) in self.coefficients.iter().zip(lower).enumerate() {
            for &r in grid.nodes() {
                let (hi, lo) = (phi.eval1(r)?, psi.eval1(r)?);
                if lo > hi {
                    return Err(Error::InvalidArgument(format!(
                        "lower coefficient {} exceeds coefficient at r = {r} ({lo} > {hi})",
                        j + 1
                    )));
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IterationConfig {
    pub max_iterations: usize,
    pub abs_tol: f64,
    pub rel_tol: f64,
    /// Iteration stops as soon as any value exceeds this.
    pub value_cap: f64,
}

impl Default for IterationConfig {
    fn default() -> Self {
        IterationConfig {
            max_iterations: 500,
            abs_tol: 1e-10,
            rel_tol: 1e-8,
            value_cap: 1e12,
        }
    }
}

impl IterationConfig {
    pub fn validate(&self, beta: f64) -> Result<()> {
        if self.max_iterations == 0 {
            return Err(Error::InvalidArgument(
                "max_iterations must be positive".into(),
            ));
        }
        if !(self.abs_tol > 0.0) || !(self.rel_tol > 0.0) {
            return Err(Error::InvalidArgument("tolerances must be positive".into()));
        }
        if !(self.value_cap > beta) {
            return Err(Error::InvalidArgument(format!(
                "value_cap {} must exceed beta {beta}",
                self.value_cap
            )));
        }
        Ok(())
    }
}

/// The m profiles `u_1, ..., u_m` sampled on a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct ProfileSet {
    grid: Arc<RadialGrid>,
    profiles: Vec<Vec<f64>>,
}

impl ProfileSet {
    pub fn new(grid: Arc<RadialGrid>, profiles: Vec<Vec<f64>>) -> Result<Self> {
        if profiles.is_empty() {
            return Err(Error::InvalidArgument(
                "a profile set needs a component".into(),
            ));
        }
        if let Some(bad) = profiles.iter().find(|p| p.len() != grid.len()) {
            return Err(Error::InvalidArgument(format!(
                "profile of length {} on a grid of {} nodes",
                bad.len(),
                grid.len()
            )));
        }
        Ok(ProfileSet { grid, profiles })
    }

    pub fn constant(grid: Arc<RadialGrid>, m: usize, value: f64) -> Self {
        let profiles = vec![vec![value; grid.len()]; m];
        ProfileSet { grid, profiles }
    }

    pub fn grid(&self) -> &Arc<RadialGrid> {
        &self.grid
    }

    pub fn components(&self) -> usize {
        self.profiles.len()
    }

    pub fn profile(&self, i: usize) -> &[f64] {
        &self.profiles[i]
    }

    pub fn profiles(&self) -> &[Vec<f64>] {
        &self.profiles
    }

    /// Largest absolute value over all components and nodes.
    pub fn sup(&self) -> f64 {
        self.profiles
            .iter()
            .flatten()
            .fold(0.0f64, |acc, v| acc.max(v.abs()))
    }

    /// Largest value of `Σ_i u_i` over the nodes.
    pub fn sup_of_sum(&self) -> f64 {
        (0..self.grid.len())
            .map(|k| self.profiles.iter().map(|p| p[k]).sum::<f64>())
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// Sup-norm distance to another profile set on the same grid.
    pub fn sup_distance(&self, other: &ProfileSet) -> f64 {
        self.profiles
            .iter()
            .zip(&other.profiles)
            .flat_map(|(a, b)| a.iter().zip(b).map(|(x, y)| (x - y).abs()))
            .fold(0.0, f64::max)
    }

    /// First `(component, node)` where some profile decreases in r.
    pub fn first_decrease_in_r(&self) -> Option<(usize, usize)> {
        self.profiles
            .iter()
            .enumerate()
            .find_map(|(i, p)| p.windows(2).position(|w| w[1] < w[0]).map(|k| (i, k + 1)))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MonotoneViolation {
    /// Index k of the iterate that fell below iterate k - 1.
    pub iteration: usize,
    pub component: usize,
    pub node: usize,
    pub magnitude: f64,
}

/// First node where `next < previous - slack (1 + |previous|)`.
pub(crate) fn find_decrease(
    previous: &ProfileSet,
    next: &ProfileSet,
    iteration: usize,
) -> Option<MonotoneViolation> {
    for (i, (a, b)) in previous.profiles.iter().zip(&next.profiles).enumerate() {
        for (k, (&old, &new)) in a.iter().zip(b).enumerate() {
            if new < old - MONOTONE_SLACK * (1.0 + old.abs()) {
                return Some(MonotoneViolation {
                    iteration,
                    component: i,
                    node: k,
                    magnitude: old - new,
                });
            }
        }
    }
    None
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolveReport {
    pub iterations_used: usize,
    pub converged: bool,
    /// `sup |w^k - w^(k-1)|` for k = 1, 2, ...
    pub sup_deltas: Vec<f64>,
    /// Sup-norm of `T[u] - u` for the returned profiles, when converged.
    pub final_residual: Option<f64>,
    pub capped: bool,
    pub monotone_in_k_violation: Option<MonotoneViolation>,
}

/// The fixed-point map with coefficients sampled once on the grid.
pub(crate) struct RadialOperator<'a> {
    grid: Arc<RadialGrid>,
    weights: Arc<crate::grid::RadialWeights>,
    coefficient_values: Vec<Vec<f64>>,
    nonlinearities: &'a [Expression],
    exponent: f64,
    beta: f64,
}

impl<'a> RadialOperator<'a> {
    pub(crate) fn new(
        problem: &'a ProblemSpec,
        coefficients: &[Expression],
        grid: &Arc<RadialGrid>,
        beta: f64,
    ) -> Result<Self> {
        let coefficient_values = coefficients
            .iter()
            .enumerate()
            .map(|(j, a)| {
                grid.nodes()
                    .iter()
                    .enumerate()
                    .map(|(k, &r)| {
                        let v = a.eval1(r)?;
                        if !v.is_finite() {
                            return Err(Error::NonFiniteValue {
                                component: j,
                                node: k,
                                radius: r,
                            });
                        }
                        if v < 0.0 {
                            return Err(Error::InvalidArgument(format!(
                                "coefficient {} is negative at r = {r} ({v})",
                                j + 1
                            )));
                        }
                        Ok(v)
                    })
                    .collect::<Result<Vec<f64>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(RadialOperator {
            grid: grid.clone(),
            weights: grid.radial_weights(problem.dimension),
            coefficient_values,
            nonlinearities: &problem.nonlinearities,
            exponent: 1.0 / (problem.p - 1.0),
            beta,
        })
    }

    pub(crate) fn forcing(&self) -> &[Vec<f64>] {
        &self.coefficient_values
    }

    pub(crate) fn apply(&self, current: &ProfileSet) -> Result<ProfileSet> {
        let n = self.grid.len();
        let m = self.nonlinearities.len();
        let nodes = self.grid.nodes();
        let mut forcing = vec![vec![0.0; n]; m];
        let mut point = vec![0.0; m];
        #[allow(clippy::needless_range_loop)]
        for k in 0..n {
            for (i, x) in point.iter_mut().enumerate() {
                *x = current.profiles[i][k];
            }
            for (i, f) in self.nonlinearities.iter().enumerate() {
                let a = self.coefficient_values[i][k];
                // Zero coefficients switch the equation off regardless of f.
                forcing[i][k] = if a == 0.0 {
                    0.0
                } else {
                    a * f.eval_slice(&point)?
                };
            }
        }
        let mut inner = vec![0.0; n];
        let mut profiles = Vec::with_capacity(m);
        for (i, g) in forcing.iter_mut().enumerate() {
            weighted_inner_into(nodes, &self.weights, g, &mut inner);
            // The inner integral is analytically nonnegative; clamp rounding noise.
            for (dst, &v) in g.iter_mut().zip(&inner) {
                let v = v.max(0.0);
                *dst = if self.exponent == 1.0 {
                    v
                } else {
                    v.powf(self.exponent)
                };
            }
            let mut out = vec![0.0; n];
            cumulative_trapezoid(nodes, g, &mut out);
            for (k, v) in out.iter_mut().enumerate() {
                *v += self.beta;
                if !v.is_finite() {
                    return Err(Error::NonFiniteValue {
                        component: i,
                        node: k,
                        radius: nodes[k],
                    });
                }
            }
            profiles.push(out);
        }
        Ok(ProfileSet {
            grid: self.grid.clone(),
            profiles,
        })
    }
}

fn check_shape(problem: &ProblemSpec, grid: &Arc<RadialGrid>, current: &ProfileSet) -> Result<()> {
    if current.components() != problem.m() {
        return Err(Error::InvalidArgument(format!(
            "{} profiles for {} equations",
            current.components(),
            problem.m()
        )));
    }
    if current.grid.nodes() != grid.nodes() {
        return Err(Error::InvalidArgument(
            "profiles live on a different grid".into(),
        ));
    }
    Ok(())
}

/// One application of the fixed-point map to `current`.
pub fn picard_step(
    problem: &ProblemSpec,
    grid: &Arc<RadialGrid>,
    current: &ProfileSet,
) -> Result<ProfileSet> {
    check_shape(problem, grid, current)?;
    RadialOperator::new(problem, &problem.coefficients, grid, problem.beta)?.apply(current)
}

/// Iterates from the constant `β` until the sup-norm step falls below
/// `abs_tol + rel_tol · sup|u|`, the iteration budget runs out, or a value
/// exceeds `value_cap`.
pub fn solve_radial_system(
    problem: &ProblemSpec,
    grid: &Arc<RadialGrid>,
    config: &IterationConfig,
) -> Result<(ProfileSet, SolveReport)> {
    iterate(
        problem,
        &problem.coefficients,
        grid,
        config,
        problem.beta,
        |_| {},
    )
}

/// As [`solve_radial_system`], also returning every iterate `w^0, w^1, ...`.
pub fn solve_radial_system_traced(
    problem: &ProblemSpec,
    grid: &Arc<RadialGrid>,
    config: &IterationConfig,
) -> Result<(ProfileSet, SolveReport, Vec<ProfileSet>)> {
    let mut history = Vec::new();
    let (u, report) = iterate(
        problem,
        &problem.coefficients,
        grid,
        config,
        problem.beta,
        |w| history.push(w.clone()),
    )?;
    Ok((u, report, history))
}

fn iterate(
    problem: &ProblemSpec,
    coefficients: &[Expression],
    grid: &Arc<RadialGrid>,
    config: &IterationConfig,
    beta: f64,
    mut observe: impl FnMut(&ProfileSet),
) -> Result<(ProfileSet, SolveReport)> {
    config.validate(beta)?;
    let op = RadialOperator::new(problem, coefficients, grid, beta)?;
    let mut current = ProfileSet::constant(grid.clone(), problem.m(), beta);
    observe(&current);
    let mut report = SolveReport {
        iterations_used: 0,
        converged: false,
        sup_deltas: Vec::new(),
        final_residual: None,
        capped: false,
        monotone_in_k_violation: None,
    };
    for k in 1..=config.max_iterations {
        let next = op.apply(&current).map_err(|e| Error::at_iteration(k, e))?;
        observe(&next);
        if report.monotone_in_k_violation.is_none() {
            report.monotone_in_k_violation = find_decrease(&current, &next, k);
        }
        let delta = next.sup_distance(&current);
        report.sup_deltas.push(delta);
        report.iterations_used = k;
        let sup = next.sup();
        current = next;
        if sup > config.value_cap {
            report.capped = true;
            break;
        }
        if delta <= config.abs_tol + config.rel_tol * sup {
            report.converged = true;
            break;
        }
    }
    if report.converged {
        let image = op.apply(&current)?;
        report.final_residual = Some(image.sup_distance(&current));
    }
    Ok((current, report))
}

/// The scalar problem with coefficient `Σ a_i` and nonlinearity
/// `Σ f_i(z, ..., z)`, same `p`, `N` and `β`.
pub fn auxiliary_scalar_problem(problem: &ProblemSpec) -> Result<ProblemSpec> {
    let coefficient = Expression::sum(&problem.coefficients)?;
    let nonlinearity = Expression::sum(&problem.nonlinearities)?.diagonal("u1")?;
    ProblemSpec::new(
        problem.p,
        problem.dimension,
        vec![coefficient],
        None,
        vec![nonlinearity],
        Some(problem.beta),
    )
}

/// Solves the scalar majorant problem; its solution dominates every
/// component of every iterate of the system started from the same `β`.
pub fn solve_auxiliary_scalar(
    problem: &ProblemSpec,
    grid: &Arc<RadialGrid>,
    config: &IterationConfig,
) -> Result<(crate::GridFunction, SolveReport)> {
    let scalar = auxiliary_scalar_problem(problem)?;
    let (z, report) = solve_radial_system(&scalar, grid, config)?;
    let values = z.profiles.into_iter().next().unwrap();
    Ok((crate::GridFunction::new(grid.clone(), values)?, report))
}

/// Lower and upper radial profiles bracketing the system.
#[derive(Debug, Clone, PartialEq)]
pub struct Sandwich {
    /// Solution with the upper envelopes `φ_j`, started at `1/m`.
    pub lower: ProfileSet,
    pub lower_report: SolveReport,
    /// `M = sup_r Σ_i lower_i(r)`.
    pub bound: f64,
    /// Solution with the lower envelopes `ψ_j`, started at `M`.
    pub upper: ProfileSet,
    pub upper_report: SolveReport,
}

/// Builds the lower/upper pair from `φ_j` (coefficients) and `ψ_j`
/// (lower coefficients, defaulting to `φ_j`). The problem's own `β` is not used.
pub fn build_sandwich(
    problem: &ProblemSpec,
    grid: &Arc<RadialGrid>,
    config: &IterationConfig,
) -> Result<Sandwich> {
    problem.check_lower_coefficients(grid)?;
    let m = problem.m();
    let start = 1.0 / m as f64;
    let (lower, lower_report) =
        iterate(problem, &problem.coefficients, grid, config, start, |_| {})?;
    if lower_report.capped {
        return Err(Error::SandwichFailed(format!(
            "lower iteration exceeded the value cap after {} iterations; no bounded lower profile on [0, {}]",
            lower_report.iterations_used,
            grid.r_max()
        )));
    }
    if !lower_report.converged {
        return Err(Error::SandwichFailed(format!(
            "lower iteration did not converge in {} iterations",
            lower_report.iterations_used
        )));
    }
    let bound = lower.sup_of_sum();
    let (upper, upper_report) = iterate(
        problem,
        problem.lower_or_coefficients(),
        grid,
        config,
        bound,
        |_| {},
    )?;

    let min_upper = upper
        .profiles
        .iter()
        .flatten()
        .copied()
        .fold(f64::INFINITY, f64::min);
    let max_lower = lower
        .profiles
        .iter()
        .flatten()
        .copied()
        .fold(f64::NEG_INFINITY, f64::max);
    if !(min_upper >= bound && bound >= max_lower) {
        return Err(Error::Consistency(format!(
            "sandwich ordering failed: min upper {min_upper}, M {bound}, max lower {max_lower}"
        )));
    }
    Ok(Sandwich {
        lower,
        lower_report,
        bound,
        upper,
        upper_report,
    })
}
