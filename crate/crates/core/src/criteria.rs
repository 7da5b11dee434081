//! Finite-versus-infinite classification of the improper integrals that gate
//! existence of bounded solutions and largeness of all solutions.
//!
//! Integrals are never evaluated to a number. The classifier first fits the
//! power-law tail exponent of the integrand over far octaves; when the fit
//! lands within [`SLOPE_MARGIN`] of the critical exponent `-1` it falls back to
//! comparing partial integrals over doubling windows.

use std::sync::Arc;

use serde::Serialize;

use crate::expr::{self, Expression};
use crate::grid::{cumulative_trapezoid, make_grid, weighted_inner_into, Grading, RadialGrid};
use crate::solver::ProblemSpec;
use crate::{Error, Result};

/// Distance from `-1` inside which the slope test defers to the window test.
pub const SLOPE_MARGIN: f64 = 0.05;
/// Window increments shrinking at least this fast count as geometric decay.
pub const DECAY_RATIO: f64 = 0.9;
/// Relative slack for "non-decreasing" window increments.
pub const NONDECREASING_SLACK: f64 = 1e-6;
/// Integrand values above `-NEGATIVE_SLACK` are treated as zero.
pub const NEGATIVE_SLACK: f64 = 1e-12;
/// Doublings between `t_lo` and the far end of the evidence range for closed-form integrands.
pub const OCTAVES: i32 = 32;
pub const DEFAULT_SAMPLES: usize = 33;
pub const DEFAULT_EPSILON: f64 = 0.5;
pub const EPSILON_SCAN: [f64; 4] = [0.01, 0.1, 0.5, 1.0];
/// Relative drop in the weight that counts as a decrease.
pub const WEIGHT_SLACK: f64 = 1e-10;

/// Geometric grid on which integrands without a closed form are tabulated.
const TABLE_R_MAX: f64 = 1e8;
const TABLE_POINTS: usize = 8001;
const TABLE_RATIO: f64 = 1.005;

/// Number of far windows that must agree in the slope test.
const STABLE_WINDOWS: usize = 3;
/// Number of trailing window increments examined by the window test.
const RATIO_WINDOWS: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum VerdictKind {
    ConvergesFinite,
    Diverges,
    Inconclusive,
}

/// Which test decided the verdict.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    TailSlope,
    WindowRatio,
    /// The integrand vanishes (or is infinite) on every sample.
    Degenerate,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Verdict {
    pub kind: VerdictKind,
    pub stage: Stage,
    /// Mean fitted exponent over the far windows; `-inf` for tails that vanish.
    pub tail_exponent_estimate: f64,
    /// Partial integrals over `[2^k t_lo, 2^(k+1) t_lo]`.
    pub window_increments: Vec<f64>,
    pub evidence_range: (f64, f64),
    pub degenerate: bool,
}

impl Verdict {
    pub fn converges(&self) -> bool {
        self.kind == VerdictKind::ConvergesFinite
    }

    pub fn diverges(&self) -> bool {
        self.kind == VerdictKind::Diverges
    }
}

/// Classifies `∫_{t_lo}^∞ h(t) dt` from samples of `h` on `[t_lo, t_hi]`.
pub fn classify_tail(
    h: impl Fn(f64) -> Result<f64>,
    t_lo: f64,
    t_hi: f64,
    samples: usize,
) -> Result<Verdict> {
    if !(t_lo > 0.0) || !(t_hi >= 8.0 * t_lo) {
        return Err(Error::InvalidArgument(format!(
            "evidence range [{t_lo}, {t_hi}] must start above 0 and span three octaves"
        )));
    }
    let samples = samples.max(5) | 1;
    let sample = |t: f64| -> Result<f64> {
        let v = h(t)?;
        if v.is_nan() {
            return Err(Error::NonFiniteValue {
                component: 0,
                node: 0,
                radius: t,
            });
        }
        if v < -NEGATIVE_SLACK {
            return Err(Error::NonPositiveIntegrand { at: t, value: v });
        }
        Ok(v.max(0.0))
    };

    // Stage 1: log-log slope over [T, 4T] for T = t_lo 2^j.
    let mut slopes = Vec::new();
    let mut all_zero = true;
    let mut any_infinite = false;
    let mut start = t_lo;
    while 4.0 * start <= t_hi * (1.0 + 1e-12) {
        let ts: Vec<f64> = (0..samples)
            .map(|i| start * 4f64.powf(i as f64 / (samples - 1) as f64))
            .collect();
        let vs = ts.iter().map(|&t| sample(t)).collect::<Result<Vec<_>>>()?;
        all_zero &= vs.iter().all(|&v| v == 0.0);
        any_infinite |= vs.iter().any(|v| v.is_infinite());
        slopes.push(log_slope(&ts, &vs));
        start *= 2.0;
    }
    let range = (t_lo, t_hi);
    if all_zero || any_infinite {
        return Ok(Verdict {
            kind: if any_infinite {
                VerdictKind::Diverges
            } else {
                VerdictKind::ConvergesFinite
            },
            stage: Stage::Degenerate,
            tail_exponent_estimate: if any_infinite {
                f64::INFINITY
            } else {
                f64::NEG_INFINITY
            },
            window_increments: Vec::new(),
            evidence_range: range,
            degenerate: true,
        });
    }
    let far = &slopes[slopes.len() - STABLE_WINDOWS..];
    let exponent = far.iter().sum::<f64>() / STABLE_WINDOWS as f64;
    let exponent = if exponent.is_nan() {
        f64::NEG_INFINITY
    } else {
        exponent
    };

    // Window increments are always reported, even when stage 1 decides.
    let mut increments = Vec::new();
    let mut lo = t_lo;
    while 2.0 * lo <= t_hi * (1.0 + 1e-12) {
        increments.push(log_simpson(&sample, lo, 2.0 * lo, samples)?);
        lo *= 2.0;
    }

    let verdict = |kind, stage| Verdict {
        kind,
        stage,
        tail_exponent_estimate: exponent,
        window_increments: increments.clone(),
        evidence_range: range,
        degenerate: false,
    };
    if far.iter().all(|&s| s <= -1.0 - SLOPE_MARGIN) {
        return Ok(verdict(VerdictKind::ConvergesFinite, Stage::TailSlope));
    }
    if far.iter().all(|&s| s >= -1.0 + SLOPE_MARGIN) {
        return Ok(verdict(VerdictKind::Diverges, Stage::TailSlope));
    }

    // Stage 2: compare trailing window increments.
    let tail = &increments[increments.len().saturating_sub(RATIO_WINDOWS)..];
    let decays = tail.windows(2).all(|w| w[1] <= DECAY_RATIO * w[0]);
    let nondecreasing = tail
        .windows(2)
        .all(|w| w[1] >= w[0] * (1.0 - NONDECREASING_SLACK) && w[1] > 0.0);
    let kind = if decays {
        VerdictKind::ConvergesFinite
    } else if nondecreasing {
        VerdictKind::Diverges
    } else {
        VerdictKind::Inconclusive
    };
    Ok(verdict(kind, Stage::WindowRatio))
}

/// Least-squares slope of `ln v` against `ln t`; vanishing tails give `-inf`.
fn log_slope(ts: &[f64], vs: &[f64]) -> f64 {
    if vs.contains(&0.0) {
        // Zero at the far end means the integrand dies out; zero only near the
        // start means it switches on, which reads as growth.
        return if *vs.last().unwrap() == 0.0 {
            f64::NEG_INFINITY
        } else {
            f64::INFINITY
        };
    }
    let n = ts.len() as f64;
    let xs: Vec<f64> = ts.iter().map(|t| t.ln()).collect();
    let ys: Vec<f64> = vs.iter().map(|v| v.ln()).collect();
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    sxy / sxx
}

/// Simpson's rule for `∫_a^b h` after the substitution `t = e^x`.
fn log_simpson(h: &impl Fn(f64) -> Result<f64>, a: f64, b: f64, samples: usize) -> Result<f64> {
    let (xa, xb) = (a.ln(), b.ln());
    let intervals = samples - 1;
    let dx = (xb - xa) / intervals as f64;
    let mut acc = 0.0;
    for i in 0..=intervals {
        let t = if i == intervals {
            b
        } else {
            (xa + i as f64 * dx).exp()
        };
        let w = if i == 0 || i == intervals {
            1.0
        } else if i % 2 == 1 {
            4.0
        } else {
            2.0
        };
        acc += w * h(t)? * t;
    }
    Ok(acc * dx / 3.0)
}

/// Classifies `∫_{t_lo}^∞ integrand(t) dt` for a closed-form integrand in one variable.
pub fn classify_improper_integral(
    integrand: &Expression,
    t_lo: f64,
    samples: usize,
) -> Result<Verdict> {
    if integrand.variables().len() != 1 {
        return Err(Error::InvalidArgument(
            "integrand must be an expression in a single variable".into(),
        ));
    }
    classify_tail(
        |t| integrand.eval1(t).map_err(Error::from),
        t_lo,
        t_lo * 2f64.powi(OCTAVES),
        samples,
    )
}

/// A function known at grid nodes, interpolated log-linearly in between and
/// extended past the last node by the power law fitted on its last octave.
struct Tabulated {
    ln_t: Vec<f64>,
    values: Vec<f64>,
    tail_coeff: f64,
    tail_exponent: f64,
}

impl Tabulated {
    fn new(nodes: &[f64], values: &[f64]) -> Self {
        let (ln_t, values): (Vec<f64>, Vec<f64>) = nodes
            .iter()
            .zip(values)
            .filter(|(t, _)| **t > 0.0)
            .map(|(t, v)| (t.ln(), *v))
            .unzip();
        let last = *ln_t.last().unwrap();
        let from = ln_t.partition_point(|&x| x < last - std::f64::consts::LN_2);
        let (xs, ys) = (&ln_t[from..], &values[from..]);
        let (tail_coeff, tail_exponent) = if ys.iter().all(|&v| v > 0.0 && v.is_finite()) {
            let ts: Vec<f64> = xs.iter().map(|x| x.exp()).collect();
            let slope = log_slope(&ts, ys);
            let n = xs.len() as f64;
            let intercept =
                ys.iter().map(|v| v.ln()).sum::<f64>() / n - slope * xs.iter().sum::<f64>() / n;
            (intercept.exp(), slope)
        } else {
            (0.0, 0.0)
        };
        Tabulated {
            ln_t,
            values,
            tail_coeff,
            tail_exponent,
        }
    }

    fn eval(&self, t: f64) -> f64 {
        let x = t.ln();
        let last = self.ln_t.len() - 1;
        if x >= self.ln_t[last] {
            if x == self.ln_t[last] {
                return self.values[last];
            }
            return self.tail_coeff * t.powf(self.tail_exponent);
        }
        if x <= self.ln_t[0] {
            return self.values[0];
        }
        let k = self.ln_t.partition_point(|&v| v <= x);
        let (x0, x1) = (self.ln_t[k - 1], self.ln_t[k]);
        let (y0, y1) = (self.values[k - 1], self.values[k]);
        let w = (x - x0) / (x1 - x0);
        if y0 > 0.0 && y1 > 0.0 && y0.is_finite() && y1.is_finite() {
            (y0.ln() * (1.0 - w) + y1.ln() * w).exp()
        } else {
            y0 * (1.0 - w) + y1 * w
        }
    }
}

fn table_grid() -> Arc<RadialGrid> {
    make_grid(TABLE_R_MAX, TABLE_POINTS, Grading::Geometric(TABLE_RATIO))
        .expect("static tail grid parameters are valid")
}

fn classify_tabulated(nodes: &[f64], values: &[f64], t_lo: f64) -> Result<Verdict> {
    let table = Tabulated::new(nodes, values);
    let t_hi = 2.0 * nodes[nodes.len() - 1];
    classify_tail(|t| Ok(table.eval(t)), t_lo, t_hi, DEFAULT_SAMPLES)
}

fn check_nonlinearity_arity(nonlinearities: &[Expression], m: usize) -> Result<()> {
    let names = expr::unknown_names(m);
    if nonlinearities.len() != m
        || nonlinearities
            .iter()
            .any(|f| f.variables() != names.as_slice())
    {
        return Err(Error::InvalidArgument(format!(
            "expected {m} nonlinearities in u1..u{m}"
        )));
    }
    Ok(())
}

/// `∫_1^∞ F(s)^(-1/p) ds` where `F' = g` and `F(0) = 0`, with `g` tabulated.
fn keller_osserman(diagonal: &Expression, p: f64) -> Result<Verdict> {
    let grid = table_grid();
    let nodes = grid.nodes();
    let g = nodes
        .iter()
        .map(|&s| diagonal.eval1(s).map_err(Error::from))
        .collect::<Result<Vec<f64>>>()?;
    let mut primitive = vec![0.0; nodes.len()];
    cumulative_trapezoid(nodes, &g, &mut primitive);
    let integrand: Vec<f64> = primitive
        .iter()
        .map(|&big_f| {
            if big_f > 0.0 {
                big_f.powf(-1.0 / p)
            } else {
                f64::INFINITY
            }
        })
        .collect();
    classify_tabulated(nodes, &integrand, 1.0)
}

/// Keller-Osserman type condition on `F(s) = ∫_0^s Σ_i f_i(t, ..., t) dt`.
/// `Diverges` means the condition holds.
pub fn check_c3(nonlinearities: &[Expression], m: usize, p: f64) -> Result<Verdict> {
    check_nonlinearity_arity(nonlinearities, m)?;
    keller_osserman(&Expression::sum(nonlinearities)?.diagonal("s")?, p)
}

/// The same integral built from a single component `f_i`.
pub fn check_component_c3(nonlinearity: &Expression, m: usize, p: f64) -> Result<Verdict> {
    if nonlinearity.variables() != expr::unknown_names(m).as_slice() {
        return Err(Error::InvalidArgument(format!(
            "expected a nonlinearity in u1..u{m}"
        )));
    }
    keller_osserman(&nonlinearity.diagonal("s")?, p)
}

/// `∫_1^∞ (Σ_i f_i(s, ..., s))^(-1/(p-1)) ds`.
pub fn check_reciprocal_growth(nonlinearities: &[Expression], m: usize, p: f64) -> Result<Verdict> {
    check_nonlinearity_arity(nonlinearities, m)?;
    let diagonal = Expression::sum(nonlinearities)?.diagonal("s")?;
    let exponent = -1.0 / (p - 1.0);
    classify_tail(
        |s| {
            let g = diagonal.eval1(s)?;
            Ok(if g > 0.0 {
                g.powf(exponent)
            } else {
                f64::INFINITY
            })
        },
        1.0,
        2f64.powi(OCTAVES),
        DEFAULT_SAMPLES,
    )
}

fn radial_sum(coefficients: &[Expression], t: f64) -> Result<f64> {
    let mut total = 0.0;
    for a in coefficients {
        total += a.eval1(t)?;
    }
    Ok(total)
}

fn check_radial(coefficients: &[Expression]) -> Result<()> {
    if coefficients.is_empty() || coefficients.iter().any(|a| a.variables().len() != 1) {
        return Err(Error::InvalidArgument(
            "coefficients must be a nonempty list of expressions in one variable".into(),
        ));
    }
    Ok(())
}

/// `∫_0^∞ t^(1+ε) (Σ φ_j(t))^(2/p) dt`; `ConvergesFinite` means the
/// existence hypothesis holds for this ε.
pub fn check_condition_5(phi: &[Expression], p: f64, epsilon: f64) -> Result<Verdict> {
    power_weighted(phi, p, epsilon)
}

/// `∫_0^∞ r^(1+ε) (Σ a_j(r))^(2/p) dr`; `ConvergesFinite` rules out an entire
/// large solution.
pub fn check_condition_13(a: &[Expression], p: f64, epsilon: f64) -> Result<Verdict> {
    power_weighted(a, p, epsilon)
}

fn power_weighted(coefficients: &[Expression], p: f64, epsilon: f64) -> Result<Verdict> {
    check_radial(coefficients)?;
    if !(epsilon > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "epsilon must be positive, got {epsilon}"
        )));
    }
    let exponent = 2.0 / p;
    classify_tail(
        |t| {
            let s = radial_sum(coefficients, t)?;
            Ok(t.powf(1.0 + epsilon) * clamp_small_negative(s).powf(exponent))
        },
        1.0,
        2f64.powi(OCTAVES),
        DEFAULT_SAMPLES,
    )
}

/// `∫_0^∞ t^(1/(p-1)) Σ ψ_j(t)^(1/(p-1)) dt`; `Diverges` means no bounded
/// entire radial solution exists.
pub fn check_condition_5b(psi: &[Expression], p: f64) -> Result<Verdict> {
    check_radial(psi)?;
    if !(p > 1.0) {
        return Err(Error::InvalidArgument(format!("p must exceed 1, got {p}")));
    }
    let q = 1.0 / (p - 1.0);
    classify_tail(
        |t| {
            let mut total = 0.0;
            for psi_j in psi {
                total += clamp_small_negative(psi_j.eval1(t)?).powf(q);
            }
            Ok(t.powf(q) * total)
        },
        1.0,
        2f64.powi(OCTAVES),
        DEFAULT_SAMPLES,
    )
}

fn clamp_small_negative(v: f64) -> f64 {
    if (-NEGATIVE_SLACK..0.0).contains(&v) {
        0.0
    } else {
        v
    }
}

/// `∫_0^∞ (t^(1-N) ∫_0^t s^(N-1) a_j(s) ds)^(1/(p-1)) dt` for each j.
/// All `Diverges` means every nontrivial solution is large.
pub fn check_condition_12(a: &[Expression], dimension: u32, p: f64) -> Result<Vec<Verdict>> {
    check_radial(a)?;
    if !(f64::from(dimension) - 1.0 >= p && p > 1.0) {
        return Err(Error::InvalidArgument(format!(
            "N - 1 >= p > 1 is required, got N = {dimension}, p = {p}"
        )));
    }
    let grid = table_grid();
    let nodes = grid.nodes();
    let weights = grid.radial_weights(dimension);
    let q = 1.0 / (p - 1.0);
    a.iter()
        .map(|a_j| {
            let values = nodes
                .iter()
                .map(|&s| a_j.eval1(s).map_err(Error::from))
                .collect::<Result<Vec<f64>>>()?;
            if let Some((k, v)) = values
                .iter()
                .enumerate()
                .find(|(_, v)| **v < -NEGATIVE_SLACK)
            {
                return Err(Error::NonPositiveIntegrand {
                    at: nodes[k],
                    value: *v,
                });
            }
            let mut inner = vec![0.0; nodes.len()];
            weighted_inner_into(nodes, &weights, &values, &mut inner);
            let outer: Vec<f64> = inner.iter().map(|v| v.max(0.0).powf(q)).collect();
            classify_tabulated(nodes, &outer, 1.0)
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind")]
pub enum WeightMonotonicity {
    /// No decrease from node `index` (radius `radius`) through `2 r_max`.
    FromRadius {
        index: usize,
        radius: f64,
    },
    NotEventuallyMonotone {
        last_decrease_at: f64,
    },
}

impl WeightMonotonicity {
    pub fn is_monotone(&self) -> bool {
        matches!(self, WeightMonotonicity::FromRadius { .. })
    }
}

/// Checks that `r^(p(N-1)/(p-1)) Σ φ_j(r)` is nondecreasing for large r.
pub fn check_weight_monotonicity(
    phi: &[Expression],
    p: f64,
    dimension: u32,
    grid: &RadialGrid,
) -> Result<WeightMonotonicity> {
    check_radial(phi)?;
    let power = p * (f64::from(dimension) - 1.0) / (p - 1.0);
    let weight = |r: f64| -> Result<f64> { Ok(r.powf(power) * radial_sum(phi, r)?) };
    let nodes = grid.nodes();
    let values = nodes
        .iter()
        .map(|&r| weight(r))
        .collect::<Result<Vec<f64>>>()?;
    let decreases = |lo: f64, hi: f64| hi < lo - WEIGHT_SLACK * lo.abs();
    let last_drop = (1..nodes.len())
        .rev()
        .find(|&k| decreases(values[k - 1], values[k]));
    let r_max = grid.r_max();
    let beyond = weight(2.0 * r_max)?;
    if decreases(values[values.len() - 1], beyond) {
        return Ok(WeightMonotonicity::NotEventuallyMonotone {
            last_decrease_at: 2.0 * r_max,
        });
    }
    Ok(match last_drop {
        None => WeightMonotonicity::FromRadius {
            index: 0,
            radius: 0.0,
        },
        Some(k) if nodes[k] > 0.5 * r_max => WeightMonotonicity::NotEventuallyMonotone {
            last_decrease_at: nodes[k],
        },
        Some(k) => WeightMonotonicity::FromRadius {
            index: k,
            radius: nodes[k],
        },
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", content = "details")]
pub enum Prediction {
    BoundedExists,
    NoBoundedRadial,
    AllSolutionsLarge,
    Inconclusive,
    Conflict(Vec<String>),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EpsilonVerdict {
    pub epsilon: f64,
    pub verdict: Verdict,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CriteriaReport {
    pub c3: Verdict,
    pub cond5: EpsilonVerdict,
    pub cond5b: Verdict,
    pub cond12: Vec<Verdict>,
    pub cond13: EpsilonVerdict,
    pub weight_monotone: WeightMonotonicity,
    pub prediction: Prediction,
    /// Every coefficient vanishes on the sampled grid.
    pub degenerate_coefficients: bool,
    /// Sampled sign and monotonicity checks on the nonlinearities passed.
    pub nonlinearities_valid: bool,
    pub notes: Vec<String>,
}

/// Grid used by [`predict`] for the weight test.
pub fn default_weight_grid() -> Arc<RadialGrid> {
    make_grid(20.0, 2001, Grading::Uniform).expect("static grid parameters are valid")
}

/// The problem grid when it is long enough to show tail behaviour, else the default.
pub fn weight_grid_for(problem_grid: &Arc<RadialGrid>) -> Arc<RadialGrid> {
    if problem_grid.r_max() >= 10.0 {
        problem_grid.clone()
    } else {
        default_weight_grid()
    }
}

pub fn predict(problem: &ProblemSpec, epsilon: f64) -> Result<CriteriaReport> {
    predict_on(problem, epsilon, &default_weight_grid())
}

/// Runs every check and applies the decision table:
///
/// 1. `c3` diverges, `cond5` converges, weight monotone: a bounded solution exists.
/// 2. `cond5b` diverges: no bounded entire radial solution.
/// 3. radial coefficients, `c3` diverges, every `cond12` diverges, weight
///    monotone: all solutions are large.
///
/// Branch 1 together with 2 or 3 is a conflict. Branches 2 and 3 agree (both
/// assert unboundedness) and report as 3.
pub fn predict_on(
    problem: &ProblemSpec,
    epsilon: f64,
    grid: &RadialGrid,
) -> Result<CriteriaReport> {
    let m = problem.m();
    let p = problem.p();
    let phi = problem.coefficients();
    let psi = problem.lower_or_coefficients();

    let validation =
        expr::validate_nonlinearity(problem.nonlinearities(), m, 10.0, 11).map_err(Error::from)?;
    let c3 = check_c3(problem.nonlinearities(), m, p)?;
    let cond5 = check_condition_5(phi, p, epsilon)?;
    let cond5b = check_condition_5b(psi, p)?;
    let cond12 = check_condition_12(phi, problem.dimension(), p)?;
    let cond13 = check_condition_13(phi, p, epsilon)?;
    let weight_monotone = check_weight_monotonicity(phi, p, problem.dimension(), grid)?;

    let mut degenerate = true;
    for &r in grid.nodes() {
        if radial_sum(phi, r)? != 0.0 {
            degenerate = false;
            break;
        }
    }
    let radial = problem
        .coefficients_lower()
        .is_none_or(|lower| lower == phi);

    let mut notes = validation.warnings();
    let bounded = c3.diverges() && cond5.converges() && weight_monotone.is_monotone();
    let no_bounded = cond5b.diverges();
    let large = radial
        && c3.diverges()
        && cond12.iter().all(Verdict::diverges)
        && weight_monotone.is_monotone();

    let prediction = if degenerate {
        notes.push("all coefficients vanish on the sampled grid".into());
        Prediction::Inconclusive
    } else if !validation.passed() {
        notes.push("nonlinearities fail sampled sign/monotonicity checks".into());
        Prediction::Inconclusive
    } else if bounded && (no_bounded || large) {
        let mut details = vec![format!(
            "bounded existence fires (c3 {:?}, cond5 {:?} at eps = {epsilon}, weight monotone)",
            c3.kind, cond5.kind
        )];
        if no_bounded {
            details.push(format!(
                "cond5b {:?}: no bounded radial solution",
                cond5b.kind
            ));
        }
        if large {
            details.push("cond12 diverges for every component: all solutions large".into());
        }
        Prediction::Conflict(details)
    } else if large {
        if no_bounded {
            notes.push(
                "cond5b also diverges (no bounded radial solution), consistent with largeness"
                    .into(),
            );
        }
        Prediction::AllSolutionsLarge
    } else if no_bounded {
        Prediction::NoBoundedRadial
    } else if bounded {
        Prediction::BoundedExists
    } else {
        Prediction::Inconclusive
    };
    if large && cond13.converges() {
        notes.push(format!(
            "cond13 converges at eps = {epsilon}, which is incompatible with an entire large solution"
        ));
    }

    Ok(CriteriaReport {
        c3,
        cond5: EpsilonVerdict {
            epsilon,
            verdict: cond5,
        },
        cond5b,
        cond12,
        cond13: EpsilonVerdict {
            epsilon,
            verdict: cond13,
        },
        weight_monotone,
        prediction,
        degenerate_coefficients: degenerate,
        nonlinearities_valid: validation.passed(),
        notes,
    })
}
