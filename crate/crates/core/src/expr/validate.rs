//! Sampled checks of the structural hypotheses on the nonlinearities:
//! `f(0, ..., 0) = 0`, `f >= 0` and coordinatewise monotonicity on the
//! positive orthant. Sampling cannot prove these, it only finds counterexamples.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::{ExprError, Expression};

/// Absolute tolerance for `f(0, ..., 0) = 0`.
pub const ORIGIN_TOLERANCE: f64 = 1e-12;

const NEGATIVE_TOLERANCE: f64 = 1e-12;
const MONOTONE_TOLERANCE: f64 = 1e-12;
const RANDOM_PAIR_SEED: u64 = 0x5eed_0fc2;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PositivityViolation {
    pub function: usize,
    pub point: Vec<f64>,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MonotonicityViolation {
    pub function: usize,
    pub coordinate: usize,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub drop: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidationReport {
    pub f_zero_at_origin: bool,
    /// `f_j(0, ..., 0)` for each j.
    pub origin_values: Vec<f64>,
    pub positivity_violations: Vec<PositivityViolation>,
    pub monotonicity_violations: Vec<MonotonicityViolation>,
    pub samples_used: usize,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.f_zero_at_origin
            && self.positivity_violations.is_empty()
            && self.monotonicity_violations.is_empty()
    }

    /// Human readable one-liners, one per failed check.
    pub fn warnings(&self) -> Vec<String> {
        let mut out = Vec::new();
        for (j, v) in self.origin_values.iter().enumerate() {
            if v.abs() > ORIGIN_TOLERANCE {
                out.push(format!("f{}(0,...,0) = {v} is not zero", j + 1));
            }
        }
        if let Some(first) = self.positivity_violations.first() {
            out.push(format!(
                "{} sampled point(s) where some f_j < 0, first: f{} = {} at {:?}",
                self.positivity_violations.len(),
                first.function + 1,
                first.value,
                first.point
            ));
        }
        if let Some(first) = self.monotonicity_violations.first() {
            out.push(format!(
                "{} sampled pair(s) where some f_j decreases, first: f{} along u{} between {:?} and {:?}",
                self.monotonicity_violations.len(),
                first.function + 1,
                first.coordinate + 1,
                first.lower,
                first.upper
            ));
        }
        out
    }
}

/// Checks each `f_j` at the origin, then on a lattice of
/// `samples_per_axis^m` points of `[0, domain_cap]^m` when `m <= 3`,
/// or on seeded random pairs differing in one coordinate when `m > 3`.
pub fn validate_nonlinearity(
    nonlinearities: &[Expression],
    m: usize,
    domain_cap: f64,
    samples_per_axis: usize,
) -> Result<ValidationReport, ExprError> {
    if m == 0 || nonlinearities.len() != m {
        return Err(ExprError::Variables(format!(
            "expected {m} nonlinearities, got {}",
            nonlinearities.len()
        )));
    }
    if !(domain_cap > 0.0) || samples_per_axis < 2 {
        return Err(ExprError::Variables(
            "domain_cap must be positive and samples_per_axis at least 2".into(),
        ));
    }
    for f in nonlinearities {
        if f.variables().len() != m {
            return Err(ExprError::Variables(format!(
                "nonlinearity declares {} variables, expected {m}",
                f.variables().len()
            )));
        }
    }

    let origin = vec![0.0; m];
    let origin_values = nonlinearities
        .iter()
        .map(|f| f.eval_slice(&origin))
        .collect::<Result<Vec<_>, _>>()?;
    let mut report = ValidationReport {
        f_zero_at_origin: origin_values.iter().all(|v| v.abs() <= ORIGIN_TOLERANCE),
        origin_values,
        positivity_violations: Vec::new(),
        monotonicity_violations: Vec::new(),
        samples_used: 1,
    };

    let step = domain_cap / (samples_per_axis - 1) as f64;
    if m <= 3 {
        let total = samples_per_axis.pow(m as u32);
        let mut point = vec![0.0; m];
        for flat in 0..total {
            let mut rem = flat;
            for x in point.iter_mut() {
                *x = (rem % samples_per_axis) as f64 * step;
                rem /= samples_per_axis;
            }
            for (j, f) in nonlinearities.iter().enumerate() {
                let here = f.eval_slice(&point)?;
                record_sign(&mut report, j, &point, here);
                for axis in 0..m {
                    if point[axis] + step > domain_cap * (1.0 + 1e-12) {
                        continue;
                    }
                    let mut up = point.clone();
                    up[axis] += step;
                    let there = f.eval_slice(&up)?;
                    record_pair(&mut report, j, axis, &point, &up, here, there);
                }
            }
        }
        report.samples_used = total;
    } else {
        let pairs = samples_per_axis.pow(3);
        let mut rng = ChaCha8Rng::seed_from_u64(RANDOM_PAIR_SEED);
        for _ in 0..pairs {
            let lower: Vec<f64> = (0..m).map(|_| rng.gen_range(0.0..=domain_cap)).collect();
            let axis = rng.gen_range(0..m);
            let mut upper = lower.clone();
            upper[axis] = rng.gen_range(lower[axis]..=domain_cap);
            for (j, f) in nonlinearities.iter().enumerate() {
                let a = f.eval_slice(&lower)?;
                let b = f.eval_slice(&upper)?;
                record_sign(&mut report, j, &lower, a);
                record_pair(&mut report, j, axis, &lower, &upper, a, b);
            }
        }
        report.samples_used = 2 * pairs;
    }
    Ok(report)
}

fn record_sign(report: &mut ValidationReport, function: usize, point: &[f64], value: f64) {
    if value < -NEGATIVE_TOLERANCE || value.is_nan() {
        report.positivity_violations.push(PositivityViolation {
            function,
            point: point.to_vec(),
            value,
        });
    }
}

fn record_pair(
    report: &mut ValidationReport,
    function: usize,
    coordinate: usize,
    lower: &[f64],
    upper: &[f64],
    at_lower: f64,
    at_upper: f64,
) {
    if at_upper < at_lower - MONOTONE_TOLERANCE * (1.0 + at_lower.abs()) {
        report.monotonicity_violations.push(MonotonicityViolation {
            function,
            coordinate,
            lower: lower.to_vec(),
            upper: upper.to_vec(),
            drop: at_lower - at_upper,
        });
    }
}
