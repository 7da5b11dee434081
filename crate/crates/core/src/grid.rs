//! Radial grids on `[0, r_max]` and the cumulative quadrature behind the
//! nested integral operators.
//!
//! Both primitives interpolate the integrand linearly between nodes. The
//! weighted integral additionally integrates `s^(N-1)` exactly on each panel,
//! so it is exact for piecewise-linear `h` in every dimension.

use std::fmt;
use std::sync::{Arc, Mutex};

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Smallest admissible node count (M >= 16 intervals).
pub const MIN_POINTS: usize = 17;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Grading {
    Uniform,
    /// Nodes `r_k = r_max (q^k - 1) / (q^M - 1)`, clustered near the origin.
    Geometric(f64),
    /// Nodes supplied explicitly, e.g. read back from a profile file.
    Tabulated,
}

pub struct RadialGrid {
    nodes: Vec<f64>,
    grading: Grading,
    weights: Mutex<Vec<(u32, Arc<RadialWeights>)>>,
}

impl RadialGrid {
    pub fn new(r_max: f64, points: usize, grading: Grading) -> Result<Self> {
        if !(r_max > 0.0) || !r_max.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "r_max must be positive, got {r_max}"
            )));
        }
        if points < MIN_POINTS {
            return Err(Error::InvalidArgument(format!(
                "a grid needs at least {MIN_POINTS} points, got {points}"
            )));
        }
        let intervals = points - 1;
        let nodes: Vec<f64> = match grading {
            Grading::Uniform => {
                let h = r_max / intervals as f64;
                (0..points)
                    .map(|k| if k == intervals { r_max } else { k as f64 * h })
                    .collect()
            }
            Grading::Geometric(ratio) => {
                if !(ratio > 1.0) || !ratio.is_finite() {
                    return Err(Error::InvalidArgument(format!(
                        "geometric ratio must exceed 1, got {ratio}"
                    )));
                }
                // q^(k-M) (1 - q^-k) / (1 - q^-M) avoids overflowing q^M.
                let ln_q = ratio.ln();
                let tail = -(-(intervals as f64) * ln_q).exp_m1();
                (0..points)
                    .map(|k| {
                        if k == intervals {
                            return r_max;
                        }
                        let k = k as f64;
                        let head = -(-k * ln_q).exp_m1();
                        r_max * ((k - intervals as f64) * ln_q).exp() * head / tail
                    })
                    .collect()
            }
            Grading::Tabulated => {
                return Err(Error::InvalidArgument(
                    "tabulated grids are built with RadialGrid::from_nodes".into(),
                ))
            }
        };
        Self::checked(nodes, grading)
    }

    pub fn from_nodes(nodes: Vec<f64>) -> Result<Self> {
        if nodes.len() < MIN_POINTS {
            return Err(Error::InvalidArgument(format!(
                "a grid needs at least {MIN_POINTS} points, got {}",
                nodes.len()
            )));
        }
        Self::checked(nodes, Grading::Tabulated)
    }

    fn checked(nodes: Vec<f64>, grading: Grading) -> Result<Self> {
        if nodes[0] != 0.0 {
            return Err(Error::InvalidArgument(
                "the first node must be exactly 0".into(),
            ));
        }
        if let Some(k) = nodes
            .windows(2)
            .position(|w| !(w[1] > w[0]) || !w[1].is_finite())
        {
            return Err(Error::InvalidArgument(format!(
                "grid nodes are not strictly increasing at index {}",
                k + 1
            )));
        }
        Ok(RadialGrid {
            nodes,
            grading,
            weights: Mutex::new(Vec::new()),
        })
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn r_max(&self) -> f64 {
        *self.nodes.last().unwrap()
    }

    pub fn grading(&self) -> Grading {
        self.grading
    }

    /// Quadrature weights for dimension `N`, computed once and shared.
    pub fn radial_weights(&self, dimension: u32) -> Arc<RadialWeights> {
        let mut cache = self.weights.lock().unwrap_or_else(|e| e.into_inner());
        if let Some((_, w)) = cache.iter().find(|(n, _)| *n == dimension) {
            return w.clone();
        }
        let w = Arc::new(RadialWeights::new(&self.nodes, dimension.saturating_sub(1)));
        cache.push((dimension, w.clone()));
        w
    }
}

/// Per-panel moments of `s^(N-1)` against the two linear hat functions.
///
/// `left[k]` and `right[k]` integrate `s^(N-1)` times the hats of nodes
/// `k - 1` and `k` over `[r_(k-1), r_k]`; index 0 is unused.
#[derive(Debug, Clone, PartialEq)]
pub struct RadialWeights {
    /// `r^(N-1)` at every node.
    pub power: Vec<f64>,
    pub left: Vec<f64>,
    pub right: Vec<f64>,
}

impl RadialWeights {
    fn new(nodes: &[f64], exponent: u32) -> Self {
        let n = nodes.len();
        let power = nodes.iter().map(|r| r.powi(exponent as i32)).collect();
        let mut left = vec![0.0; n];
        let mut right = vec![0.0; n];
        for k in 1..n {
            let (s0, d) = (nodes[k - 1], nodes[k] - nodes[k - 1]);
            // s = s0 + d x expanded binomially: every term is nonnegative, so
            // nothing cancels even when d << s0.
            let (mut lo, mut hi) = (0.0, 0.0);
            let mut binom = 1.0;
            for j in 0..=exponent {
                let term = binom * s0.powi((exponent - j) as i32) * d.powi(j as i32);
                let j = f64::from(j);
                lo += term / ((j + 1.0) * (j + 2.0));
                hi += term / (j + 2.0);
                binom = binom * (f64::from(exponent) - j) / (j + 1.0);
            }
            left[k] = d * lo;
            right[k] = d * hi;
        }
        RadialWeights { power, left, right }
    }
}

impl Clone for RadialGrid {
    fn clone(&self) -> Self {
        RadialGrid {
            nodes: self.nodes.clone(),
            grading: self.grading,
            weights: Mutex::new(Vec::new()),
        }
    }
}

impl PartialEq for RadialGrid {
    fn eq(&self, other: &Self) -> bool {
        self.nodes == other.nodes && self.grading == other.grading
    }
}

impl fmt::Debug for RadialGrid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("RadialGrid")
            .field("points", &self.nodes.len())
            .field("r_max", &self.r_max())
            .field("grading", &self.grading)
            .finish()
    }
}

pub fn make_grid(r_max: f64, points: usize, grading: Grading) -> Result<Arc<RadialGrid>> {
    RadialGrid::new(r_max, points, grading).map(Arc::new)
}

/// Values sampled at the nodes of a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction {
    grid: Arc<RadialGrid>,
    values: Vec<f64>,
}

impl GridFunction {
    pub fn new(grid: Arc<RadialGrid>, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::InvalidArgument(format!(
                "{} values for a grid of {} nodes",
                values.len(),
                grid.len()
            )));
        }
        Ok(GridFunction { grid, values })
    }

    pub fn from_fn(grid: Arc<RadialGrid>, f: impl FnMut(f64) -> f64) -> Self {
        let values = grid.nodes().iter().copied().map(f).collect();
        GridFunction { grid, values }
    }

    pub fn constant(grid: Arc<RadialGrid>, value: f64) -> Self {
        let values = vec![value; grid.len()];
        GridFunction { grid, values }
    }

    pub fn grid(&self) -> &Arc<RadialGrid> {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn last(&self) -> f64 {
        *self.values.last().unwrap()
    }
}

/// Composite trapezoid `F(r_k) = ∫_0^{r_k} f`, with `F(r_0) = 0`.
pub fn cumulative_integral(f: &GridFunction) -> GridFunction {
    let mut out = vec![0.0; f.values.len()];
    cumulative_trapezoid(f.grid.nodes(), &f.values, &mut out);
    GridFunction {
        grid: f.grid.clone(),
        values: out,
    }
}

/// `t ↦ t^(1-N) ∫_0^t s^(N-1) h(s) ds`, set to 0 at `t = 0`.
pub fn weighted_inner_integral(h: &GridFunction, dimension: u32) -> GridFunction {
    let weights = h.grid.radial_weights(dimension);
    let mut out = vec![0.0; h.values.len()];
    weighted_inner_into(h.grid.nodes(), &weights, &h.values, &mut out);
    GridFunction {
        grid: h.grid.clone(),
        values: out,
    }
}

pub(crate) fn cumulative_trapezoid(nodes: &[f64], f: &[f64], out: &mut [f64]) {
    debug_assert_eq!(nodes.len(), f.len());
    debug_assert_eq!(nodes.len(), out.len());
    let mut acc = 0.0;
    out[0] = 0.0;
    for k in 1..nodes.len() {
        acc += 0.5 * (nodes[k] - nodes[k - 1]) * (f[k] + f[k - 1]);
        out[k] = acc;
    }
}

/// `out[k] = r_k^(1-N) ∫_0^{r_k} s^(N-1) h(s) ds` with `h` linear between
/// nodes; `out[0] = 0`. `out` may not alias `h`.
pub(crate) fn weighted_inner_into(
    nodes: &[f64],
    weights: &RadialWeights,
    h: &[f64],
    out: &mut [f64],
) {
    debug_assert_eq!(nodes.len(), h.len());
    let mut acc = 0.0;
    out[0] = 0.0;
    for k in 1..nodes.len() {
        acc += weights.left[k] * h[k - 1] + weights.right[k] * h[k];
        out[k] = acc / weights.power[k];
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uniform_nodes() {
        let g = make_grid(1.0, 17, Grading::Uniform).unwrap();
        for (k, r) in g.nodes().iter().enumerate() {
            assert_eq!(*r, k as f64 / 16.0);
        }
        let g = make_grid(10.0, 1001, Grading::Uniform).unwrap();
        for w in g.nodes().windows(2) {
            assert!((w[1] - w[0] - 0.01).abs() < 1e-12);
        }
        assert_eq!(g.r_max(), 10.0);
    }

    #[test]
    fn too_few_points_or_bad_arguments() {
        assert!(make_grid(1.0, 5, Grading::Uniform).is_err());
        assert!(make_grid(0.0, 101, Grading::Uniform).is_err());
        assert!(make_grid(-1.0, 101, Grading::Uniform).is_err());
        assert!(make_grid(1.0, 101, Grading::Geometric(1.0)).is_err());
        assert!(make_grid(1.0, 101, Grading::Geometric(0.9)).is_err());
        assert!(RadialGrid::from_nodes(vec![0.0; 20]).is_err());
        assert!(RadialGrid::from_nodes((1..20).map(f64::from).collect()).is_err());
    }

    #[test]
    fn geometric_first_spacing() {
        let g = make_grid(10.0, 101, Grading::Geometric(1.05)).unwrap();
        let expected = 10.0 * 0.05 / (1.05f64.powi(100) - 1.0);
        assert!((g.nodes()[1] - expected).abs() <= 1e-12 * expected);
        assert_eq!(g.nodes()[0], 0.0);
        assert_eq!(g.r_max(), 10.0);
        // Consecutive spacings grow by the ratio.
        let n = g.nodes();
        let ratio = (n[51] - n[50]) / (n[50] - n[49]);
        assert!((ratio - 1.05).abs() < 1e-9);
    }

    #[test]
    fn huge_geometric_grids_do_not_overflow() {
        let g = make_grid(1e8, 20001, Grading::Geometric(1.01)).unwrap();
        assert!(g.nodes().iter().all(|r| r.is_finite()));
        assert_eq!(g.r_max(), 1e8);
    }

    #[test]
    fn trapezoid_is_exact_on_linear_integrands() {
        let g = make_grid(1.0, 17, Grading::Uniform).unwrap();
        let f = GridFunction::from_fn(g.clone(), |s| 2.0 * s);
        assert_eq!(cumulative_integral(&f).last(), 1.0);
        let zero = GridFunction::constant(g, 0.0);
        assert!(cumulative_integral(&zero)
            .values()
            .iter()
            .all(|&v| v == 0.0));
    }

    #[test]
    fn trapezoid_on_square() {
        let g = make_grid(1.0, 1001, Grading::Uniform).unwrap();
        let f = GridFunction::from_fn(g, |s| s * s);
        assert!((cumulative_integral(&f).last() - 1.0 / 3.0).abs() < 1e-6);
    }

    #[test]
    fn weighted_integral_examples() {
        let g = make_grid(3.0, 3001, Grading::Uniform).unwrap();
        let one = GridFunction::constant(g.clone(), 1.0);
        let w = weighted_inner_integral(&one, 3);
        assert_eq!(w.values()[0], 0.0);
        assert!((w.last() - 1.0).abs() < 1e-6);

        let g = make_grid(2.0, 2001, Grading::Uniform).unwrap();
        let s = GridFunction::from_fn(g.clone(), |s| s);
        assert!((weighted_inner_integral(&s, 3).last() - 1.0).abs() < 1e-6);

        let zero = GridFunction::constant(g, 0.0);
        assert!(weighted_inner_integral(&zero, 3)
            .values()
            .iter()
            .all(|&v| v == 0.0));
    }

    #[test]
    fn weighted_integral_is_exact_for_linear_h() {
        // Coarse geometric grid: no quadrature error for h = 2 + s in any dimension.
        let g = make_grid(50.0, 17, Grading::Geometric(1.3)).unwrap();
        let h = GridFunction::from_fn(g.clone(), |s| 2.0 + s);
        for n in [2u32, 3, 5, 9] {
            let nf = f64::from(n);
            let w = weighted_inner_integral(&h, n);
            for (&t, &v) in g.nodes().iter().zip(w.values()).skip(1) {
                let exact = 2.0 * t / nf + t * t / (nf + 1.0);
                assert!(
                    (v - exact).abs() <= 1e-13 * exact,
                    "N={n} t={t}: {v} vs {exact}"
                );
            }
        }
    }

    #[test]
    fn weights_are_cached_per_dimension() {
        let g = make_grid(2.0, 33, Grading::Uniform).unwrap();
        let a = g.radial_weights(3);
        let b = g.radial_weights(3);
        assert!(Arc::ptr_eq(&a, &b));
        assert_eq!(a.power[32], 4.0);
        assert_eq!(g.radial_weights(4).power[32], 8.0);
        // Panel moments sum to ∫_0^2 s^2 = 8/3.
        let total: f64 = a.left.iter().chain(&a.right).sum();
        assert!((total - 8.0 / 3.0).abs() < 1e-14);
    }

    #[test]
    fn second_order_convergence() {
        // Error of ∫_0^1 s^3 and of the weighted integral of s^2 at t = 1.
        let err = |points: usize| {
            let g = make_grid(1.0, points, Grading::Uniform).unwrap();
            let cube = GridFunction::from_fn(g.clone(), |s| s.powi(3));
            let sq = GridFunction::from_fn(g, |s| s * s);
            (
                (cumulative_integral(&cube).last() - 0.25).abs(),
                (weighted_inner_integral(&sq, 3).last() - 0.2).abs(),
            )
        };
        let (a1, b1) = err(101);
        let (a2, b2) = err(201);
        for ratio in [a1 / a2, b1 / b2] {
            assert!((3.5..=4.5).contains(&ratio), "ratio {ratio}");
        }
    }
}
