//! Geometric grids on (0, infinity) and quadrature against the measures
//! `dt/t` (Haar) and `dt` (Lebesgue).
//!
//! Nodes are `t_k = t_min * r^k` with a constant logarithmic step
//! `haar_step = ln r`, so sums `sum g(t_k) * haar_step` are left-endpoint
//! Riemann sums for `int g dt/t`.  All quadrature in the crate uses the
//! left-endpoint rule: the last node never enters an integral, which keeps
//! averaging operators positive and makes discrete identities exact.

use std::sync::Arc;

use crate::error::{Error, Result};

/// Geometric grid `t_k = t_min * r^k`, `k = 0..n_nodes-1`.
#[derive(Debug, Clone)]
pub struct LogGrid {
    t_min: f64,
    t_max: f64,
    nodes: Vec<f64>,
    /// Logarithmic step `ln(t_{k+1}/t_k)`, constant across the grid.
    haar_step: f64,
    /// Lebesgue steps `t_{k+1} - t_k`, one per interval (`n_nodes - 1`).
    lebesgue_steps: Vec<f64>,
}

/// Shared handle to a grid; every grid-valued object holds one.
pub type Grid = Arc<LogGrid>;

impl PartialEq for LogGrid {
    fn eq(&self, other: &Self) -> bool {
        self.t_min == other.t_min
            && self.t_max == other.t_max
            && self.nodes.len() == other.nodes.len()
    }
}

impl LogGrid {
    /// Build a geometric grid with `n_nodes` nodes spanning `[t_min, t_max]`.
    pub fn new(t_min: f64, t_max: f64, n_nodes: usize) -> Result<Grid> {
        if !(t_min.is_finite() && t_max.is_finite()) || t_min <= 0.0 || t_max <= 0.0 {
            return Err(Error::InvalidArgument(format!(
                "grid endpoints must be finite and positive (got {t_min}, {t_max})"
            )));
        }
        if t_min >= t_max {
            return Err(Error::InvalidArgument(format!(
                "grid needs t_min < t_max (got {t_min} >= {t_max})"
            )));
        }
        if n_nodes < 2 {
            return Err(Error::InvalidArgument(format!(
                "grid needs at least 2 nodes (got {n_nodes})"
            )));
        }
        let log_min = t_min.ln();
        let log_max = t_max.ln();
        let haar_step = (log_max - log_min) / (n_nodes - 1) as f64;
        let mut nodes: Vec<f64> = (0..n_nodes)
            .map(|k| (log_min + k as f64 * haar_step).exp())
            .collect();
        nodes[0] = t_min;
        nodes[n_nodes - 1] = t_max;
        let lebesgue_steps: Vec<f64> = nodes.windows(2).map(|w| w[1] - w[0]).collect();
        Ok(Arc::new(LogGrid {
            t_min,
            t_max,
            nodes,
            haar_step,
            lebesgue_steps,
        }))
    }

    pub fn t_min(&self) -> f64 {
        self.t_min
    }

    pub fn t_max(&self) -> f64 {
        self.t_max
    }

    pub fn n_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn node(&self, k: usize) -> f64 {
        self.nodes[k]
    }

    pub fn haar_step(&self) -> f64 {
        self.haar_step
    }

    pub fn lebesgue_steps(&self) -> &[f64] {
        &self.lebesgue_steps
    }

    /// Number of nodes carrying quadrature weight (all but the last).
    pub fn support_len(&self) -> usize {
        self.nodes.len() - 1
    }

    /// Index of the node at `t = 1`, if the grid has one.
    pub fn unit_index(&self) -> Option<usize> {
        let k = self
            .nodes
            .partition_point(|&t| t < 1.0)
            .min(self.nodes.len() - 1);
        for idx in [k.saturating_sub(1), k] {
            if (self.nodes[idx] - 1.0).abs() <= 1e-9 {
                return Some(idx);
            }
        }
        None
    }

    /// First node index with `t_k >= threshold` (used for burn-in windows).
    pub fn first_index_at_or_above(&self, threshold: f64) -> usize {
        self.nodes.partition_point(|&t| t < threshold)
    }
}

/// Scalar samples on the nodes of a shared grid.
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction {
    grid: Grid,
    values: Vec<f64>,
}

impl GridFunction {
    pub fn new(grid: Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.n_nodes() {
            return Err(Error::DimensionMismatch(format!(
                "grid function needs {} values, got {}",
                grid.n_nodes(),
                values.len()
            )));
        }
        Ok(GridFunction { grid, values })
    }

    pub fn from_fn(grid: &Grid, f: impl Fn(f64) -> f64) -> Self {
        let values = grid.nodes().iter().map(|&t| f(t)).collect();
        GridFunction {
            grid: Arc::clone(grid),
            values,
        }
    }

    pub fn constant(grid: &Grid, c: f64) -> Self {
        GridFunction {
            grid: Arc::clone(grid),
            values: vec![c; grid.n_nodes()],
        }
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

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Pointwise map, preserving the grid.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        GridFunction {
            grid: Arc::clone(&self.grid),
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    /// Pointwise combination of two functions on the same grid.
    pub fn zip_with(&self, other: &GridFunction, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        ensure_same_grid(self, other)?;
        Ok(GridFunction {
            grid: Arc::clone(&self.grid),
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        })
    }

    /// Sup of |g| over nodes `t_k >= threshold` (all nodes if threshold <= t_min).
    pub fn sup_abs_from(&self, threshold: f64) -> f64 {
        let start = self.grid.first_index_at_or_above(threshold);
        self.values[start..]
            .iter()
            .fold(0.0f64, |m, &v| m.max(v.abs()))
    }

    pub fn sup_abs(&self) -> f64 {
        self.sup_abs_from(f64::NEG_INFINITY)
    }
}

pub fn ensure_same_grid(a: &GridFunction, b: &GridFunction) -> Result<()> {
    if a.grid.as_ref() != b.grid.as_ref() {
        return Err(Error::GridMismatch(
            "grid functions live on different grids".into(),
        ));
    }
    Ok(())
}

/// Left-endpoint Haar integral `sum_{k<n-1} g(t_k) * haar_step ~ int g dt/t`.
pub fn integrate_haar(g: &GridFunction) -> f64 {
    let dx = g.grid().haar_step();
    g.values()[..g.grid().support_len()]
        .iter()
        .map(|&v| v * dx)
        .sum()
}

/// Running Haar integral: `out_k = sum_{j<k} g(t_j) * haar_step`.
///
/// `out_0 = 0` and `out_{n-1} = integrate_haar(g)` exactly (same summation
/// order), so cumulative and total quadrature never disagree.
pub fn cumulative_haar(g: &GridFunction) -> GridFunction {
    let dx = g.grid().haar_step();
    let mut out = Vec::with_capacity(g.len());
    let mut acc = 0.0;
    for &v in &g.values()[..g.grid().support_len()] {
        out.push(acc);
        acc += v * dx;
    }
    out.push(acc);
    GridFunction {
        grid: Arc::clone(g.grid()),
        values: out,
    }
}

/// Left-endpoint Lebesgue prefix `tail + sum_{j<k} g(t_j) * (t_{j+1}-t_j)`,
/// approximating `int_0^{t_k} g ds` with `tail ~ int_0^{t_min} g ds`.
pub fn integrate_lebesgue_prefix(g: &GridFunction, k: usize, tail: f64) -> f64 {
    let steps = g.grid().lebesgue_steps();
    let mut acc = tail;
    for j in 0..k {
        acc += g.values()[j] * steps[j];
    }
    acc
}

/// All Lebesgue prefixes at once (same values as calling
/// `integrate_lebesgue_prefix` for each `k`, in one pass).
pub fn lebesgue_prefixes(g: &GridFunction, tail: f64) -> Vec<f64> {
    let steps = g.grid().lebesgue_steps();
    let mut out = Vec::with_capacity(g.len());
    let mut acc = tail;
    for j in 0..g.len() {
        out.push(acc);
        if j < steps.len() {
            acc += g.values()[j] * steps[j];
        }
    }
    out
}
