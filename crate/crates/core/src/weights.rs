//! Weight calculus on logarithmic grids.
//!
//! Central objects: the Hardy averaging operator `Pw(t) = (1/t) int_0^t w ds`
//! and the sharp transform `w# = Pw - w`, whose sup norm is the oscillation
//! seminorm `||w||_W`.  Everything is discretized with the left-endpoint rule
//! of [`crate::grid`], which makes `P` a positive averaging operator with
//! `P(1) = 1` exactly; that in turn makes `(Pw)# = P(w#)` an algebraic
//! identity on the grid rather than an approximation.
//!
//! The prefix integral `int_0^{t_min} w ds` below the grid is either taken
//! from a closed-form tail moment (analytic families) or from the extension
//! rule `w(t) = w(t_min)` for `t < t_min`.  Sup norms exclude a burn-in
//! window near `t_min` where the extension transient lives.

use crate::error::{Error, Result};
use crate::grid::{
    cumulative_haar, ensure_same_grid, Grid, GridFunction, lebesgue_prefixes,
};

/// Multiplier for the default burn-in window: sups run over `t >= 1e3 * t_min`.
pub const DEFAULT_BURN_IN: f64 = 1e3;

/// How the prefix integral below `t_min` is supplied.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TailRule {
    /// Closed-form `int_0^{t_min} w ds` from the family's antiderivative.
    Exact,
    /// Constant extension `w(t) = w(t_min)` below the grid.
    Extension,
}

/// Weight family: how node values (and optionally exact tail moments) arise.
#[derive(Debug, Clone)]
pub enum WeightKind {
    /// `w(t) = c`.
    Constant(f64),
    /// `w(t) = ln t`.
    Log,
    /// `w(t) = (ln t)^n`.
    PowerLog(u32),
    /// `w(t) = sin(ln t)`.
    SinLog,
    /// `w(t) = phi(ln t)` with `phi` piecewise linear through `(xs, ys)`,
    /// extended constantly beyond the sample range.
    PhiLog { xs: Vec<f64>, ys: Vec<f64> },
    /// Arbitrary node samples on a fixed grid; interpolated linearly in
    /// `ln t` off-node, extended constantly outside the grid.
    Samples(GridFunction),
}

#[derive(Debug, Clone)]
pub struct WeightFamily {
    kind: WeightKind,
    tail: TailRule,
}

impl WeightFamily {
    /// Build a family; analytic kinds get the exact tail rule after a
    /// first-order agreement check against grid quadrature.
    pub fn new(kind: WeightKind) -> Result<Self> {
        if let WeightKind::PhiLog { xs, ys } = &kind {
            if xs.len() < 2 || xs.len() != ys.len() {
                return Err(Error::InvalidArgument(
                    "phi_log needs at least two samples with matching lengths".into(),
                ));
            }
            if !xs.windows(2).all(|w| w[0] < w[1]) {
                return Err(Error::InvalidArgument(
                    "phi_log sample points must be strictly increasing".into(),
                ));
            }
        }
        let has_exact = matches!(
            kind,
            WeightKind::Constant(_) | WeightKind::Log | WeightKind::PowerLog(_) | WeightKind::SinLog
        );
        let family = WeightFamily {
            kind,
            tail: if has_exact {
                TailRule::Exact
            } else {
                TailRule::Extension
            },
        };
        if has_exact {
            family.check_tail_moment()?;
        }
        Ok(family)
    }

    /// Same family, but with the constant-extension tail rule.
    pub fn with_extension_tail(mut self) -> Self {
        self.tail = TailRule::Extension;
        self
    }

    pub fn tail_rule(&self) -> TailRule {
        self.tail
    }

    pub fn kind(&self) -> &WeightKind {
        &self.kind
    }

    pub fn eval(&self, t: f64) -> f64 {
        let x = t.ln();
        match &self.kind {
            WeightKind::Constant(c) => *c,
            WeightKind::Log => x,
            WeightKind::PowerLog(n) => x.powi(*n as i32),
            WeightKind::SinLog => x.sin(),
            WeightKind::PhiLog { xs, ys } => interp_clamped(xs, ys, x),
            WeightKind::Samples(g) => {
                let logs: Vec<f64> = g.grid().nodes().iter().map(|&t| t.ln()).collect();
                interp_clamped(&logs, g.values(), x)
            }
        }
    }

    /// Node samples on `grid`.  The samples kind requires its own grid.
    pub fn sample(&self, grid: &Grid) -> Result<GridFunction> {
        if let WeightKind::Samples(g) = &self.kind {
            if g.grid().as_ref() != grid.as_ref() {
                return Err(Error::GridMismatch(
                    "sampled weight used on a different grid".into(),
                ));
            }
            return Ok(g.clone());
        }
        Ok(GridFunction::from_fn(grid, |t| self.eval(t)))
    }

    /// Closed-form `int_0^t w ds` where available.
    pub fn exact_tail_moment(&self, t: f64) -> Option<f64> {
        let x = t.ln();
        match &self.kind {
            WeightKind::Constant(c) => Some(c * t),
            WeightKind::Log => Some(t * (x - 1.0)),
            WeightKind::PowerLog(n) => {
                // int (ln s)^n ds = s * sum_{j=0..n} (-1)^j n!/(n-j)! (ln s)^{n-j}
                let n = *n;
                let mut coeff = 1.0;
                let mut acc = 0.0;
                for j in 0..=n {
                    acc += coeff * x.powi((n - j) as i32);
                    coeff *= -((n - j) as f64);
                }
                Some(t * acc)
            }
            WeightKind::SinLog => Some(t * (x.sin() - x.cos()) / 2.0),
            WeightKind::PhiLog { .. } | WeightKind::Samples(_) => None,
        }
    }

    /// Tail value used by [`hardy_average`] under the family's tail rule.
    fn tail_moment(&self, t_min: f64) -> f64 {
        match self.tail {
            TailRule::Exact => self
                .exact_tail_moment(t_min)
                .expect("exact tail rule without closed form"),
            TailRule::Extension => self.eval(t_min) * t_min,
        }
    }

    /// Construction-time check: the closed-form moment must agree with grid
    /// quadrature to first order on a reference grid.
    fn check_tail_moment(&self) -> Result<()> {
        let grid = crate::grid::LogGrid::new(1e-4, 1e4, 201)?;
        let w = self.sample(&grid)?;
        let tail = self
            .exact_tail_moment(grid.t_min())
            .expect("checked: closed form exists");
        let prefixes = lebesgue_prefixes(&w, tail);
        let dx = grid.haar_step();
        for k in [100usize, 150, 200] {
            let t = grid.node(k);
            let exact = self.exact_tail_moment(t).unwrap();
            // First-order error bound with the running sup of |w|, since the
            // quadrature error accumulates from t_min.
            let sup_w = w.values()[..=k]
                .iter()
                .fold(0.0f64, |m, &v| m.max(v.abs()));
            let bound = 2.0 * dx * t * (1.0 + sup_w);
            if (prefixes[k] - exact).abs() > bound {
                return Err(Error::InvalidArgument(format!(
                    "tail moment disagrees with quadrature at t = {t}: \
                     closed form {exact}, quadrature {}",
                    prefixes[k]
                )));
            }
        }
        Ok(())
    }
}

fn interp_clamped(xs: &[f64], ys: &[f64], x: f64) -> f64 {
    if x <= xs[0] {
        return ys[0];
    }
    if x >= xs[xs.len() - 1] {
        return ys[ys.len() - 1];
    }
    let i = xs.partition_point(|&p| p <= x) - 1;
    let lam = (x - xs[i]) / (xs[i + 1] - xs[i]);
    ys[i] + lam * (ys[i + 1] - ys[i])
}

/// `Pw(t_k) = (1/t_k) (tail + sum_{j<k} w(t_j) (t_{j+1}-t_j))`.
pub fn hardy_average(w: &WeightFamily, grid: &Grid) -> Result<GridFunction> {
    let samples = w.sample(grid)?;
    hardy_average_values(&samples, w.tail_moment(grid.t_min()))
}

/// Hardy average of raw node samples with an explicit tail moment.
pub fn hardy_average_values(samples: &GridFunction, tail: f64) -> Result<GridFunction> {
    let grid = samples.grid();
    let prefixes = lebesgue_prefixes(samples, tail);
    let values = prefixes
        .iter()
        .zip(grid.nodes())
        .map(|(&p, &t)| p / t)
        .collect();
    GridFunction::new(std::sync::Arc::clone(grid), values)
}

/// Sharp transform `w# = Pw - w` on the nodes.
pub fn sharp_transform(w: &WeightFamily, grid: &Grid) -> Result<GridFunction> {
    let samples = w.sample(grid)?;
    let pw = hardy_average(w, grid)?;
    pw.zip_with(&samples, |p, v| p - v)
}

/// Oscillation seminorm `||w||_W = sup |w#|` over the burn-in window.
pub fn w_norm(w: &WeightFamily, grid: &Grid) -> Result<f64> {
    w_norm_with_burn_in(w, grid, DEFAULT_BURN_IN)
}

pub fn w_norm_with_burn_in(w: &WeightFamily, grid: &Grid, burn_in: f64) -> Result<f64> {
    let sharp = sharp_transform(w, grid)?;
    Ok(sharp.sup_abs_from(burn_in_threshold(grid, burn_in)))
}

/// Threshold for sup norms: `burn_in * t_min`, clamped so the window always
/// contains at least the upper half of the grid.
fn burn_in_threshold(grid: &Grid, burn_in: f64) -> f64 {
    let thresh = burn_in.max(1.0) * grid.t_min();
    thresh.min(grid.node(grid.n_nodes() / 2))
}

/// Discrete log-derivative seminorm `sup_k |t_k (w(t_{k+1})-w(t_k)) / (t_{k+1}-t_k)|`
/// over the burn-in window; exact `sup |phi'|` for piecewise-linear `phi_log`.
pub fn w1_seminorm(w: &WeightFamily, grid: &Grid) -> Result<f64> {
    w1_seminorm_with_burn_in(w, grid, DEFAULT_BURN_IN)
}

pub fn w1_seminorm_with_burn_in(w: &WeightFamily, grid: &Grid, burn_in: f64) -> Result<f64> {
    if let WeightKind::PhiLog { xs, ys } = w.kind() {
        let mut sup = 0.0f64;
        for i in 0..xs.len() - 1 {
            sup = sup.max(((ys[i + 1] - ys[i]) / (xs[i + 1] - xs[i])).abs());
        }
        return Ok(sup);
    }
    let samples = w.sample(grid)?;
    Ok(w1_seminorm_values(&samples, burn_in))
}

/// Discrete log-derivative seminorm of raw node samples.
pub fn w1_seminorm_values(g: &GridFunction, burn_in: f64) -> f64 {
    let grid = g.grid();
    let start = grid.first_index_at_or_above(burn_in_threshold(grid, burn_in));
    let steps = grid.lebesgue_steps();
    let mut sup = 0.0f64;
    for k in start..grid.support_len() {
        let slope = grid.node(k) * (g.values()[k + 1] - g.values()[k]) / steps[k];
        sup = sup.max(slope.abs());
    }
    sup
}

/// Decomposition `w = (w - Pw) + Pw` into a bounded part and a part with
/// finite log-derivative seminorm.
pub struct WeightDecomposition {
    /// `w - Pw` (equals `-w#`); sup over the burn-in window is `||w||_W`.
    pub bounded_part: GridFunction,
    /// `Pw`, whose discrete log-derivative seminorm is at most `||w||_W`.
    pub lipschitz_part: GridFunction,
    pub w_norm: f64,
}

pub fn decompose_bounded_lipschitz(
    w: &WeightFamily,
    grid: &Grid,
    burn_in: f64,
) -> Result<WeightDecomposition> {
    let samples = w.sample(grid)?;
    let pw = hardy_average(w, grid)?;
    let bounded_part = samples.zip_with(&pw, |a, b| a - b)?;
    let w_norm = bounded_part.sup_abs_from(burn_in_threshold(grid, burn_in));
    Ok(WeightDecomposition {
        bounded_part,
        lipschitz_part: pw,
        w_norm,
    })
}

/// Signed truncated Haar integral `int_t^1 g ds/s`; needs a node at `t = 1`.
pub fn qbar(g: &GridFunction) -> Result<GridFunction> {
    let grid = g.grid();
    let m = grid
        .unit_index()
        .ok_or(Error::MissingUnitNode("qbar"))?;
    let cum = cumulative_haar(g);
    let at_one = cum.values()[m];
    Ok(cum.map(|c| at_one - c))
}

/// `Gw(s) = int_1^s w(r) dr/r`; needs a node at `t = 1`.  Equals `-qbar(w)`.
pub fn g_transform(g: &GridFunction) -> Result<GridFunction> {
    let grid = g.grid();
    let m = grid
        .unit_index()
        .ok_or(Error::MissingUnitNode("g_transform"))?;
    let cum = cumulative_haar(g);
    let at_one = cum.values()[m];
    Ok(cum.map(|c| c - at_one))
}

/// Non-increasing rearrangement of `|g|` with respect to the Lebesgue step
/// masses: node values are sorted by decreasing magnitude and re-read at the
/// original cumulative-mass positions (left endpoints).
pub fn rearrange(g: &GridFunction) -> GridFunction {
    let grid = g.grid();
    let m = grid.support_len();
    let steps = grid.lebesgue_steps();
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| {
        g.values()[b]
            .abs()
            .partial_cmp(&g.values()[a].abs())
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.cmp(&b))
    });

    // Edges of the sorted blocks laid end to end.
    let mut out = Vec::with_capacity(grid.n_nodes());
    let mut block = 0usize;
    let mut block_end = steps[order[0]];
    let mut pos = 0.0f64;
    for k in 0..m {
        // Advance to the block containing the left endpoint of interval k.
        while pos >= block_end && block + 1 < m {
            block += 1;
            block_end += steps[order[block]];
        }
        out.push(g.values()[order[block]].abs());
        pos += steps[k];
    }
    // No mass sits on the final node; carry the smallest magnitude.
    out.push(g.values()[order[m - 1]].abs());
    GridFunction::new(std::sync::Arc::clone(grid), out).expect("length matches grid")
}

/// Full weight profile used by the CLI `weight` subcommand.
pub struct WeightProfile {
    pub w: GridFunction,
    pub hardy: GridFunction,
    pub sharp: GridFunction,
    pub w_norm: f64,
    pub w1_seminorm: f64,
}

impl WeightProfile {
    pub fn compute(w: &WeightFamily, grid: &Grid, burn_in: f64) -> Result<Self> {
        let samples = w.sample(grid)?;
        let hardy = hardy_average(w, grid)?;
        let sharp = hardy.zip_with(&samples, |p, v| p - v)?;
        let w_norm = sharp.sup_abs_from(burn_in_threshold(grid, burn_in));
        let w1 = w1_seminorm_with_burn_in(w, grid, burn_in)?;
        Ok(WeightProfile {
            w: samples,
            hardy,
            sharp,
            w_norm,
            w1_seminorm: w1,
        })
    }
}

/// `Pw` of a linear combination of sampled weights, for linearity checks.
pub fn combine_samples(a: f64, u: &GridFunction, b: f64, v: &GridFunction) -> Result<GridFunction> {
    ensure_same_grid(u, v)?;
    u.zip_with(v, |x, y| a * x + b * y)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{integrate_haar, LogGrid};
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};

    fn grid_12_decades() -> Grid {
        LogGrid::new(1e-6, 1e6, 1201).unwrap()
    }

    #[test]
    fn log_sharp_is_minus_one() {
        // P(log)(t) = ln t - 1 exactly in the continuum, so (log)# = -1.
        let grid = grid_12_decades();
        let w = WeightFamily::new(WeightKind::Log).unwrap();
        let sharp = sharp_transform(&w, &grid).unwrap();
        let start = grid.first_index_at_or_above(1e3 * grid.t_min());
        for (k, &v) in sharp.values().iter().enumerate().skip(start) {
            assert!(
                (v + 1.0).abs() <= 0.02,
                "sharp deviates at node {k}: {v}"
            );
        }
        assert!((w_norm(&w, &grid).unwrap() - 1.0).abs() <= 0.02);
    }

    #[test]
    fn sin_log_norm_is_sqrt_half() {
        // P(sin log)(t) = (sin ln t - cos ln t)/2, so w# = -(sin+cos)/2 with
        // sup sqrt(2)/2.
        let grid = grid_12_decades();
        let w = WeightFamily::new(WeightKind::SinLog).unwrap();
        let sharp = sharp_transform(&w, &grid).unwrap();
        let start = grid.first_index_at_or_above(1e-3);
        for (k, &v) in sharp.values().iter().enumerate().skip(start) {
            let t: f64 = grid.node(k);
            let expect = -(t.ln().sin() + t.ln().cos()) / 2.0;
            assert!(
                (v - expect).abs() <= 0.02,
                "node {k}: got {v}, closed form {expect}"
            );
        }
        let norm = w_norm(&w, &grid).unwrap();
        let target = 0.5f64.sqrt();
        assert!(
            (norm - target).abs() <= 0.02 * target,
            "norm {norm} vs {target}"
        );
    }

    #[test]
    fn constant_weight_has_zero_norm_in_both_tail_modes() {
        let grid = grid_12_decades();
        for w in [
            WeightFamily::new(WeightKind::Constant(3.0)).unwrap(),
            WeightFamily::new(WeightKind::Constant(3.0))
                .unwrap()
                .with_extension_tail(),
        ] {
            let sharp = sharp_transform(&w, &grid).unwrap();
            assert!(sharp.sup_abs() <= 1e-12);
        }
    }

    #[test]
    fn hardy_average_commutes_with_sharp() {
        // (Pw)# = P(w#) pointwise, an algebraic identity under the
        // extension tail rule.
        let grid = LogGrid::new(1e-5, 1e5, 801).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for _ in 0..20 {
            let vals: Vec<f64> = (0..grid.n_nodes()).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let samples = GridFunction::new(std::sync::Arc::clone(&grid), vals).unwrap();
            let w = WeightFamily::new(WeightKind::Samples(samples.clone())).unwrap();

            let pw = hardy_average(&w, &grid).unwrap();
            let sharp = sharp_transform(&w, &grid).unwrap();
            // P of the sharp samples, same extension tail rule.
            let p_sharp =
                hardy_average_values(&sharp, sharp.values()[0] * grid.t_min()).unwrap();
            // (Pw)#: P applied to Pw (extension tail), minus Pw.
            let ppw = hardy_average_values(&pw, pw.values()[0] * grid.t_min()).unwrap();
            let pw_sharp = ppw.zip_with(&pw, |a, b| a - b).unwrap();
            for k in 0..grid.n_nodes() {
                assert!(
                    (pw_sharp.values()[k] - p_sharp.values()[k]).abs() <= 1e-12,
                    "identity fails at node {k}"
                );
            }
            // Averaging contracts the sup norm.
            assert!(pw_sharp.sup_abs() <= sharp.sup_abs() + 1e-12);
        }
    }

    #[test]
    fn sharp_is_linear_on_samples() {
        let grid = LogGrid::new(1e-4, 1e4, 401).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let mk = |rng: &mut rand_chacha::ChaCha8Rng| {
            let vals: Vec<f64> = (0..grid.n_nodes()).map(|_| rng.gen_range(-2.0..2.0)).collect();
            GridFunction::new(std::sync::Arc::clone(&grid), vals).unwrap()
        };
        let u = mk(&mut rng);
        let v = mk(&mut rng);
        let (a, b) = (0.75, -1.5);
        let combo = combine_samples(a, &u, b, &v).unwrap();
        let sharp_combo = sharp_transform(
            &WeightFamily::new(WeightKind::Samples(combo)).unwrap(),
            &grid,
        )
        .unwrap();
        let sharp_u =
            sharp_transform(&WeightFamily::new(WeightKind::Samples(u)).unwrap(), &grid).unwrap();
        let sharp_v =
            sharp_transform(&WeightFamily::new(WeightKind::Samples(v)).unwrap(), &grid).unwrap();
        for k in 0..grid.n_nodes() {
            let lin = a * sharp_u.values()[k] + b * sharp_v.values()[k];
            assert!((sharp_combo.values()[k] - lin).abs() <= 1e-12);
        }
    }

    #[test]
    fn hardy_average_grows_at_most_logarithmically() {
        // |Pw(t)| <= |Pw(1)| + ||w||_W (1 + |ln t|) + O(haar_step) for
        // bounded-oscillation families.
        let grid = grid_12_decades();
        for kind in [WeightKind::Log, WeightKind::SinLog] {
            let w = WeightFamily::new(kind).unwrap();
            let pw = hardy_average(&w, &grid).unwrap();
            let norm = w_norm(&w, &grid).unwrap();
            let m = grid.unit_index().unwrap();
            let anchor = pw.values()[m].abs();
            let slack = 5.0 * grid.haar_step();
            let start = grid.first_index_at_or_above(1e-3);
            for k in start..grid.n_nodes() {
                let t: f64 = grid.node(k);
                let bound = anchor + norm * (1.0 + t.ln().abs()) + slack;
                assert!(
                    pw.values()[k].abs() <= bound,
                    "growth bound fails at t={t}: |Pw|={} > {bound}",
                    pw.values()[k].abs()
                );
            }
        }
    }

    #[test]
    fn decomposition_reconstructs_and_controls_parts() {
        let grid = grid_12_decades();
        for kind in [WeightKind::Log, WeightKind::SinLog, WeightKind::PowerLog(2)] {
            let w = WeightFamily::new(kind).unwrap();
            let samples = w.sample(&grid).unwrap();
            let dec = decompose_bounded_lipschitz(&w, &grid, DEFAULT_BURN_IN).unwrap();
            for k in 0..grid.n_nodes() {
                let back = dec.bounded_part.values()[k] + dec.lipschitz_part.values()[k];
                assert!((back - samples.values()[k]).abs() <= 1e-12);
            }
            // sup of the bounded part over the burn-in window is ||w||_W.
            assert_eq!(dec.w_norm, w_norm(&w, &grid).unwrap());
            // The averaged part obeys the seminorm bound.
            let w1 = w1_seminorm_values(&dec.lipschitz_part, DEFAULT_BURN_IN);
            assert!(w1 <= dec.w_norm + 1e-10, "w1 {w1} > {}", dec.w_norm);
        }
    }

    #[test]
    fn w1_seminorm_of_phi_log_is_exact() {
        let grid = LogGrid::new(1e-4, 1e4, 201).unwrap();
        // Identity phi: slope exactly 1 everywhere.
        let w = WeightFamily::new(WeightKind::PhiLog {
            xs: vec![-10.0, 0.0, 10.0],
            ys: vec![-10.0, 0.0, 10.0],
        })
        .unwrap();
        assert_eq!(w1_seminorm(&w, &grid).unwrap(), 1.0);
        // Kinked phi: steepest slope wins.
        let w = WeightFamily::new(WeightKind::PhiLog {
            xs: vec![-10.0, 0.0, 10.0],
            ys: vec![5.0, 0.0, 30.0],
        })
        .unwrap();
        assert_eq!(w1_seminorm(&w, &grid).unwrap(), 3.0);
    }

    #[test]
    fn w1_seminorm_bounds_w_norm_on_smooth_families() {
        let grid = grid_12_decades();
        let slack = 5.0 * grid.haar_step();
        for kind in [WeightKind::Log, WeightKind::SinLog, WeightKind::PowerLog(2)] {
            let w = WeightFamily::new(kind.clone()).unwrap();
            let wn = w_norm(&w, &grid).unwrap();
            let w1 = w1_seminorm(&w, &grid).unwrap();
            assert!(
                wn <= w1 + slack,
                "{kind:?}: ||w||_W = {wn} exceeds w1 {w1} + {slack}"
            );
        }
    }

    #[test]
    fn qbar_of_constant_is_minus_log() {
        let grid = grid_12_decades();
        let one = GridFunction::constant(&grid, 1.0);
        let q = qbar(&one).unwrap();
        for (k, &v) in q.values().iter().enumerate() {
            let t: f64 = grid.node(k);
            assert!(
                (v + t.ln()).abs() <= 1e-9 * (1.0 + t.ln().abs()),
                "node {k}: {v} vs {}",
                -t.ln()
            );
        }
    }

    #[test]
    fn qbar_needs_unit_node() {
        let grid = LogGrid::new(2.0, 100.0, 17).unwrap();
        let one = GridFunction::constant(&grid, 1.0);
        assert!(matches!(qbar(&one), Err(Error::MissingUnitNode(_))));
    }

    #[test]
    fn qbar_lands_in_bounded_oscillation() {
        // ||qbar(g)||_W <= 2 sup|g| across a random bounded ensemble.
        let grid = LogGrid::new(1e-5, 1e5, 1001).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(23);
        for _ in 0..25 {
            let vals: Vec<f64> = (0..grid.n_nodes()).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let g = GridFunction::new(std::sync::Arc::clone(&grid), vals).unwrap();
            let sup = g.sup_abs();
            let q = qbar(&g).unwrap();
            let w = WeightFamily::new(WeightKind::Samples(q)).unwrap();
            let norm = w_norm(&w, &grid).unwrap();
            assert!(norm <= 2.0 * sup, "||qbar g||_W = {norm} > 2 sup|g| = {}", 2.0 * sup);
        }
    }

    #[test]
    fn g_transform_of_constant_is_log() {
        let grid = grid_12_decades();
        let one = GridFunction::constant(&grid, 1.0);
        let gt = g_transform(&one).unwrap();
        for (k, &v) in gt.values().iter().enumerate() {
            let t: f64 = grid.node(k);
            assert!((v - t.ln()).abs() <= 1e-9 * (1.0 + t.ln().abs()));
        }
    }

    #[test]
    fn g_transform_slope_matches_sup_of_weight() {
        // sup |s (Gw)'| = sup|w|; discretely within one grid step.
        let grid = grid_12_decades();
        let w = WeightFamily::new(WeightKind::SinLog).unwrap();
        let samples = w.sample(&grid).unwrap();
        let gt = g_transform(&samples).unwrap();
        let w1 = w1_seminorm_values(&gt, 1.0);
        let sup = samples.sup_abs();
        assert!(
            (w1 - sup).abs() <= grid.haar_step() * sup,
            "w1 {w1} vs sup {sup}"
        );
    }

    #[test]
    fn rearrange_fixes_sorted_input() {
        let grid = LogGrid::new(1e-2, 1e2, 101).unwrap();
        let g = GridFunction::from_fn(&grid, |t| 1.0 / (1.0 + t));
        let r = rearrange(&g);
        // Identity on every mass-carrying node; the final node carries no
        // Lebesgue mass and holds the smallest magnitude instead.
        for k in 0..grid.support_len() {
            assert_relative_eq!(r.values()[k], g.values()[k], max_relative = 1e-12);
        }
    }

    #[test]
    fn rearrange_is_monotone_and_conserves_mass() {
        let grid = LogGrid::new(1e-3, 1e3, 1201).unwrap();
        let g = GridFunction::from_fn(&grid, |t| t.ln().sin().abs());
        let r = rearrange(&g);
        for k in 0..grid.n_nodes() - 1 {
            assert!(r.values()[k] >= r.values()[k + 1] - 1e-15);
        }
        let steps = grid.lebesgue_steps();
        let mass = |f: &GridFunction| -> f64 {
            f.values()[..grid.support_len()]
                .iter()
                .zip(steps)
                .map(|(&v, &s)| v.abs() * s)
                .sum()
        };
        let (m0, m1) = (mass(&g), mass(&r));
        assert!(
            (m0 - m1).abs() <= 0.01 * m0,
            "mass not conserved: {m0} vs {m1}"
        );
    }

    #[test]
    fn rearrange_of_constant_is_constant() {
        let grid = LogGrid::new(0.5, 2.0, 33).unwrap();
        let g = GridFunction::constant(&grid, -0.7);
        let r = rearrange(&g);
        for &v in r.values() {
            assert_eq!(v, 0.7);
        }
    }

    #[test]
    fn power_log_tail_moment_matches_quadrature() {
        // Construction runs the self-check; just make sure kinds build.
        for n in [1, 2, 3, 4] {
            WeightFamily::new(WeightKind::PowerLog(n)).unwrap();
        }
    }

    #[test]
    fn boundary_decay_improves_with_wider_grids() {
        // t^theta w(t) at the lower edge shrinks as the grid widens.
        let theta = 0.3;
        let mut last = f64::INFINITY;
        for (lo, hi, n) in [(1e-4, 1e4, 401), (1e-6, 1e6, 601), (1e-8, 1e8, 801)] {
            let grid = LogGrid::new(lo, hi, n).unwrap();
            let w = WeightFamily::new(WeightKind::Log).unwrap();
            let v = grid.t_min().powf(theta) * w.eval(grid.t_min()).abs();
            assert!(v < last, "edge value {v} did not decrease (prev {last})");
            last = v;
        }
    }

    #[test]
    fn haar_integral_of_sin_log_sharp_checks_out() {
        // Cross-check the closed form w# = -(sin+cos)/2 against Haar
        // integration: int_a^b -(sin x + cos x)/2 dx = -sin(b) for b = -a.
        let grid = grid_12_decades();
        let w = WeightFamily::new(WeightKind::SinLog).unwrap();
        let sharp = sharp_transform(&w, &grid).unwrap();
        let total = integrate_haar(&sharp);
        let expect = -(1e6f64.ln().sin());
        assert!(
            (total - expect).abs() < 0.05,
            "got {total}, closed form {expect}"
        );
    }
}
