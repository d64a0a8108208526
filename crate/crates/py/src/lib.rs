//! Python bindings for the discrete real-interpolation toolkit: grids,
//! weights, couple pairs, J-method norms, commutators, and the
//! verification suites.
//!
//! Configuration errors raise `ValueError`; numerical failures raise
//! `RuntimeError`.

use std::sync::Arc;

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use realinterp::commutators::{higher_commutator, omega_n, OmegaConfig, SelectorContext};
use realinterp::error::Error;
use realinterp::grid::{Grid, GridFunction, LogGrid};
use realinterp::harness::{OperatorSpec, Suite};
use realinterp::jmethod::{jnorm as jnorm_rs, JNormMethod, SolverConfig, ThetaQ};
use realinterp::pairs::{operator_pair_norm, CouplePair, NormSpec, PNorm, PairOperator};
use realinterp::weights::{
    g_transform, hardy_average, sharp_transform, w1_seminorm, w_norm, WeightFamily, WeightKind,
};

fn to_py_err(e: Error) -> PyErr {
    match e.exit_code() {
        2 => PyValueError::new_err(e.to_string()),
        _ => PyRuntimeError::new_err(e.to_string()),
    }
}

fn parse_pnorm(p: &str) -> PyResult<PNorm> {
    match p {
        "l1" => Ok(PNorm::One),
        "linf" => Ok(PNorm::Inf),
        other => Err(PyValueError::new_err(format!(
            "unknown norm exponent {other:?}; use \"l1\" or \"linf\""
        ))),
    }
}

fn parse_method(method: &str) -> PyResult<JNormMethod> {
    match method {
        "fundamental" => Ok(JNormMethod::Fundamental),
        "solver" => Ok(JNormMethod::Solver),
        "oracle" => Ok(JNormMethod::Oracle),
        other => Err(PyValueError::new_err(format!(
            "unknown method {other:?}; use fundamental, solver, or oracle"
        ))),
    }
}

fn budget(iters: usize) -> SolverConfig {
    SolverConfig {
        max_iters: iters,
        tolerance: 0.0,
        patience: 0,
    }
}

/// Logarithmic grid `t_k = t_min * r^k` with `t_max` as the last node.
#[pyclass(frozen, skip_from_py_object, name = "Grid")]
#[derive(Clone)]
struct PyGrid {
    inner: Grid,
}

#[pymethods]
impl PyGrid {
    #[new]
    fn new(t_min: f64, t_max: f64, n_nodes: usize) -> PyResult<Self> {
        Ok(Self {
            inner: LogGrid::new(t_min, t_max, n_nodes).map_err(to_py_err)?,
        })
    }

    #[getter]
    fn n_nodes(&self) -> usize {
        self.inner.n_nodes()
    }

    #[getter]
    fn haar_step(&self) -> f64 {
        self.inner.haar_step()
    }

    fn nodes(&self) -> Vec<f64> {
        self.inner.nodes().to_vec()
    }

    fn __repr__(&self) -> String {
        format!(
            "Grid(t_min={:e}, t_max={:e}, n_nodes={})",
            self.inner.t_min(),
            self.inner.t_max(),
            self.inner.n_nodes()
        )
    }
}

/// A weight family `w(t)`; the oscillation calculus lives here.
#[pyclass(frozen, skip_from_py_object, name = "Weight")]
#[derive(Clone)]
struct PyWeight {
    inner: WeightFamily,
}

impl PyWeight {
    fn build(kind: WeightKind) -> PyResult<Self> {
        Ok(Self {
            inner: WeightFamily::new(kind).map_err(to_py_err)?,
        })
    }
}

#[pymethods]
impl PyWeight {
    #[staticmethod]
    fn log() -> PyResult<Self> {
        Self::build(WeightKind::Log)
    }

    #[staticmethod]
    fn constant(value: f64) -> PyResult<Self> {
        Self::build(WeightKind::Constant(value))
    }

    #[staticmethod]
    fn power_log(power: u32) -> PyResult<Self> {
        Self::build(WeightKind::PowerLog(power))
    }

    #[staticmethod]
    fn sin_log() -> PyResult<Self> {
        Self::build(WeightKind::SinLog)
    }

    /// Wraps raw node samples (extension-mode tail below the grid).
    #[staticmethod]
    fn samples(grid: &PyGrid, values: Vec<f64>) -> PyResult<Self> {
        let gf = GridFunction::new(grid.inner.clone(), values).map_err(to_py_err)?;
        Ok(Self {
            inner: WeightFamily::new(WeightKind::Samples(gf))
                .map_err(to_py_err)?
                .with_extension_tail(),
        })
    }

    fn sample(&self, grid: &PyGrid) -> PyResult<Vec<f64>> {
        Ok(self
            .inner
            .sample(&grid.inner)
            .map_err(to_py_err)?
            .values()
            .to_vec())
    }

    /// `Pw`: the Hardy average `(1/t) int_0^t w`.
    fn hardy(&self, grid: &PyGrid) -> PyResult<Vec<f64>> {
        Ok(hardy_average(&self.inner, &grid.inner)
            .map_err(to_py_err)?
            .values()
            .to_vec())
    }

    /// `w# = Pw - w`.
    fn sharp(&self, grid: &PyGrid) -> PyResult<Vec<f64>> {
        Ok(sharp_transform(&self.inner, &grid.inner)
            .map_err(to_py_err)?
            .values()
            .to_vec())
    }

    /// `Gw`: the K-method bridge transform.
    fn g_transform(&self, grid: &PyGrid) -> PyResult<Vec<f64>> {
        let samples = self.inner.sample(&grid.inner).map_err(to_py_err)?;
        Ok(g_transform(&samples).map_err(to_py_err)?.values().to_vec())
    }

    fn w_norm(&self, grid: &PyGrid) -> PyResult<f64> {
        w_norm(&self.inner, &grid.inner).map_err(to_py_err)
    }

    fn w1_seminorm(&self, grid: &PyGrid) -> PyResult<f64> {
        w1_seminorm(&self.inner, &grid.inner).map_err(to_py_err)
    }
}

/// A couple of weighted `l1`/`linf` norms on a shared finite dimension.
#[pyclass(frozen, skip_from_py_object, name = "Pair")]
#[derive(Clone)]
struct PyPair {
    inner: CouplePair,
}

#[pymethods]
impl PyPair {
    #[new]
    fn new(p0: &str, scale0: Vec<f64>, p1: &str, scale1: Vec<f64>) -> PyResult<Self> {
        let norm0 = NormSpec::new(parse_pnorm(p0)?, scale0).map_err(to_py_err)?;
        let norm1 = NormSpec::new(parse_pnorm(p1)?, scale1).map_err(to_py_err)?;
        Ok(Self {
            inner: CouplePair::new(norm0, norm1).map_err(to_py_err)?,
        })
    }

    #[getter]
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    /// `J(t, x) = max(||x||_0, t ||x||_1)`.
    fn j_functional(&self, t: f64, x: Vec<f64>) -> PyResult<f64> {
        let n0 = self.inner.norm0.norm(&x).map_err(to_py_err)?;
        let n1 = self.inner.norm1.norm(&x).map_err(to_py_err)?;
        Ok(n0.max(t * n1))
    }
}

/// Interpolation parameters `(theta, q)`; pass `q` as a float or `"inf"`.
#[pyclass(frozen, skip_from_py_object, name = "ThetaQ")]
#[derive(Clone)]
struct PyThetaQ {
    inner: ThetaQ,
}

#[pymethods]
impl PyThetaQ {
    #[new]
    fn new(theta: f64, q: &Bound<'_, PyAny>) -> PyResult<Self> {
        let inner = if let Ok(name) = q.extract::<String>() {
            if name == "inf" {
                ThetaQ::sup(theta).map_err(to_py_err)?
            } else {
                return Err(PyValueError::new_err(format!(
                    "q must be a number or \"inf\", got {name:?}"
                )));
            }
        } else {
            ThetaQ::finite(theta, q.extract::<f64>()?).map_err(to_py_err)?
        };
        Ok(Self { inner })
    }

    #[getter]
    fn theta(&self) -> f64 {
        self.inner.theta()
    }
}

/// A matrix operator between couples with its exact endpoint norms.
#[pyclass(frozen, name = "Operator")]
struct PyOperator {
    inner: PairOperator,
}

#[pymethods]
impl PyOperator {
    #[staticmethod]
    fn from_matrix(rows: Vec<Vec<f64>>, src: &PyPair, dst: &PyPair) -> PyResult<Self> {
        Ok(Self {
            inner: operator_pair_norm(rows, src.inner.clone(), dst.inner.clone())
                .map_err(to_py_err)?,
        })
    }

    #[staticmethod]
    fn identity(pair: &PyPair) -> PyResult<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        Ok(Self {
            inner: OperatorSpec::Identity
                .realize(&mut rng, &pair.inner, &pair.inner)
                .map_err(to_py_err)?,
        })
    }

    /// Seeded random entries in (-1, 1), rescaled to pair norm 1.
    #[staticmethod]
    fn random(seed: u64, src: &PyPair, dst: &PyPair) -> PyResult<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Ok(Self {
            inner: OperatorSpec::Random
                .realize(&mut rng, &src.inner, &dst.inner)
                .map_err(to_py_err)?,
        })
    }

    #[getter]
    fn pair_norm(&self) -> f64 {
        self.inner.pair_norm
    }

    #[getter]
    fn matrix(&self) -> Vec<Vec<f64>> {
        self.inner.matrix.clone()
    }

    fn apply(&self, x: Vec<f64>) -> PyResult<Vec<f64>> {
        self.inner.apply(&x).map_err(to_py_err)
    }
}

/// J-method norm of `f`. Returns `(value, u)` where `u` is the certified
/// near-optimal representation (rows indexed by grid node).
#[pyfunction]
#[pyo3(signature = (f, pair, tq, grid, method="solver", iters=6000))]
fn jnorm(
    f: Vec<f64>,
    pair: &PyPair,
    tq: &PyThetaQ,
    grid: &PyGrid,
    method: &str,
    iters: usize,
) -> PyResult<(f64, Vec<Vec<f64>>)> {
    let method = parse_method(method)?;
    let (value, rep) = jnorm_rs(
        &f,
        &pair.inner,
        &tq.inner,
        &grid.inner,
        method,
        &budget(iters),
    )
    .map_err(to_py_err)?;
    Ok((value, rep.u().to_vec()))
}

/// `Omega_{n,w} f` via the deterministic near-optimal selector.
#[pyfunction]
#[pyo3(signature = (f, weight, pair, grid, tq, order=1, iters=6000))]
fn omega(
    f: Vec<f64>,
    weight: &PyWeight,
    pair: &PyPair,
    grid: &PyGrid,
    tq: &PyThetaQ,
    order: u32,
    iters: usize,
) -> PyResult<Vec<f64>> {
    let ctx = Arc::new(SelectorContext::new(
        grid.inner.clone(),
        tq.inner,
        JNormMethod::Solver,
        budget(iters),
    ));
    let cfg = OmegaConfig::new(weight.inner.clone(), order, ctx).map_err(to_py_err)?;
    omega_n(&f, &cfg, &pair.inner).map_err(to_py_err)
}

/// The order-`n` recursive commutator `C_n f` (order 1 = `[T, Omega_w] f`).
#[pyfunction]
#[pyo3(signature = (op, weight, f, grid, tq, order=1, iters=6000))]
fn commutator(
    op: &PyOperator,
    weight: &PyWeight,
    f: Vec<f64>,
    grid: &PyGrid,
    tq: &PyThetaQ,
    order: u32,
    iters: usize,
) -> PyResult<Vec<f64>> {
    if order == 0 {
        return Err(PyValueError::new_err("order must be at least 1"));
    }
    let ctx = SelectorContext::new(
        grid.inner.clone(),
        tq.inner,
        JNormMethod::Solver,
        budget(iters),
    );
    higher_commutator(&op.inner, &weight.inner, &f, order, &ctx).map_err(to_py_err)
}

/// K-method operator `Omega^K_w f` (diagonal l1/l1 pairs, t=1 on the grid).
#[pyfunction]
fn omega_k(f: Vec<f64>, weight: &PyWeight, pair: &PyPair, grid: &PyGrid) -> PyResult<Vec<f64>> {
    realinterp::commutators::omega_k(&f, &weight.inner, &pair.inner, &grid.inner)
        .map_err(to_py_err)
}

/// Runs a verification suite (`representation`, `commutator`, `higher`,
/// or `probe`) and returns the report as a JSON string. `config_json`, if
/// given, is a partial override of the suite's default campaign.
#[pyfunction]
#[pyo3(signature = (suite, config_json=None))]
fn run_suite(suite: &str, config_json: Option<&str>) -> PyResult<String> {
    let suite = Suite::parse(suite).map_err(to_py_err)?;
    let mut base = serde_json::to_value(suite.defaults())
        .map_err(|e| PyRuntimeError::new_err(e.to_string()))?;
    if let Some(text) = config_json {
        let over: serde_json::Value = serde_json::from_str(text)
            .map_err(|e| PyValueError::new_err(format!("config_json: {e}")))?;
        let (Some(base_map), Some(over_map)) = (base.as_object_mut(), over.as_object()) else {
            return Err(PyValueError::new_err("config_json must be a JSON object"));
        };
        for (k, v) in over_map {
            base_map.insert(k.clone(), v.clone());
        }
    }
    let cfg = serde_json::from_value(base)
        .map_err(|e| PyValueError::new_err(format!("config_json: {e}")))?;
    let report = suite.run(&cfg).map_err(to_py_err)?;
    Ok(report.to_json())
}

#[pymodule]
fn realinterp_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyGrid>()?;
    m.add_class::<PyWeight>()?;
    m.add_class::<PyPair>()?;
    m.add_class::<PyThetaQ>()?;
    m.add_class::<PyOperator>()?;
    m.add_function(wrap_pyfunction!(jnorm, m)?)?;
    m.add_function(wrap_pyfunction!(omega, m)?)?;
    m.add_function(wrap_pyfunction!(commutator, m)?)?;
    m.add_function(wrap_pyfunction!(omega_k, m)?)?;
    m.add_function(wrap_pyfunction!(run_suite, m)?)?;
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    Ok(())
}
