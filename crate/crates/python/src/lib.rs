//! Python bindings for the `giurn` library.

use std::collections::BTreeMap;

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use giurn::simulate::{self, EstimateMode, Fixation, Horizon, RunOptions};
use giurn::{analytic, oracle, Error, ModelParams, RngStream, SystemState, WeightSequence, WeightTerm};

fn to_py(e: Error) -> PyErr {
    match e {
        Error::BudgetExceeded(_) | Error::Singular(_) => PyRuntimeError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

/// Reinforcement weights `u * inf^v`.
#[pyclass(name = "Weights", module = "pygiurn", frozen, from_py_object)]
#[derive(Clone)]
struct PyWeights {
    inner: WeightSequence,
}

#[pymethods]
impl PyWeights {
    /// Weights `inf^i`.
    #[staticmethod]
    fn infinite() -> Self {
        Self { inner: WeightSequence::GeneralizedPower }
    }

    /// Weights `rho^i` with `rho > 1`.
    #[staticmethod]
    fn classical(rho: f64) -> PyResult<Self> {
        Ok(Self { inner: WeightSequence::classical(rho).map_err(to_py)? })
    }

    /// Finite table of `(u, v)` pairs; drawing past its end is an error.
    #[staticmethod]
    fn table(terms: Vec<(f64, f64)>) -> PyResult<Self> {
        let terms = terms
            .into_iter()
            .map(|(u, v)| WeightTerm::from_magnitude(u, v))
            .collect::<giurn::Result<Vec<_>>>()
            .map_err(to_py)?;
        Ok(Self { inner: WeightSequence::table(terms).map_err(to_py)? })
    }

    fn draw_prob(&self, counts: Vec<u64>, color: usize) -> PyResult<f64> {
        giurn::draw_prob(&self.inner, &counts, color).map_err(to_py)
    }

    fn draw_distribution(&self, counts: Vec<u64>) -> PyResult<Vec<f64>> {
        let mut out = vec![0.0; counts.len()];
        giurn::weights::draw_distribution(&self.inner, &counts, &mut out).map_err(to_py)?;
        Ok(out)
    }

    fn __repr__(&self) -> String {
        match &self.inner {
            WeightSequence::GeneralizedPower => "Weights.infinite()".into(),
            WeightSequence::Classical { rho } => format!("Weights.classical({rho})"),
            WeightSequence::Table(t) => format!("Weights.table(<{} terms>)", t.len()),
        }
    }
}

/// Ball counts of every urn.
#[pyclass(name = "State", module = "pygiurn", frozen)]
struct PyState {
    inner: SystemState,
}

#[pymethods]
impl PyState {
    #[new]
    fn new(rows: Vec<Vec<u64>>) -> PyResult<Self> {
        Ok(Self { inner: SystemState::from_rows(&rows).map_err(to_py)? })
    }

    #[getter]
    fn counts(&self) -> Vec<Vec<u64>> {
        (0..self.inner.urns()).map(|u| self.inner.urn(u).to_vec()).collect()
    }

    /// Class label such as `C1(2)`, `C2(0)` or `C3` (two urns, two colors).
    fn classify(&self) -> PyResult<String> {
        Ok(self.inner.classify().map_err(to_py)?.to_string())
    }

    fn consensus_color(&self) -> Option<usize> {
        self.inner.consensus_color()
    }

    fn __repr__(&self) -> String {
        format!("State({:?})", self.counts())
    }
}

#[pyfunction]
fn classify(b1: u64, w1: u64, b2: u64, w2: u64) -> String {
    giurn::classify(b1, w1, b2, w2).to_string()
}

#[pyfunction]
fn q0(p: f64) -> PyResult<f64> {
    analytic::q0(p).map_err(to_py)
}

#[pyfunction]
fn q_ell(p: f64, ell: u32) -> PyResult<f64> {
    analytic::q_ell(p, ell).map_err(to_py)
}

#[pyfunction]
fn r_ell(p: f64, ell: u32) -> PyResult<f64> {
    analytic::r_ell(p, ell).map_err(to_py)
}

#[pyfunction]
fn lambda_pm(p: f64) -> PyResult<(f64, f64)> {
    analytic::lambda_pm(p).map_err(to_py)
}

#[pyfunction]
fn nonconformist_pmf(urns: u32, p: f64) -> PyResult<Vec<f64>> {
    analytic::nonconformist_pmf(urns, p).map_err(to_py)
}

#[pyfunction]
fn multicolor_q(colors: u32, p: f64) -> PyResult<f64> {
    analytic::multicolor_q(colors, p).map_err(to_py)
}

#[pyfunction]
fn gw_total_progeny_gf(p: f64, nu: f64) -> PyResult<f64> {
    analytic::gw_total_progeny_gf(p, nu).map_err(to_py)
}

/// Lower and upper bracket vectors for `q` and `r` from the truncated solve.
#[pyfunction]
#[pyo3(signature = (p, levels = 400))]
fn fixation_table<'py>(py: Python<'py>, p: f64, levels: usize) -> PyResult<Bound<'py, PyDict>> {
    let t = oracle::fixation_table(p, levels).map_err(to_py)?;
    let d = PyDict::new(py);
    d.set_item("q_lower", t.q_lower)?;
    d.set_item("q_upper", t.q_upper)?;
    d.set_item("r_lower", t.r_lower)?;
    d.set_item("r_upper", t.r_upper)?;
    Ok(d)
}

fn parse_horizon(h: Option<u64>) -> Horizon {
    h.map(Horizon::Fixed).unwrap_or_default()
}

/// Monte Carlo fixation probability. `mode` is `"ruin"` or `"bracket"`.
#[pyfunction]
#[pyo3(signature = (p, weights = None, urns = 2, colors = 2, replicas = 10_000, seed = 0, mode = "bracket", horizon = None))]
#[allow(clippy::too_many_arguments)]
fn estimate_fixation<'py>(
    py: Python<'py>,
    p: f64,
    weights: Option<PyWeights>,
    urns: usize,
    colors: usize,
    replicas: u64,
    seed: u64,
    mode: &str,
    horizon: Option<u64>,
) -> PyResult<Bound<'py, PyDict>> {
    let w = weights.map(|w| w.inner).unwrap_or(WeightSequence::GeneralizedPower);
    let params = ModelParams::new(urns, colors, p, w).map_err(to_py)?;
    let mode = match mode {
        "ruin" => EstimateMode::RuinShortcut,
        "bracket" => EstimateMode::Bracket(parse_horizon(horizon)),
        other => return Err(PyValueError::new_err(format!("unknown mode `{other}`"))),
    };
    let est = py.detach(|| simulate::estimate_fixation(&params, replicas, seed, mode)).map_err(to_py)?;
    let d = PyDict::new(py);
    d.set_item("replicas", est.replicas)?;
    d.set_item("fixated", est.fixated)?;
    d.set_item("escaped", est.escaped)?;
    d.set_item("unresolved", est.unresolved)?;
    d.set_item("lower", est.lower)?;
    d.set_item("upper", est.upper)?;
    d.set_item("point", est.point)?;
    d.set_item("stderr", est.stderr)?;
    Ok(d)
}

/// One trajectory from the empty state: class labels per step (two urns,
/// two colors) and the fixation outcome.
#[pyfunction]
#[pyo3(signature = (p, weights = None, seed = 0, replica = 0, horizon = 200))]
fn trajectory<'py>(
    py: Python<'py>,
    p: f64,
    weights: Option<PyWeights>,
    seed: u64,
    replica: u64,
    horizon: u64,
) -> PyResult<Bound<'py, PyDict>> {
    let w = weights.map(|w| w.inner).unwrap_or(WeightSequence::GeneralizedPower);
    let params = ModelParams::new(2, 2, p, w).map_err(to_py)?;
    let options = RunOptions { horizon: Horizon::Fixed(horizon), record_steps: true, ..RunOptions::default() };
    let tr = simulate::run(&params, RngStream::new(seed, replica), &options).map_err(to_py)?;
    let d = PyDict::new(py);
    d.set_item("classes", tr.classes.iter().map(|c| c.to_string()).collect::<Vec<_>>())?;
    d.set_item("sigma2", tr.sigma2)?;
    d.set_item("sigma3", tr.sigma3)?;
    d.set_item("tau", tr.tau)?;
    let fixation = match tr.fixation {
        Fixation::Fixated(c) => Some(c),
        _ => None,
    };
    d.set_item("fixated_color", fixation)?;
    d.set_item("final_counts", (0..2).map(|u| tr.final_state.urn(u).to_vec()).collect::<Vec<_>>())?;
    Ok(d)
}

/// First `horizon` colors drawn by a single urn. `sampler` is `"direct"` or `"rubin"`.
#[pyfunction]
#[pyo3(signature = (weights, horizon, seed = 0, replica = 0, sampler = "rubin"))]
fn single_urn(weights: PyWeights, horizon: usize, seed: u64, replica: u64, sampler: &str) -> PyResult<Vec<usize>> {
    let mut rng = RngStream::new(seed, replica).rng();
    match sampler {
        "rubin" => simulate::rubin_single_urn(&weights.inner, horizon, &mut rng),
        "direct" => simulate::direct_single_urn(&weights.inner, horizon, &mut rng),
        other => return Err(PyValueError::new_err(format!("unknown sampler `{other}`"))),
    }
    .map_err(to_py)
}

/// Exact law of the first `steps` colors of a single urn, keyed by
/// sequences such as `"BWWB"` (B is color 0).
#[pyfunction]
fn single_urn_law(weights: PyWeights, steps: usize) -> PyResult<BTreeMap<String, f64>> {
    let law = oracle::single_urn_sequence_law(&weights.inner, steps).map_err(to_py)?;
    Ok(law
        .into_iter()
        .map(|(seq, prob)| (seq.iter().map(|&c| if c == 0 { 'B' } else { 'W' }).collect(), prob))
        .collect())
}

#[pymodule]
fn pygiurn(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyWeights>()?;
    m.add_class::<PyState>()?;
    m.add_function(wrap_pyfunction!(classify, m)?)?;
    m.add_function(wrap_pyfunction!(q0, m)?)?;
    m.add_function(wrap_pyfunction!(q_ell, m)?)?;
    m.add_function(wrap_pyfunction!(r_ell, m)?)?;
    m.add_function(wrap_pyfunction!(lambda_pm, m)?)?;
    m.add_function(wrap_pyfunction!(nonconformist_pmf, m)?)?;
    m.add_function(wrap_pyfunction!(multicolor_q, m)?)?;
    m.add_function(wrap_pyfunction!(gw_total_progeny_gf, m)?)?;
    m.add_function(wrap_pyfunction!(fixation_table, m)?)?;
    m.add_function(wrap_pyfunction!(estimate_fixation, m)?)?;
    m.add_function(wrap_pyfunction!(trajectory, m)?)?;
    m.add_function(wrap_pyfunction!(single_urn, m)?)?;
    m.add_function(wrap_pyfunction!(single_urn_law, m)?)?;
    Ok(())
}
