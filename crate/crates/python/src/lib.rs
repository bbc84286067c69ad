//! Python bindings for `germ-core`.
//!
//! Meeting times map to Python as a float, `None` (no meeting) or
//! `math.inf` (beyond the horizon). Parameter and parse errors raise
//! `ValueError`; file errors raise `OSError`.

use std::path::PathBuf;

use germ_core::coupling::{self, MeetingTime, Trajectory};
use germ_core::paths::{self, DriftedLaw, TimeGrid};
use germ_core::rng::{self, RngStream};
use germ_core::verify::{self, VerifyConfig};
use germ_core::{stats, subordinator, Error};
use pyo3::exceptions::{PyIOError, PyValueError};
use pyo3::prelude::*;

fn to_py(e: Error) -> PyErr {
    match e {
        Error::Io { .. } => PyIOError::new_err(e.to_string()),
        other => PyValueError::new_err(other.to_string()),
    }
}

fn meeting(m: MeetingTime) -> Option<f64> {
    match m {
        MeetingTime::At(t) => Some(t),
        MeetingTime::Never => None,
        MeetingTime::BeyondHorizon => Some(f64::INFINITY),
    }
}

fn meetings(ms: &[MeetingTime]) -> Vec<Option<f64>> {
    ms.iter().copied().map(meeting).collect()
}

/// A seeded ChaCha8 stream; `(seed, stream_id)` pairs are independent.
#[pyclass(name = "RngStream", module = "germ_coupling")]
struct PyRngStream {
    inner: RngStream,
}

#[pymethods]
impl PyRngStream {
    #[new]
    #[pyo3(signature = (seed, stream_id = 0))]
    fn new(seed: u64, stream_id: u64) -> Self {
        Self {
            inner: RngStream::new(seed, stream_id),
        }
    }

    /// Stream `task_id` of a run seed, as used by the command-line tool.
    #[staticmethod]
    fn substream(seed: u64, task_id: u64) -> Self {
        Self {
            inner: rng::substream(seed, task_id),
        }
    }

    #[getter]
    fn seed(&self) -> u64 {
        self.inner.seed()
    }

    #[getter]
    fn stream_id(&self) -> u64 {
        self.inner.stream_id()
    }

    fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    fn uniform01(&mut self) -> f64 {
        self.inner.uniform01()
    }

    fn standard_normal(&mut self) -> f64 {
        self.inner.standard_normal()
    }

    fn standard_normals(&mut self, n: usize) -> Vec<f64> {
        let mut out = vec![0.0; n];
        self.inner.fill_standard_normal(&mut out);
        out
    }
}

/// A path sampled on the uniform grid `i * horizon / n_steps`.
#[pyclass(name = "Path", module = "germ_coupling")]
struct PyPath {
    inner: paths::Path,
}

impl PyPath {
    fn wrap(inner: paths::Path) -> Self {
        Self { inner }
    }
}

#[pymethods]
impl PyPath {
    #[new]
    fn new(horizon: f64, values: Vec<f64>) -> PyResult<Self> {
        let n_steps = values.len().saturating_sub(1);
        let grid = TimeGrid::new(horizon, n_steps).map_err(to_py)?;
        paths::Path::new(grid, values).map(Self::wrap).map_err(to_py)
    }

    #[getter]
    fn horizon(&self) -> f64 {
        self.inner.grid().horizon()
    }

    #[getter]
    fn n_steps(&self) -> usize {
        self.inner.grid().n_steps()
    }

    #[getter]
    fn dt(&self) -> f64 {
        self.inner.grid().dt()
    }

    #[getter]
    fn times(&self) -> Vec<f64> {
        self.inner.grid().times().collect()
    }

    #[getter]
    fn values(&self) -> Vec<f64> {
        self.inner.values().to_vec()
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    fn __repr__(&self) -> String {
        format!(
            "Path(horizon={}, n_steps={}, end={})",
            self.inner.grid().horizon(),
            self.inner.grid().n_steps(),
            self.inner.end()
        )
    }
}

#[pyfunction]
#[pyo3(signature = (horizon, n_steps, stream, drift = 0.0, start = 0.0))]
fn sample_bm(horizon: f64, n_steps: usize, stream: &mut PyRngStream, drift: f64, start: f64) -> PyResult<PyPath> {
    let grid = TimeGrid::new(horizon, n_steps).map_err(to_py)?;
    let law = DriftedLaw::new(drift, start).map_err(to_py)?;
    Ok(PyPath::wrap(paths::sample_bm(&grid, law, &mut stream.inner)))
}

#[pyfunction]
fn line_value(theta: f64, t: f64) -> f64 {
    paths::line_value(theta, t)
}

#[pyfunction]
fn load_csv(file: PathBuf) -> PyResult<PyPath> {
    paths::load_csv(&file).map(PyPath::wrap).map_err(to_py)
}

#[pyfunction]
fn save_csv(path: &PyPath, file: PathBuf) -> PyResult<()> {
    paths::save_csv(&path.inner, &file).map_err(to_py)
}

#[pyfunction]
fn last_visit(w: &PyPath, theta: f64) -> Option<f64> {
    meeting(coupling::last_visit(&w.inner, theta))
}

#[pyfunction]
fn h_theta(w: &PyPath, theta: f64) -> PyPath {
    PyPath::wrap(coupling::h_theta(&w.inner, theta))
}

#[pyfunction]
fn germ_transform(w: &PyPath, u: f64, theta: f64) -> PyResult<PyPath> {
    coupling::germ_transform(&w.inner, u, theta)
        .map(PyPath::wrap)
        .map_err(to_py)
}

/// `(branch, frag_time)` for the coupling of `stem` with drift `theta`.
#[pyfunction]
fn couple(stem: &PyPath, u: f64, theta: f64) -> PyResult<(PyPath, Option<f64>)> {
    let pair = coupling::couple(stem.inner.clone(), u, theta).map_err(to_py)?;
    Ok((PyPath::wrap(pair.branch), meeting(pair.frag_time)))
}

#[pyfunction]
fn frag_time(p1: &PyPath, p2: &PyPath) -> PyResult<Option<f64>> {
    coupling::frag_time(&p1.inner, &p2.inner).map(meeting).map_err(to_py)
}

/// `(times, values)` of `s * w(1/s)` for grid times `t >= t_min`.
#[pyfunction]
fn time_invert(w: &PyPath, t_min: f64) -> PyResult<(Vec<f64>, Vec<f64>)> {
    let inv = coupling::time_invert(&w.inner, t_min).map_err(to_py)?;
    Ok((inv.times().to_vec(), inv.values().to_vec()))
}

#[pyfunction]
#[pyo3(signature = (p1, p2, tol = 0.0))]
fn first_meeting(p1: &PyPath, p2: &PyPath, tol: f64) -> PyResult<Option<f64>> {
    coupling::first_meeting(&p1.inner, &p2.inner, tol)
        .map(meeting)
        .map_err(to_py)
}

#[pyfunction]
fn last_meeting(p1: &PyPath, p2: &PyPath) -> PyResult<Option<f64>> {
    coupling::last_meeting(&p1.inner, &p2.inner)
        .map(meeting)
        .map_err(to_py)
}

#[pyfunction]
fn first_passage(w: &PyPath, level: f64) -> Option<f64> {
    meeting(coupling::first_passage(&w.inner, level))
}

#[pyfunction]
fn frag_process(stem: &PyPath, thetas: Vec<f64>) -> PyResult<Vec<Option<f64>>> {
    let grid = subordinator::DriftGrid::new(thetas).map_err(to_py)?;
    Ok(meetings(&subordinator::frag_process(&stem.inner, &grid).times))
}

#[pyfunction]
#[pyo3(signature = (stem, thetas, t_min = None))]
fn frag_process_dual(stem: &PyPath, thetas: Vec<f64>, t_min: Option<f64>) -> PyResult<Vec<Option<f64>>> {
    let grid = subordinator::DriftGrid::new(thetas).map_err(to_py)?;
    let p = subordinator::frag_process_dual(&stem.inner, &grid, t_min).map_err(to_py)?;
    Ok(meetings(&p.times))
}

#[pyfunction]
fn first_passage_process(w: &PyPath, thetas: Vec<f64>) -> PyResult<Vec<Option<f64>>> {
    let grid = subordinator::DriftGrid::new(thetas).map_err(to_py)?;
    Ok(meetings(&subordinator::first_passage_process(&w.inner, &grid).times))
}

#[pyfunction]
fn sample_stable_half_passage(a: f64, stream: &mut PyRngStream) -> PyResult<f64> {
    subordinator::sample_stable_half_passage(a, &mut stream.inner).map_err(to_py)
}

#[pyfunction]
fn std_normal_cdf(x: f64) -> f64 {
    stats::std_normal_cdf(x)
}

#[pyfunction]
fn std_normal_quantile(p: f64) -> f64 {
    stats::std_normal_quantile(p)
}

#[pyfunction]
fn frag_cdf(theta: f64, t: f64) -> PyResult<f64> {
    stats::frag_cdf(theta, t).map_err(to_py)
}

#[pyfunction]
fn levy_cdf(a: f64, t: f64) -> f64 {
    stats::levy_cdf(a, t)
}

#[pyfunction]
fn branch_probability(theta: f64, horizon: f64) -> f64 {
    stats::branch_probability(theta, horizon)
}

#[pyfunction]
fn ks_threshold(n: usize, alpha: f64) -> PyResult<f64> {
    stats::ks_threshold(n, alpha).map_err(to_py)
}

/// Runs the verification suite and returns its reports as a JSON string.
#[pyfunction]
#[pyo3(signature = (seed = 0, alpha = 0.001))]
fn run_verify(py: Python<'_>, seed: u64, alpha: f64) -> PyResult<String> {
    let config = VerifyConfig {
        seed,
        alpha,
        ..VerifyConfig::default()
    };
    let reports = py.detach(|| verify::run_all(&config)).map_err(to_py)?;
    serde_json::to_string_pretty(&reports).map_err(|e| PyValueError::new_err(e.to_string()))
}

#[pymodule]
fn germ_coupling(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("__version__", germ_core::VERSION)?;
    m.add_class::<PyRngStream>()?;
    m.add_class::<PyPath>()?;
    m.add_function(wrap_pyfunction!(sample_bm, m)?)?;
    m.add_function(wrap_pyfunction!(line_value, m)?)?;
    m.add_function(wrap_pyfunction!(load_csv, m)?)?;
    m.add_function(wrap_pyfunction!(save_csv, m)?)?;
    m.add_function(wrap_pyfunction!(last_visit, m)?)?;
    m.add_function(wrap_pyfunction!(h_theta, m)?)?;
    m.add_function(wrap_pyfunction!(germ_transform, m)?)?;
    m.add_function(wrap_pyfunction!(couple, m)?)?;
    m.add_function(wrap_pyfunction!(frag_time, m)?)?;
    m.add_function(wrap_pyfunction!(time_invert, m)?)?;
    m.add_function(wrap_pyfunction!(first_meeting, m)?)?;
    m.add_function(wrap_pyfunction!(last_meeting, m)?)?;
    m.add_function(wrap_pyfunction!(first_passage, m)?)?;
    m.add_function(wrap_pyfunction!(frag_process, m)?)?;
    m.add_function(wrap_pyfunction!(frag_process_dual, m)?)?;
    m.add_function(wrap_pyfunction!(first_passage_process, m)?)?;
    m.add_function(wrap_pyfunction!(sample_stable_half_passage, m)?)?;
    m.add_function(wrap_pyfunction!(std_normal_cdf, m)?)?;
    m.add_function(wrap_pyfunction!(std_normal_quantile, m)?)?;
    m.add_function(wrap_pyfunction!(frag_cdf, m)?)?;
    m.add_function(wrap_pyfunction!(levy_cdf, m)?)?;
    m.add_function(wrap_pyfunction!(branch_probability, m)?)?;
    m.add_function(wrap_pyfunction!(ks_threshold, m)?)?;
    m.add_function(wrap_pyfunction!(run_verify, m)?)?;
    Ok(())
}
