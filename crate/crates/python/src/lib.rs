//! Python bindings for the `polarcbo` crate.

use nalgebra::{DMatrix, DVector};
use polarcbo::diagnostics::{proximal, stationary_mean_oracle, GaussianTarget};
use polarcbo::harness::emit::{render, to_json};
use polarcbo::harness::{checks, preset, run_config, Format, RunConfig};
use polarcbo::{means, objectives, Ensemble, Kernel, Matrix};
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

fn py_err(e: polarcbo::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn ensemble(positions: Vec<Vec<f64>>) -> PyResult<Ensemble> {
    Ensemble::from_rows(&positions).map_err(py_err)
}

fn square(rows: Vec<Vec<f64>>) -> PyResult<DMatrix<f64>> {
    let n = rows.len();
    if rows.iter().any(|r| r.len() != n) {
        return Err(PyValueError::new_err("matrix must be square"));
    }
    Ok(DMatrix::from_fn(n, n, |r, c| rows[r][c]))
}

/// A benchmark objective from the built-in registry.
#[pyclass(name = "Objective", frozen)]
struct PyObjective {
    inner: objectives::Objective,
}

#[pymethods]
impl PyObjective {
    #[new]
    fn new(name: &str, dim: usize) -> PyResult<Self> {
        Ok(Self { inner: objectives::by_name(name, dim).map_err(py_err)? })
    }

    #[staticmethod]
    fn names() -> Vec<&'static str> {
        objectives::REGISTRY.to_vec()
    }

    #[getter]
    fn name(&self) -> String {
        self.inner.name().to_string()
    }

    #[getter]
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    #[getter]
    fn minimizers(&self) -> Vec<Vec<f64>> {
        self.inner.minimizers().to_vec()
    }

    fn __call__(&self, x: Vec<f64>) -> PyResult<f64> {
        self.inner.eval_checked(&x).map_err(py_err)
    }

    fn __repr__(&self) -> String {
        format!("Objective({:?}, dim={})", self.inner.name(), self.inner.dim())
    }
}

/// A localizing kernel `k(x, y)`.
#[pyclass(name = "Kernel", frozen)]
struct PyKernel {
    inner: Kernel,
}

#[pymethods]
impl PyKernel {
    /// `variant` is one of gaussian, laplace, bounded-confidence, constant.
    #[new]
    #[pyo3(signature = (variant, kappa = f64::INFINITY))]
    fn new(variant: &str, kappa: f64) -> PyResult<Self> {
        if !(kappa > 0.0) {
            return Err(PyValueError::new_err("kappa must be positive"));
        }
        let inner = match variant {
            "gaussian" => Kernel::gaussian(kappa),
            "laplace" => Kernel::laplace(kappa),
            "bounded-confidence" => Kernel::bounded_confidence(kappa),
            "constant" => Kernel::Constant,
            other => return Err(PyValueError::new_err(format!("unknown kernel {other}"))),
        };
        Ok(Self { inner })
    }

    #[getter]
    fn kappa(&self) -> f64 {
        self.inner.kappa()
    }

    fn log_eval(&self, x: Vec<f64>, y: Vec<f64>) -> PyResult<f64> {
        self.inner.log_eval(&x, &y).map_err(py_err)
    }

    fn __call__(&self, x: Vec<f64>, y: Vec<f64>) -> PyResult<f64> {
        Ok(self.log_eval(x, y)?.exp())
    }

    fn __repr__(&self) -> String {
        format!("Kernel({}, kappa={})", self.inner.name(), self.inner.kappa())
    }
}

/// Gibbs-weighted mean of all particles.
#[pyfunction]
fn standard_mean(positions: Vec<Vec<f64>>, objective: &PyObjective, beta: f64) -> PyResult<Vec<f64>> {
    Ok(means::standard_mean(&ensemble(positions)?, &objective.inner, beta))
}

/// Kernel-localized weighted mean at every particle.
#[pyfunction]
fn polarized_means(positions: Vec<Vec<f64>>, kernel: &PyKernel, objective: &PyObjective, beta: f64) -> PyResult<Vec<Vec<f64>>> {
    Ok(means::polarized_means(&ensemble(positions)?, &kernel.inner, &objective.inner, beta).to_rows())
}

/// Indices of the minimizers lying within `threshold` (infinity norm) of some mean.
#[pyfunction]
#[pyo3(signature = (means, minimizers, threshold = 0.25))]
fn detect_minima(means: Vec<Vec<f64>>, minimizers: Vec<Vec<f64>>, threshold: f64) -> PyResult<Vec<usize>> {
    let m = Matrix::from_rows(&means).map_err(py_err)?;
    polarcbo::harness::detect_minima(&m, &minimizers, threshold).map_err(py_err)
}

/// Proximal point `argmin_y |x-y|^2 / (2 kappa^2) + V(y)`.
#[pyfunction]
#[pyo3(signature = (objective, kappa, x, tol = 1e-10))]
fn prox(objective: &PyObjective, kappa: f64, x: Vec<f64>, tol: f64) -> PyResult<Vec<f64>> {
    proximal(&objective.inner, kappa, &x, tol).map_err(py_err)
}

/// Closed-form stationary polarized mean for a Gaussian target and Gaussian kernel.
#[pyfunction]
fn stationary_mean(mean: Vec<f64>, covariance: Vec<Vec<f64>>, kappa: f64, beta: f64, x: Vec<f64>) -> PyResult<Vec<f64>> {
    let target = GaussianTarget::with_kappa(DVector::from_vec(mean), square(covariance)?, kappa).map_err(py_err)?;
    Ok(stationary_mean_oracle(&target, beta, &x).map_err(py_err)?.as_slice().to_vec())
}

/// Run a seed sweep from a flat TOML config and return the report as JSON.
#[pyfunction]
fn run(config_toml: &str, py: Python<'_>) -> PyResult<String> {
    let config = RunConfig::from_toml_str(config_toml).map_err(py_err)?;
    let report = py.detach(|| run_config(&config)).map_err(py_err)?;
    to_json(&vec![report]).map_err(py_err)
}

/// Run a preset (or a single TOML config) and render the tables.
#[pyfunction]
#[pyo3(signature = (name, format = "markdown"))]
fn table(name: &str, format: &str, py: Python<'_>) -> PyResult<String> {
    let format = Format::parse(format).map_err(py_err)?;
    let configs = preset(name).map_err(py_err)?;
    let reports = py.detach(|| polarcbo::harness::run_table(&configs)).map_err(py_err)?;
    render(&reports, format).map_err(py_err)
}

/// Preset configurations as TOML documents.
#[pyfunction]
fn preset_configs(name: &str) -> PyResult<Vec<String>> {
    preset(name).map_err(py_err)?.iter().map(|c| c.to_toml_string().map_err(py_err)).collect()
}

/// Run one acceptance criterion; returns `(passed, line)`.
#[pyfunction]
fn check(id: u8, py: Python<'_>) -> PyResult<(bool, String)> {
    let outcome = py.detach(|| checks::run_check(id)).ok_or_else(|| PyValueError::new_err(format!("unknown check {id}")))?;
    Ok((outcome.passed, outcome.line()))
}

#[pymodule]
fn polarcbo_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyObjective>()?;
    m.add_class::<PyKernel>()?;
    m.add_function(wrap_pyfunction!(standard_mean, m)?)?;
    m.add_function(wrap_pyfunction!(polarized_means, m)?)?;
    m.add_function(wrap_pyfunction!(detect_minima, m)?)?;
    m.add_function(wrap_pyfunction!(prox, m)?)?;
    m.add_function(wrap_pyfunction!(stationary_mean, m)?)?;
    m.add_function(wrap_pyfunction!(run, m)?)?;
    m.add_function(wrap_pyfunction!(table, m)?)?;
    m.add_function(wrap_pyfunction!(preset_configs, m)?)?;
    m.add_function(wrap_pyfunction!(check, m)?)?;
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    Ok(())
}
