//! Python bindings: `import sbsa_py`.
//!
//! Signals cross the boundary as a list of samples plus a step `dt` (and an
//! optional start time `t0`). Structured results come back as dicts.

use pyo3::exceptions::{PyArithmeticError, PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::{PyDict, PyList};
use serde::Serialize;
use serde_json::Value;

use sbsa::pipeline::{analyze_recording, BeatConfig};
use sbsa::stats::{linear_regression_xy, wilcoxon_signed_rank_with, WilcoxonMethod};
use sbsa::transform::centered_norming;
use sbsa::{
    ChiSelectionConfig, ErrorKind, Grid, SbsaError, SegmentationConfig, Signal, SpectralDecomposition,
};

fn py_err(e: SbsaError) -> PyErr {
    match e.kind() {
        ErrorKind::Numeric => PyArithmeticError::new_err(e.to_string()),
        ErrorKind::InsufficientData => PyRuntimeError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

fn signal(samples: Vec<f64>, dt: f64, t0: f64) -> PyResult<Signal> {
    Signal::new(samples, dt, t0).map_err(py_err)
}

fn json_to_py<'py>(py: Python<'py>, v: &Value) -> PyResult<Bound<'py, PyAny>> {
    Ok(match v {
        Value::Null => py.None().into_bound(py),
        Value::Bool(b) => b.into_pyobject(py)?.to_owned().into_any(),
        Value::Number(n) => match (n.as_i64(), n.as_f64()) {
            (Some(i), _) => i.into_pyobject(py)?.into_any(),
            (None, Some(f)) => f.into_pyobject(py)?.into_any(),
            _ => py.None().into_bound(py),
        },
        Value::String(s) => s.into_pyobject(py)?.into_any(),
        Value::Array(items) => {
            let list = PyList::empty(py);
            for item in items {
                list.append(json_to_py(py, item)?)?;
            }
            list.into_any()
        }
        Value::Object(map) => {
            let dict = PyDict::new(py);
            for (k, item) in map {
                dict.set_item(k, json_to_py(py, item)?)?;
            }
            dict.into_any()
        }
    })
}

fn to_py<'py>(py: Python<'py>, value: &impl Serialize) -> PyResult<Bound<'py, PyAny>> {
    let v = serde_json::to_value(value).map_err(|e| PyRuntimeError::new_err(e.to_string()))?;
    json_to_py(py, &v)
}

/// Bound states of `−d²/dt² − χy`.
#[pyclass(name = "Decomposition", module = "sbsa_py", frozen)]
struct PyDecomposition {
    inner: SpectralDecomposition,
}

#[pymethods]
impl PyDecomposition {
    #[getter]
    fn chi(&self) -> f64 {
        self.inner.chi()
    }

    /// κ₁ ≥ κ₂ ≥ … > 0.
    #[getter]
    fn kappas(&self) -> Vec<f64> {
        self.inner.kappas().to_vec()
    }

    /// λₙ = −κₙ².
    #[getter]
    fn eigenvalues(&self) -> Vec<f64> {
        self.inner.eigenvalues()
    }

    #[getter]
    fn eigenfunctions(&self) -> Vec<Vec<f64>> {
        self.inner.eigenfunctions().to_vec()
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    /// `(4/χ) Σ κₙ ψₙ²` on the signal grid.
    fn reconstruct(&self) -> Vec<f64> {
        sbsa::reconstruct(&self.inner).samples().to_vec()
    }

    /// `(systolic, diastolic)`: the `n_s` largest-κ solitons and the rest.
    fn split(&self, n_s: usize) -> PyResult<(Vec<f64>, Vec<f64>)> {
        let s = sbsa::split_phases(&self.inner, n_s).map_err(py_err)?;
        Ok((s.systolic.samples().to_vec(), s.diastolic.samples().to_vec()))
    }

    /// Σ_{λ ≤ lambda_cut} |λ|^gamma.
    #[pyo3(signature = (gamma, lambda_cut = 0.0))]
    fn riesz_mean(&self, gamma: f64, lambda_cut: f64) -> f64 {
        sbsa::riesz_mean(&self.inner, gamma, lambda_cut)
    }

    fn __repr__(&self) -> String {
        format!("Decomposition(chi={}, kappas={:?})", self.inner.chi(), self.inner.kappas())
    }
}

/// Decompose a signal at a fixed χ.
#[pyfunction]
#[pyo3(signature = (samples, dt, chi, t0 = 0.0))]
fn decompose(samples: Vec<f64>, dt: f64, chi: f64, t0: f64) -> PyResult<PyDecomposition> {
    let y = signal(samples, dt, t0)?;
    Ok(PyDecomposition {
        inner: sbsa::decompose(&y, chi).map_err(py_err)?,
    })
}

fn chi_config(target_n: Option<usize>, mse_tol: Option<f64>) -> PyResult<ChiSelectionConfig> {
    match (target_n, mse_tol) {
        (Some(_), Some(_)) => Err(PyValueError::new_err("give target_n or mse_tol, not both")),
        (Some(n), None) => Ok(ChiSelectionConfig::fixed_count(n)),
        (None, Some(t)) => Ok(ChiSelectionConfig::error_target(t)),
        (None, None) => Ok(ChiSelectionConfig::default()),
    }
}

/// Choose χ and decompose there. Returns `(decomposition, info)` where `info`
/// holds `chi_hat`, `relative_mse`, `converged` and `iterations`.
#[pyfunction]
#[pyo3(signature = (samples, dt, target_n = None, mse_tol = None, t0 = 0.0))]
fn select_chi<'py>(
    py: Python<'py>,
    samples: Vec<f64>,
    dt: f64,
    target_n: Option<usize>,
    mse_tol: Option<f64>,
    t0: f64,
) -> PyResult<(PyDecomposition, Bound<'py, PyDict>)> {
    let y = signal(samples, dt, t0)?;
    let r = sbsa::select_chi(&y, &chi_config(target_n, mse_tol)?).map_err(py_err)?;
    let info = PyDict::new(py);
    info.set_item("chi_hat", r.chi_hat)?;
    info.set_item("relative_mse", r.relative_mse)?;
    info.set_item("converged", r.converged)?;
    info.set_item("iterations", r.iterations)?;
    Ok((PyDecomposition { inner: r.decomposition }, info))
}

/// Reconstruction of the signal at χ (fixed) or at a selected χ.
#[pyfunction]
#[pyo3(signature = (samples, dt, chi = None, target_n = None, mse_tol = None))]
fn reconstruct(
    samples: Vec<f64>,
    dt: f64,
    chi: Option<f64>,
    target_n: Option<usize>,
    mse_tol: Option<f64>,
) -> PyResult<Vec<f64>> {
    let y = signal(samples, dt, 0.0)?;
    let d = match chi {
        Some(c) => sbsa::decompose(&y, c).map_err(py_err)?,
        None => {
            sbsa::select_chi(&y, &chi_config(target_n, mse_tol)?)
                .map_err(py_err)?
                .decomposition
        }
    };
    Ok(sbsa::reconstruct(&d).samples().to_vec())
}

/// INV₁/INV₂ (global, systolic, diastolic), the direct integrals and residuals.
#[pyfunction]
#[pyo3(signature = (samples, dt, chi, n_s = 3))]
fn invariants<'py>(
    py: Python<'py>,
    samples: Vec<f64>,
    dt: f64,
    chi: f64,
    n_s: usize,
) -> PyResult<Bound<'py, PyAny>> {
    let y = signal(samples, dt, 0.0)?;
    let d = sbsa::decompose(&y, chi).map_err(py_err)?;
    let inv = sbsa::invariant_set(&d, &y, n_s.min(d.len())).map_err(py_err)?;
    to_py(py, &inv)
}

/// Exact multi-soliton well `(times, values)`. `norming=None` centers every
/// soliton at t = 0.
#[pyfunction]
#[pyo3(signature = (kappas, norming = None, t_min = -15.0, t_max = 15.0, dt = 0.01))]
fn synthesize_reflectionless(
    kappas: Vec<f64>,
    norming: Option<Vec<f64>>,
    t_min: f64,
    t_max: f64,
    dt: f64,
) -> PyResult<(Vec<f64>, Vec<f64>)> {
    let c = norming.unwrap_or_else(|| centered_norming(&kappas));
    let v = sbsa::synthesize_reflectionless(&kappas, &c, Grid::on_interval(t_min, t_max, dt))
        .map_err(py_err)?;
    Ok((v.times().collect(), v.samples().to_vec()))
}

/// Beat-by-beat indices of a pressure recording, one dict per beat.
#[pyfunction]
#[pyo3(signature = (samples, dt, feet = None, target_n = None, mse_tol = None, n_s = 3))]
fn pipeline<'py>(
    py: Python<'py>,
    samples: Vec<f64>,
    dt: f64,
    feet: Option<Vec<usize>>,
    target_n: Option<usize>,
    mse_tol: Option<f64>,
    n_s: usize,
) -> PyResult<Bound<'py, PyAny>> {
    let y = signal(samples, dt, 0.0)?;
    let seg = SegmentationConfig {
        annotations: feet,
        ..SegmentationConfig::default()
    };
    let windows = sbsa::segment_beats(&y, &seg).map_err(py_err)?;
    let cfg = BeatConfig {
        chi: chi_config(target_n, mse_tol)?,
        n_s,
    };
    let beats = py.detach(|| analyze_recording(&y, &windows, &cfg)).map_err(py_err)?;
    let records: Vec<_> = beats.into_iter().map(|b| b.record).collect();
    to_py(py, &records)
}

/// Least-squares line `y = slope·x + intercept` with R² and the slope's SE.
#[pyfunction]
fn linear_regression<'py>(py: Python<'py>, x: Vec<f64>, y: Vec<f64>) -> PyResult<Bound<'py, PyAny>> {
    to_py(py, &linear_regression_xy(&x, &y).map_err(py_err)?)
}

/// Wilcoxon signed-rank test on paired samples. `method` is "auto", "exact"
/// or "normal".
#[pyfunction]
#[pyo3(signature = (before, after, method = "auto"))]
fn wilcoxon<'py>(
    py: Python<'py>,
    before: Vec<f64>,
    after: Vec<f64>,
    method: &str,
) -> PyResult<Bound<'py, PyAny>> {
    let m = match method {
        "auto" => WilcoxonMethod::Auto,
        "exact" => WilcoxonMethod::Exact,
        "normal" => WilcoxonMethod::Normal,
        other => return Err(PyValueError::new_err(format!("unknown method {other:?}"))),
    };
    to_py(py, &wilcoxon_signed_rank_with(&before, &after, m).map_err(py_err)?)
}

/// `{"mean", "sem", "n"}`.
#[pyfunction]
fn summarize<'py>(py: Python<'py>, values: Vec<f64>) -> PyResult<Bound<'py, PyAny>> {
    to_py(py, &sbsa::summarize(&values).map_err(py_err)?)
}

#[pyfunction]
fn significance_stars(p: f64) -> &'static str {
    sbsa::significance_stars(p)
}

#[pymodule]
fn sbsa_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyDecomposition>()?;
    m.add_function(wrap_pyfunction!(decompose, m)?)?;
    m.add_function(wrap_pyfunction!(select_chi, m)?)?;
    m.add_function(wrap_pyfunction!(reconstruct, m)?)?;
    m.add_function(wrap_pyfunction!(invariants, m)?)?;
    m.add_function(wrap_pyfunction!(synthesize_reflectionless, m)?)?;
    m.add_function(wrap_pyfunction!(pipeline, m)?)?;
    m.add_function(wrap_pyfunction!(linear_regression, m)?)?;
    m.add_function(wrap_pyfunction!(wilcoxon, m)?)?;
    m.add_function(wrap_pyfunction!(summarize, m)?)?;
    m.add_function(wrap_pyfunction!(significance_stars, m)?)?;
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    Ok(())
}
