//! Python module `twinbeam`.

use nalgebra::Matrix4;
use pyo3::create_exception;
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::{PyDict, PyList};
use serde::Serialize;
use serde_json::Value;

use twinbeam::channels::duan_after_symmetric_loss;
use twinbeam::esd::{critical_transmission_with, nu_min_at};
use twinbeam::ingest::EstimateOptions;
use twinbeam::{
    attenuate, classify, classify_oracle, duan_sum, estimate_covariance, extract,
    gaussianity_check, partial_transpose, ppt_min_eigenvalue, synthesize_record,
    transmission_sweep, w_quantities, ChannelSpec, CovarianceMatrix, Error, LossTarget, Mode,
    OracleOptions, QuadratureRecord, TwinBeamVariances,
};

create_exception!(twinbeam, TwinbeamError, PyValueError, "Invalid input to a twinbeam operation.");
create_exception!(twinbeam, UnphysicalError, TwinbeamError, "State violates the uncertainty principle.");
create_exception!(twinbeam, TooFewSamplesError, TwinbeamError, "Not enough samples for the estimate.");

fn err(e: Error) -> PyErr {
    match e {
        Error::Unphysical { .. } => UnphysicalError::new_err(e.to_string()),
        Error::TooFewSamples { .. } => TooFewSamplesError::new_err(e.to_string()),
        _ => TwinbeamError::new_err(e.to_string()),
    }
}

fn json_to_py<'py>(py: Python<'py>, v: &Value) -> PyResult<Bound<'py, PyAny>> {
    Ok(match v {
        Value::Null => py.None().into_bound(py),
        Value::Bool(b) => b.into_pyobject(py)?.to_owned().into_any(),
        Value::Number(n) => match n.as_i64() {
            Some(i) => i.into_pyobject(py)?.into_any(),
            None => n.as_f64().unwrap_or(f64::NAN).into_pyobject(py)?.into_any(),
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

fn to_py<'py, T: Serialize>(py: Python<'py>, value: &T) -> PyResult<Bound<'py, PyAny>> {
    let v = serde_json::to_value(value).map_err(|e| TwinbeamError::new_err(e.to_string()))?;
    json_to_py(py, &v)
}

fn rows(m: &Matrix4<f64>) -> [[f64; 4]; 4] {
    std::array::from_fn(|i| std::array::from_fn(|j| m[(i, j)]))
}

fn loss_target(name: &str) -> PyResult<LossTarget> {
    match name {
        "one" | "1" => Ok(LossTarget::One),
        "two" | "2" => Ok(LossTarget::Two),
        "both" => Ok(LossTarget::Both),
        _ => Err(TwinbeamError::new_err(format!(
            "loss target must be 'one', 'two' or 'both', got {name:?}"
        ))),
    }
}

fn oracle_options(target: &str, grid_points: usize) -> PyResult<OracleOptions> {
    Ok(OracleOptions {
        grid_points,
        target: loss_target(target)?,
        ..OracleOptions::default()
    })
}

/// Variances of the EPR combinations `p-`, `p+`, `q+`, `q-` of an
/// exchange-symmetric state without amplitude-phase correlations.
#[pyclass(name = "TwinBeamVariances", module = "twinbeam", frozen, skip_from_py_object)]
#[derive(Clone, Copy)]
struct PyTwinBeam(TwinBeamVariances);

#[pymethods]
impl PyTwinBeam {
    #[new]
    fn new(p_minus: f64, p_plus: f64, q_plus: f64, q_minus: f64) -> PyResult<Self> {
        TwinBeamVariances::new(p_minus, p_plus, q_plus, q_minus)
            .map(PyTwinBeam)
            .map_err(err)
    }

    #[staticmethod]
    fn vacuum() -> Self {
        PyTwinBeam(TwinBeamVariances::vacuum())
    }

    #[staticmethod]
    fn two_mode_squeezed(r: f64) -> Self {
        PyTwinBeam(TwinBeamVariances::two_mode_squeezed(r))
    }

    #[getter]
    fn p_minus(&self) -> f64 {
        self.0.p_minus
    }

    #[getter]
    fn p_plus(&self) -> f64 {
        self.0.p_plus
    }

    #[getter]
    fn q_plus(&self) -> f64 {
        self.0.q_plus
    }

    #[getter]
    fn q_minus(&self) -> f64 {
        self.0.q_minus
    }

    /// Full covariance matrix; raises `UnphysicalError` for unphysical variances.
    fn covariance(&self) -> PyResult<PyCovariance> {
        twinbeam::embed(&self.0).map(PyCovariance).map_err(err)
    }

    fn w_quantities<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        to_py(py, &w_quantities(&self.0))
    }

    /// Duan sum after loss `t` on both beams.
    fn duan_after_symmetric_loss(&self, t: f64) -> PyResult<f64> {
        duan_after_symmetric_loss(&self.0, t).map_err(err)
    }

    /// Analytic classification, falling back to the transmission sweep when
    /// the analytic test does not decide.
    #[pyo3(signature = (grid_points = 512))]
    fn classify<'py>(&self, py: Python<'py>, grid_points: usize) -> PyResult<Bound<'py, PyAny>> {
        let opts = oracle_options("one", grid_points)?;
        let c = py.detach(|| classify(&self.0, &opts)).map_err(err)?;
        to_py(py, &c)
    }

    fn __repr__(&self) -> String {
        let v = self.0;
        format!(
            "TwinBeamVariances(p_minus={}, p_plus={}, q_plus={}, q_minus={})",
            v.p_minus, v.p_plus, v.q_plus, v.q_minus
        )
    }

    fn __eq__(&self, other: &Self) -> bool {
        self.0 == other.0
    }
}

/// Two-mode covariance matrix in `(p1, q1, p2, q2)` order, vacuum = identity.
#[pyclass(name = "CovarianceMatrix", module = "twinbeam", frozen, skip_from_py_object)]
#[derive(Clone, Copy)]
struct PyCovariance(CovarianceMatrix);

#[pymethods]
impl PyCovariance {
    /// From a 4x4 nested sequence. Must be symmetric and positive definite;
    /// physicality is checked separately.
    #[new]
    fn new(rows: [[f64; 4]; 4]) -> PyResult<Self> {
        CovarianceMatrix::from_rows(rows).map(PyCovariance).map_err(err)
    }

    #[staticmethod]
    fn vacuum() -> Self {
        PyCovariance(CovarianceMatrix::vacuum())
    }

    #[staticmethod]
    fn two_mode_squeezed(r: f64) -> Self {
        PyCovariance(CovarianceMatrix::two_mode_squeezed(r))
    }

    fn to_list(&self) -> [[f64; 4]; 4] {
        self.0.to_rows()
    }

    fn symplectic_eigenvalues(&self) -> PyResult<(f64, f64)> {
        self.0.symplectic_eigenvalues().map_err(err)
    }

    fn determinant(&self) -> f64 {
        self.0.determinant()
    }

    fn purity(&self) -> f64 {
        self.0.purity()
    }

    #[pyo3(signature = (tol = 1e-9))]
    fn is_physical(&self, tol: f64) -> bool {
        self.0.is_physical(tol)
    }

    /// Loss channel with transmissions `t1`, `t2` on the two beams.
    #[pyo3(signature = (t1, t2 = None))]
    fn attenuate(&self, t1: f64, t2: Option<f64>) -> PyResult<Self> {
        let spec = ChannelSpec::new(t1, t2.unwrap_or(t1)).map_err(err)?;
        attenuate(&self.0, &spec).map(PyCovariance).map_err(err)
    }

    #[pyo3(signature = (mode = 2))]
    fn partial_transpose(&self, mode: u8) -> PyResult<Self> {
        let mode = match mode {
            1 => Mode::One,
            2 => Mode::Two,
            _ => return Err(TwinbeamError::new_err("mode must be 1 or 2")),
        };
        Ok(PyCovariance(partial_transpose(&self.0, mode)))
    }

    fn duan_sum(&self) -> f64 {
        duan_sum(&self.0).value
    }

    /// Smallest symplectic eigenvalue of the partial transpose; below 1
    /// means entangled.
    fn ppt_nu_min(&self) -> PyResult<f64> {
        ppt_min_eigenvalue(&self.0).map(|r| r.nu_min).map_err(err)
    }

    fn ppt<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        to_py(py, &ppt_min_eigenvalue(&self.0).map_err(err)?)
    }

    fn twin_beam(&self) -> PyResult<PyTwinBeam> {
        extract(&self.0).map(PyTwinBeam).map_err(err)
    }

    #[pyo3(signature = (target = "one", t = 1.0))]
    fn nu_min_at(&self, target: &str, t: f64) -> PyResult<f64> {
        nu_min_at(&self.0, loss_target(target)?, t).map_err(err)
    }

    /// Brute-force classification by sweeping the transmission of `target`.
    #[pyo3(signature = (target = "one", grid_points = 512))]
    fn classify_oracle<'py>(
        &self,
        py: Python<'py>,
        target: &str,
        grid_points: usize,
    ) -> PyResult<Bound<'py, PyAny>> {
        let opts = oracle_options(target, grid_points)?;
        let c = py.detach(|| classify_oracle(&self.0, &opts)).map_err(err)?;
        to_py(py, &c)
    }

    /// Transmission at which entanglement dies, or `None` if it never does.
    #[pyo3(signature = (target = "one", grid_points = 512))]
    fn critical_transmission(&self, target: &str, grid_points: usize) -> PyResult<Option<f64>> {
        critical_transmission_with(&self.0, &oracle_options(target, grid_points)?).map_err(err)
    }

    /// `[(t, nu_min), ...]` from `t = 1` down to `1 / n_points`.
    #[pyo3(signature = (target = "one", n_points = 512))]
    fn sweep(&self, target: &str, n_points: usize) -> PyResult<Vec<(f64, f64)>> {
        let curve = transmission_sweep(&self.0, loss_target(target)?, n_points).map_err(err)?;
        Ok(curve.points.iter().map(|p| (p.t, p.nu_min)).collect())
    }

    /// `n` seeded Gaussian samples `[p1, q1, p2, q2]` with this covariance.
    #[pyo3(signature = (n, seed = 0))]
    fn synthesize(&self, py: Python<'_>, n: usize, seed: u64) -> PyResult<Vec<[f64; 4]>> {
        let record = py.detach(|| synthesize_record(&self.0, n, seed)).map_err(err)?;
        Ok(record.samples)
    }

    fn __repr__(&self) -> String {
        format!("CovarianceMatrix({:?})", self.0.to_rows())
    }

    fn __eq__(&self, other: &Self) -> bool {
        self.0 == other.0
    }
}

/// Sample covariance with bootstrap standard errors.
#[pyfunction]
#[pyo3(signature = (samples, seed = 0x5eed, resamples = 200, min_samples = 16))]
fn estimate<'py>(
    py: Python<'py>,
    samples: Vec<[f64; 4]>,
    seed: u64,
    resamples: usize,
    min_samples: usize,
) -> PyResult<Bound<'py, PyDict>> {
    let opts = EstimateOptions {
        seed,
        resamples,
        min_samples,
        ..EstimateOptions::default()
    };
    let est = py
        .detach(|| QuadratureRecord::new(samples).and_then(|r| estimate_covariance(&r, &opts)))
        .map_err(err)?;
    let out = PyDict::new(py);
    out.set_item("matrix", PyCovariance(est.matrix))?;
    out.set_item("std_errors", rows(&est.std_errors))?;
    out.set_item("nu_min", est.nu_min)?;
    out.set_item("nu_min_std_error", est.nu_min_std_error)?;
    out.set_item("physical", est.physical)?;
    out.set_item("samples", est.samples)?;
    Ok(out)
}

/// Skewness and excess kurtosis of every quadrature and EPR combination.
#[pyfunction]
#[pyo3(signature = (samples, sigmas = 5.0))]
fn gaussianity<'py>(py: Python<'py>, samples: Vec<[f64; 4]>, sigmas: f64) -> PyResult<Bound<'py, PyAny>> {
    let report = QuadratureRecord::new(samples)
        .and_then(|r| gaussianity_check(&r, sigmas))
        .map_err(err)?;
    to_py(py, &report)
}

#[pymodule]
#[pyo3(name = "twinbeam")]
fn twinbeam_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    let py = m.py();
    m.add_class::<PyTwinBeam>()?;
    m.add_class::<PyCovariance>()?;
    m.add_function(wrap_pyfunction!(estimate, m)?)?;
    m.add_function(wrap_pyfunction!(gaussianity, m)?)?;
    m.add("TwinbeamError", py.get_type::<TwinbeamError>())?;
    m.add("UnphysicalError", py.get_type::<UnphysicalError>())?;
    m.add("TooFewSamplesError", py.get_type::<TooFewSamplesError>())?;
    Ok(())
}
