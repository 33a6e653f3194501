//! Python bindings. Matrices cross the boundary as nested lists of floats;
//! reports come back as plain dicts.

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use serde::Serialize;

use suffreduce::estimators::{self, EstimatorSpec, Family, SolverOptions};
use suffreduce::io::DEFAULT_ASYM_TOL;
use suffreduce::reduce::{self, Input};
use suffreduce::verify::{self, Suite, SuiteConfig};
use suffreduce::{linkage, symmat, Error};

fn py_err(e: Error) -> PyErr {
    match e {
        Error::NoConvergence { .. } | Error::Infeasible(_) => PyRuntimeError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

fn to_py<'py, T: Serialize>(py: Python<'py>, value: &T) -> PyResult<Bound<'py, PyAny>> {
    let text = serde_json::to_string(value).map_err(|e| PyRuntimeError::new_err(e.to_string()))?;
    py.import("json")?.call_method1("loads", (text,))
}

/// Symmetric matrix in packed storage.
#[pyclass(name = "SymMatrix", module = "pysuffreduce", from_py_object)]
#[derive(Clone)]
struct PySymMatrix {
    inner: symmat::SymMatrix,
}

#[pymethods]
impl PySymMatrix {
    #[new]
    #[pyo3(signature = (rows, asym_tol = DEFAULT_ASYM_TOL))]
    fn new(rows: Vec<Vec<f64>>, asym_tol: f64) -> PyResult<Self> {
        let inner = symmat::SymMatrix::from_dense(&rows, asym_tol).map_err(py_err)?;
        Ok(PySymMatrix { inner })
    }

    #[getter]
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    fn to_list(&self) -> Vec<Vec<f64>> {
        self.inner.to_rows()
    }

    fn __getitem__(&self, idx: (usize, usize)) -> PyResult<f64> {
        let p = self.inner.dim();
        if idx.0 >= p || idx.1 >= p {
            return Err(pyo3::exceptions::PyIndexError::new_err("index out of range"));
        }
        Ok(self.inner.get(idx.0, idx.1))
    }

    /// `(eigenvalues descending, eigenvectors as rows)`.
    fn eigh(&self) -> PyResult<(Vec<f64>, Vec<Vec<f64>>)> {
        let e = self.inner.eigh().map_err(py_err)?;
        let vectors = (0..e.dim()).map(|k| e.vector(k).to_vec()).collect();
        Ok((e.values.clone(), vectors))
    }

    fn min_eigenvalue(&self) -> PyResult<f64> {
        self.inner.min_eigenvalue().map_err(py_err)
    }

    fn hadamard(&self, other: &PySymMatrix) -> PyResult<PySymMatrix> {
        let inner = self.inner.hadamard(&other.inner).map_err(py_err)?;
        Ok(PySymMatrix { inner })
    }

    fn __repr__(&self) -> String {
        format!("SymMatrix(dim={})", self.inner.dim())
    }
}

fn wrap(inner: symmat::SymMatrix) -> PySymMatrix {
    PySymMatrix { inner }
}

/// Uncentered covariance `VᵀV/n` of an `n × p` sample.
#[pyfunction]
fn covariance(rows: Vec<Vec<f64>>) -> PyResult<PySymMatrix> {
    symmat::uncentered_covariance(&rows).map(wrap).map_err(py_err)
}

/// Block labels of the single-linkage clustering of `|x|` cut at `lam`.
#[pyfunction]
fn slc_labels(x: &PySymMatrix, lam: f64) -> PyResult<Vec<usize>> {
    Ok(linkage::threshold_components(&x.inner, lam).map_err(py_err)?.labels().to_vec())
}

/// Merge history `[(a, b, height), ...]` of the Kruskal dendrogram on `|x|`.
#[pyfunction]
fn dendrogram(x: &PySymMatrix) -> Vec<(usize, usize, f64)> {
    linkage::mst_kruskal(&x.inner.abs())
        .merges
        .iter()
        .map(|m| (m.a, m.b, m.height))
        .collect()
}

#[pyfunction]
fn slt(x: &PySymMatrix, lam: f64) -> PyResult<PySymMatrix> {
    linkage::slt(&x.inner, lam).map(wrap).map_err(py_err)
}

#[pyfunction]
fn slt_plus(x: &PySymMatrix) -> PySymMatrix {
    wrap(linkage::slt_plus(&x.inner))
}

#[pyfunction]
fn hard_threshold(x: Vec<f64>, lam: Vec<f64>) -> PyResult<Vec<f64>> {
    reduce::hard_threshold(&x, &lam).map_err(py_err)
}

#[pyfunction]
fn positive_part(x: Vec<f64>) -> Vec<f64> {
    reduce::positive_part(&x)
}

#[pyfunction]
fn lasso(x: Vec<f64>, lam: Vec<f64>) -> PyResult<Vec<f64>> {
    estimators::lasso(&x, &lam).map_err(py_err)
}

#[pyfunction]
fn nnls(x: Vec<f64>) -> Vec<f64> {
    estimators::nnls(&x)
}

fn matrix_spec(estimator: &str, lam: f64, k: usize, eps: f64, tol: f64, max_iter: usize) -> PyResult<EstimatorSpec> {
    let family = Family::from_name(estimator)
        .filter(|f| f.is_matrix())
        .ok_or_else(|| PyValueError::new_err(format!("unknown matrix estimator {estimator:?}")))?;
    let spec = match family {
        Family::GraphicalLasso => EstimatorSpec::glasso(lam),
        Family::FantopeSpca => EstimatorSpec::fantope(lam, k),
        Family::SparseCovariance => EstimatorSpec::sparse_cov(lam, eps),
        Family::PositiveInvCov => EstimatorSpec::positive_invcov(),
        Family::IsingPmle => EstimatorSpec::ising(lam),
        Family::Lasso | Family::Nnls => unreachable!(),
    };
    let options = SolverOptions {
        tol,
        max_iter,
        ..SolverOptions::default()
    };
    let spec = spec.with_options(options);
    spec.validate().map_err(py_err)?;
    Ok(spec)
}

/// Solves a matrix estimator and returns `(theta, report)`.
///
/// `estimator` is one of glasso, fps, sparsecov, posinvcov, ising. With
/// `decompose` the problem is split over the single-linkage blocks first.
#[pyfunction]
#[pyo3(signature = (x, estimator, lam = 0.0, k = 1, eps = 0.01, decompose = false, tol = 1e-9, max_iter = 50_000))]
#[allow(clippy::too_many_arguments)]
fn solve<'py>(
    py: Python<'py>,
    x: &PySymMatrix,
    estimator: &str,
    lam: f64,
    k: usize,
    eps: f64,
    decompose: bool,
    tol: f64,
    max_iter: usize,
) -> PyResult<(PySymMatrix, Bound<'py, PyAny>)> {
    let spec = matrix_spec(estimator, lam, k, eps, tol, max_iter)?;
    let report = py
        .detach(|| {
            if decompose {
                estimators::solve_decomposed(&spec, &x.inner)
            } else {
                estimators::solve(&spec, &Input::Matrix(x.inner.clone()))
            }
        })
        .map_err(py_err)?;
    let theta = report.theta_matrix().cloned().expect("matrix estimator");
    Ok((wrap(theta), to_py(py, &report)?))
}

/// Solves on `x` and on its reduction and compares the two.
#[pyfunction]
#[pyo3(signature = (x, estimator, lam = 0.0, k = 1, eps = 0.01, tol = 1e-5))]
fn check_sufficiency<'py>(
    py: Python<'py>,
    x: &PySymMatrix,
    estimator: &str,
    lam: f64,
    k: usize,
    eps: f64,
    tol: f64,
) -> PyResult<Bound<'py, PyAny>> {
    let spec = matrix_spec(estimator, lam, k, eps, 1e-9, 50_000)?;
    let report = py
        .detach(|| verify::check_sufficiency(&spec, &Input::Matrix(x.inner.clone()), tol))
        .map_err(py_err)?;
    to_py(py, &report)
}

/// Runs the randomized verification suites and returns the summary dict.
#[pyfunction]
#[pyo3(signature = (seed = 0, sizes = vec![5, 10], suite = "all"))]
fn run_verify<'py>(py: Python<'py>, seed: u64, sizes: Vec<usize>, suite: &str) -> PyResult<Bound<'py, PyAny>> {
    let suites = Suite::from_name(suite).ok_or_else(|| PyValueError::new_err(format!("unknown suite {suite:?}")))?;
    let families = vec![
        Family::Lasso,
        Family::Nnls,
        Family::GraphicalLasso,
        Family::FantopeSpca,
        Family::SparseCovariance,
        Family::PositiveInvCov,
        Family::IsingPmle,
    ];
    let mut cfg = SuiteConfig::new(seed, sizes, families);
    cfg.suites = suites;
    let summary = py.detach(|| verify::run_suites(&cfg));
    to_py(py, &summary)
}

#[pymodule]
fn pysuffreduce(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PySymMatrix>()?;
    m.add_function(wrap_pyfunction!(covariance, m)?)?;
    m.add_function(wrap_pyfunction!(slc_labels, m)?)?;
    m.add_function(wrap_pyfunction!(dendrogram, m)?)?;
    m.add_function(wrap_pyfunction!(slt, m)?)?;
    m.add_function(wrap_pyfunction!(slt_plus, m)?)?;
    m.add_function(wrap_pyfunction!(hard_threshold, m)?)?;
    m.add_function(wrap_pyfunction!(positive_part, m)?)?;
    m.add_function(wrap_pyfunction!(lasso, m)?)?;
    m.add_function(wrap_pyfunction!(nnls, m)?)?;
    m.add_function(wrap_pyfunction!(solve, m)?)?;
    m.add_function(wrap_pyfunction!(check_sufficiency, m)?)?;
    m.add_function(wrap_pyfunction!(run_verify, m)?)?;
    Ok(())
}
