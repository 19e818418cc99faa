//! Python bindings: `import advecta`.

use advecta_core::analysis::{log_spaced as core_log_spaced, NodalClass, SweepRecord};
use advecta_core::{
    derivative_identity_residual as core_identity_residual, nodal_classify as core_nodal_classify,
    second_derivative_checks as core_second_derivative_checks, solve as core_solve,
    sweep_with_threads, transversal_roots as core_transversal_roots, CollocationGrid, Eigenpair as CoreEigenpair,
};
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::PyDict;

fn value_err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

/// Coefficient function on [-1, 1], built from a descriptor such as
/// `"poly:4"`, `"affine:2,1"`, `"cos:40,2,0.3333333333"`, `"shoulder"` or `"const:2"`.
#[pyclass(name = "Coefficient", module = "advecta", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyCoefficient {
    inner: advecta_core::Coefficient,
}

#[pymethods]
impl PyCoefficient {
    #[new]
    fn new(descriptor: &str) -> PyResult<Self> {
        Ok(Self {
            inner: descriptor.parse().map_err(value_err)?,
        })
    }

    #[staticmethod]
    fn poly_bump(n: u32) -> PyResult<Self> {
        Ok(Self {
            inner: advecta_core::Coefficient::poly_bump(n).map_err(value_err)?,
        })
    }

    #[staticmethod]
    fn affine(a: f64, b: f64) -> Self {
        Self {
            inner: advecta_core::Coefficient::affine(a, b),
        }
    }

    #[staticmethod]
    fn cosine_well(amplitude: f64, offset: f64, shift: f64) -> Self {
        Self {
            inner: advecta_core::Coefficient::cosine_well(amplitude, offset, shift),
        }
    }

    #[staticmethod]
    fn shoulder() -> Self {
        Self {
            inner: advecta_core::Coefficient::Shoulder,
        }
    }

    #[staticmethod]
    fn constant(v: f64) -> Self {
        Self {
            inner: advecta_core::Coefficient::constant(v),
        }
    }

    fn __call__(&self, x: f64) -> PyResult<f64> {
        self.inner.eval(x).map_err(value_err)
    }

    fn deriv(&self, x: f64) -> PyResult<f64> {
        self.inner.eval_deriv(x).map_err(value_err)
    }

    fn __str__(&self) -> String {
        self.inner.to_string()
    }

    fn __repr__(&self) -> String {
        format!("Coefficient('{}')", self.inner)
    }
}

#[pyclass(name = "ProblemSpec", module = "advecta", frozen)]
struct PyProblemSpec {
    inner: advecta_core::ProblemSpec,
}

#[pymethods]
impl PyProblemSpec {
    #[new]
    #[pyo3(signature = (m, c, s, n = 801))]
    fn new(m: &PyCoefficient, c: &PyCoefficient, s: f64, n: usize) -> PyResult<Self> {
        Ok(Self {
            inner: advecta_core::ProblemSpec::new(m.inner.clone(), c.inner.clone(), s, n).map_err(value_err)?,
        })
    }

    #[getter]
    fn s(&self) -> f64 {
        self.inner.s
    }

    #[getter]
    fn n(&self) -> usize {
        self.inner.n
    }

    #[getter]
    fn x0(&self) -> f64 {
        self.inner.x0()
    }

    #[getter]
    fn m(&self) -> PyCoefficient {
        PyCoefficient {
            inner: self.inner.m.clone(),
        }
    }

    #[getter]
    fn c(&self) -> PyCoefficient {
        PyCoefficient {
            inner: self.inner.c.clone(),
        }
    }

    /// Critical points of `m` in (-1, 1).
    fn critical_points(&self) -> Vec<f64> {
        self.inner.hm_report().critical_points.clone()
    }

    fn with_s(&self, s: f64) -> PyResult<Self> {
        Ok(Self {
            inner: self.inner.with_s(s).map_err(value_err)?,
        })
    }

    fn __repr__(&self) -> String {
        format!(
            "ProblemSpec(m='{}', c='{}', s={}, n={})",
            self.inner.m, self.inner.c, self.inner.s, self.inner.n
        )
    }
}

/// Principal eigenpair. Nodal vectors are ordered from x = 1 down to x = -1.
#[pyclass(name = "Eigenpair", module = "advecta", frozen)]
struct PyEigenpair {
    inner: CoreEigenpair,
}

#[pymethods]
impl PyEigenpair {
    /// The eigenvalue (`lambda` is reserved in Python).
    #[getter]
    fn lam(&self) -> f64 {
        self.inner.lambda
    }

    #[getter]
    fn phi(&self) -> Vec<f64> {
        self.inner.phi.clone()
    }

    #[getter]
    fn dphi(&self) -> Vec<f64> {
        self.inner.dphi.clone()
    }

    #[getter]
    fn kappa(&self) -> f64 {
        self.inner.kappa
    }

    #[getter]
    fn residual(&self) -> f64 {
        self.inner.residual
    }

    #[getter]
    fn iterations(&self) -> usize {
        self.inner.iterations
    }

    #[getter]
    fn status(&self) -> String {
        self.inner.status.to_string()
    }

    fn phi_err(&self) -> f64 {
        self.inner.phi_err()
    }

    fn dphi_norm(&self) -> f64 {
        self.inner.dphi_norm()
    }

    fn __repr__(&self) -> String {
        format!(
            "Eigenpair(lam={}, kappa={}, status='{}')",
            self.inner.lambda, self.inner.kappa, self.inner.status
        )
    }
}

fn record_dict<'py>(py: Python<'py>, r: &SweepRecord) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    d.set_item("s", r.s)?;
    d.set_item("lambda", r.lambda)?;
    d.set_item("gap", r.gap)?;
    d.set_item("phi_err", r.phi_err)?;
    d.set_item("dphi_norm", r.dphi_norm)?;
    d.set_item("kappa", r.kappa)?;
    d.set_item("status", r.status.to_string())?;
    Ok(d)
}

#[pyfunction]
fn solve(py: Python<'_>, spec: &PyProblemSpec) -> PyResult<PyEigenpair> {
    let spec = &spec.inner;
    let pair = py.detach(|| core_solve(spec)).map_err(value_err)?;
    Ok(PyEigenpair { inner: pair })
}

/// One record dict per s, in input order.
#[pyfunction]
#[pyo3(signature = (spec, s_values, threads = 1))]
fn sweep<'py>(
    py: Python<'py>,
    spec: &PyProblemSpec,
    s_values: Vec<f64>,
    threads: usize,
) -> PyResult<Vec<Bound<'py, PyDict>>> {
    let spec = &spec.inner;
    let records = py
        .detach(|| sweep_with_threads(spec, &s_values, threads))
        .map_err(value_err)?;
    records.iter().map(|r| record_dict(py, r)).collect()
}

#[pyfunction]
fn log_spaced(min: f64, max: f64, per_decade: usize) -> Vec<f64> {
    core_log_spaced(min, max, per_decade)
}

/// CGL nodes for order `n`, descending.
#[pyfunction]
fn nodes(n: usize) -> PyResult<Vec<f64>> {
    Ok(CollocationGrid::new(n).map_err(value_err)?.nodes().to_vec())
}

#[pyfunction]
fn transversal_roots(c: &PyCoefficient, lam: f64) -> PyResult<Vec<f64>> {
    core_transversal_roots(&c.inner, lam).map_err(value_err)
}

#[pyfunction]
fn derivative_identity_residual(spec: &PyProblemSpec, pair: &PyEigenpair, y0: f64) -> PyResult<f64> {
    core_identity_residual(&spec.inner, &pair.inner, y0).map_err(value_err)
}

/// `[(x_c, measured, predicted), ...]` at the critical points of `m`.
#[pyfunction]
fn second_derivative_checks(spec: &PyProblemSpec, pair: &PyEigenpair) -> PyResult<Vec<(f64, f64, f64)>> {
    Ok(core_second_derivative_checks(&spec.inner, &pair.inner)
        .map_err(value_err)?
        .into_iter()
        .map(|c| (c.x_c, c.measured, c.predicted))
        .collect())
}

#[pyfunction]
fn nodal_classify<'py>(py: Python<'py>, spec: &PyProblemSpec, pair: &PyEigenpair) -> PyResult<Bound<'py, PyDict>> {
    let r = core_nodal_classify(&spec.inner, &pair.inner).map_err(value_err)?;
    let class = match r.classification {
        NodalClass::Decreasing => "decreasing".to_string(),
        NodalClass::Increasing => "increasing".to_string(),
        NodalClass::SingleInteriorMax => "single_interior_max".to_string(),
        NodalClass::SingleInteriorMin => "single_interior_min".to_string(),
        NodalClass::Alternating(k) => format!("alternating({k})"),
        NodalClass::Flat => "flat".to_string(),
    };
    let critical: Vec<(f64, String)> = r
        .critical_points
        .iter()
        .map(|p| (p.x, format!("{:?}", p.kind).to_lowercase()))
        .collect();
    let d = PyDict::new(py);
    d.set_item("lambda", r.lambda)?;
    d.set_item("t_roots", r.t_roots)?;
    d.set_item("q_s", r.q_s)?;
    d.set_item("critical_points", critical)?;
    d.set_item("classification", class)?;
    d.set_item("consistent", r.consistent)?;
    d.set_item("diagnostics", r.diagnostics)?;
    Ok(d)
}

#[pymodule]
fn advecta(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyCoefficient>()?;
    m.add_class::<PyProblemSpec>()?;
    m.add_class::<PyEigenpair>()?;
    m.add_function(wrap_pyfunction!(solve, m)?)?;
    m.add_function(wrap_pyfunction!(sweep, m)?)?;
    m.add_function(wrap_pyfunction!(log_spaced, m)?)?;
    m.add_function(wrap_pyfunction!(nodes, m)?)?;
    m.add_function(wrap_pyfunction!(transversal_roots, m)?)?;
    m.add_function(wrap_pyfunction!(derivative_identity_residual, m)?)?;
    m.add_function(wrap_pyfunction!(second_derivative_checks, m)?)?;
    m.add_function(wrap_pyfunction!(nodal_classify, m)?)?;
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    Ok(())
}
