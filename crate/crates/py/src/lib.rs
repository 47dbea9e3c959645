//! Python bindings for the zeroledger engine.
//!
//! Domain and infeasibility errors surface as `ValueError`.

use std::collections::BTreeMap;

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

use zeroledger::density::{self, BoundParams, Slack, TBoundResult, TMethod};
use zeroledger::kernel::{self, KernelContext};
use zeroledger::ledger::{self, LedgerOptions};
use zeroledger::rbound::{self, HeadScenario, RBoundResult, RBranch};

fn err(e: zeroledger::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn slack_pairs(s: &[Slack]) -> Vec<(String, f64)> {
    s.iter().map(|s| (s.constraint.clone(), s.margin)).collect()
}

fn opts(eps_num: f64, grid_points: usize) -> LedgerOptions {
    LedgerOptions { eps_num, grid_points }
}

/// The normalized kernel at scale `x` with `lambda0` on the smallest zero.
#[pyclass(name = "Kernel", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyKernel {
    inner: KernelContext,
}

#[pymethods]
impl PyKernel {
    #[new]
    fn new(x: f64, lambda0: f64) -> PyResult<Self> {
        KernelContext::new(x, lambda0).map(|inner| Self { inner }).map_err(err)
    }

    #[getter]
    fn x(&self) -> f64 {
        self.inner.x
    }

    #[getter]
    fn lambda0(&self) -> f64 {
        self.inner.lambda0
    }

    /// `F_x(z)`.
    fn f(&self, z: f64) -> PyResult<f64> {
        kernel::eval_f(&self.inner, z).map_err(err)
    }

    fn psi(&self, lam: f64) -> f64 {
        self.inner.psi(lam)
    }

    fn xi(&self) -> f64 {
        self.inner.xi()
    }

    fn delta(&self, cap: f64) -> f64 {
        self.inner.delta(cap)
    }

    fn __repr__(&self) -> String {
        format!("Kernel(x={}, lambda0={})", self.inner.x, self.inner.lambda0)
    }
}

#[pyclass(name = "TBound", frozen, skip_from_py_object, get_all)]
#[derive(Clone)]
struct PyTBound {
    bound: f64,
    cap: f64,
    method: String,
    /// `(x, y, z)` for the density bound, `None` for the staircase.
    params: Option<(f64, f64, f64)>,
    slacks: Vec<(String, f64)>,
}

impl From<TBoundResult> for PyTBound {
    fn from(t: TBoundResult) -> Self {
        let method = match t.method {
            TMethod::Density => "density",
            TMethod::Staircase => "staircase",
            TMethod::Tabulated => "table",
        };
        Self {
            bound: t.bound,
            cap: t.cap,
            method: method.into(),
            params: t.density_params().map(|p| (p.x, p.y, p.z)),
            slacks: slack_pairs(&t.slacks),
        }
    }
}

#[pymethods]
impl PyTBound {
    fn __repr__(&self) -> String {
        format!(
            "TBound(bound={}, cap={}, method={:?})",
            self.bound, self.cap, self.method
        )
    }
}

#[pyclass(name = "RBound", frozen, skip_from_py_object, get_all)]
#[derive(Clone)]
struct PyRBound {
    bound: f64,
    branch: String,
    main_bound: f64,
    fallback_bound: Option<f64>,
    x: f64,
    n0: Option<u32>,
    slacks: Vec<(String, f64)>,
}

impl From<RBoundResult> for PyRBound {
    fn from(r: RBoundResult) -> Self {
        Self {
            bound: r.bound,
            branch: if r.branch == RBranch::Main {
                "main"
            } else {
                "count_fallback"
            }
            .into(),
            main_bound: r.main_bound,
            fallback_bound: r.fallback_bound,
            x: r.x_used,
            n0: r.n0,
            slacks: slack_pairs(&r.slacks),
        }
    }
}

#[pymethods]
impl PyRBound {
    fn __repr__(&self) -> String {
        format!("RBound(bound={}, branch={:?}, x={})", self.bound, self.branch, self.x)
    }
}

#[pyclass(name = "TableRow", frozen, skip_from_py_object, get_all)]
#[derive(Clone)]
struct PyTableRow {
    id: String,
    paper: f64,
    computed: Option<f64>,
    margin: Option<f64>,
    feasible: bool,
    passed: bool,
    note: Option<String>,
}

impl From<&ledger::TableRow> for PyTableRow {
    fn from(r: &ledger::TableRow) -> Self {
        Self {
            id: r.id.clone(),
            paper: r.paper,
            computed: r.computed,
            margin: r.margin,
            feasible: r.feasible,
            passed: r.pass,
            note: r.note.clone(),
        }
    }
}

#[pymethods]
impl PyTableRow {
    fn __repr__(&self) -> String {
        format!(
            "TableRow({:?}, paper={}, computed={:?}, pass={})",
            self.id, self.paper, self.computed, self.passed
        )
    }
}

#[pyclass(name = "CaseCertificate", frozen, skip_from_py_object, get_all)]
#[derive(Clone)]
struct PyCertificate {
    case_id: u8,
    subcase: String,
    bound: f64,
    paper: Option<f64>,
    passed: bool,
    components: BTreeMap<String, f64>,
    checks: BTreeMap<String, bool>,
    discrepancy: Option<String>,
}

impl From<&ledger::CaseCertificate> for PyCertificate {
    fn from(c: &ledger::CaseCertificate) -> Self {
        Self {
            case_id: c.case_id,
            subcase: c.subcase.clone(),
            bound: c.sum_bound,
            paper: c.paper_value,
            passed: c.pass,
            components: c.components.clone(),
            checks: c.checks.clone(),
            discrepancy: c.discrepancy.clone(),
        }
    }
}

#[pymethods]
impl PyCertificate {
    fn __repr__(&self) -> String {
        format!(
            "CaseCertificate(case={}, {:?}, bound={}, pass={})",
            self.case_id, self.subcase, self.bound, self.passed
        )
    }
}

#[pyclass(name = "Report", frozen, skip_from_py_object, get_all)]
#[derive(Clone)]
struct PyReport {
    delta: f64,
    c0: f64,
    tables: Vec<PyTableRow>,
    cases: Vec<PyCertificate>,
    c1: f64,
    overall_pass: bool,
    json: String,
}

#[pymethods]
impl PyReport {
    fn __repr__(&self) -> String {
        format!(
            "Report(delta={}, c1={}, overall_pass={})",
            self.delta, self.c1, self.overall_pass
        )
    }
}

#[pyclass(name = "DeltaSearch", frozen, skip_from_py_object, get_all)]
#[derive(Clone)]
struct PyDeltaSearch {
    outcome: String,
    frontier: Option<f64>,
    passes_below: Option<bool>,
    monotone: bool,
    /// `(delta, pass, worst margin)` per probe, in evaluation order.
    trace: Vec<(f64, bool, f64)>,
}

#[pymethods]
impl PyDeltaSearch {
    #[getter]
    fn degenerate(&self) -> bool {
        self.outcome != "bracketed"
    }

    fn __repr__(&self) -> String {
        format!("DeltaSearch(outcome={:?}, frontier={:?})", self.outcome, self.frontier)
    }
}

#[pyclass(name = "AdversaryOutcome", frozen, skip_from_py_object, get_all)]
#[derive(Clone)]
struct PyAdversary {
    case_id: u8,
    subcase: String,
    value: f64,
    certificate: f64,
    restarts: usize,
    sound: bool,
}

#[pyfunction]
fn g(u: f64) -> PyResult<f64> {
    kernel::eval_g(u).map_err(err)
}

#[pyfunction]
#[pyo3(name = "G")]
fn laplace_g(z: f64) -> PyResult<f64> {
    kernel::laplace_g(z).map_err(err)
}

#[pyfunction]
fn b0(u: f64, lam: f64) -> PyResult<f64> {
    density::b0(u, lam).map_err(err)
}

#[pyfunction]
#[pyo3(signature = (x, y, z, cap, restricted = false))]
fn b_bound(x: f64, y: f64, z: f64, cap: f64, restricted: bool) -> PyResult<f64> {
    let p = BoundParams::new(x, y, z, restricted).map_err(err)?;
    density::b_bound(&p, cap).map_err(err)
}

/// Density bound on `T(Lambda)`, optimized over the parameter triple unless one is given.
#[pyfunction]
#[pyo3(signature = (delta, cap, restricted = false, params = None))]
fn t_bound(delta: f64, cap: f64, restricted: bool, params: Option<(f64, f64, f64)>) -> PyResult<PyTBound> {
    let t = match params {
        Some((x, y, z)) => {
            let p = BoundParams::new(x, y, z, restricted).map_err(err)?;
            density::t_bound_density(delta, cap, &p)
        }
        None => density::optimize_t_density(delta, cap, restricted),
    };
    t.map(Into::into).map_err(err)
}

#[pyfunction]
fn t_bound_staircase(delta: f64, cap: f64, lambda0: f64) -> PyResult<PyTBound> {
    density::t_bound_staircase(delta, cap, lambda0)
        .map(Into::into)
        .map_err(err)
}

/// Head bound `R(Lambda)`, optimized over `x` (and `N0` when restricted and not fixed).
#[pyfunction]
#[pyo3(signature = (delta, cap, lambda1, lambda2, lambda_star, restricted = false, n0 = None))]
fn r_bound(
    delta: f64,
    cap: f64,
    lambda1: f64,
    lambda2: f64,
    lambda_star: f64,
    restricted: bool,
    n0: Option<u32>,
) -> PyResult<PyRBound> {
    let sc = if restricted {
        HeadScenario::restricted(cap, lambda1, lambda2, lambda_star, n0)
    } else {
        if n0.is_some() {
            return Err(PyValueError::new_err("n0 applies to the restricted bound only"));
        }
        HeadScenario::general(cap, lambda1, lambda2, lambda_star)
    }
    .map_err(err)?;
    rbound::optimize_r(delta, &sc).map(Into::into).map_err(err)
}

/// `(T, R, S)` for one class of zeros.
#[pyfunction]
fn split_s(lambdas: Vec<f64>, delta: f64, cap: f64) -> PyResult<(f64, f64, f64)> {
    let s = ledger::split_s(&lambdas, delta, cap).map_err(err)?;
    Ok((s.t, s.r, s.s))
}

#[pyfunction]
#[pyo3(signature = (delta = 0.291, grid_points = 201))]
fn verify_tables(py: Python<'_>, delta: f64, grid_points: usize) -> PyResult<Vec<PyTableRow>> {
    let rows = py
        .detach(|| ledger::verify_tables(delta, &opts(ledger::DEFAULT_EPS_NUM, grid_points)))
        .map_err(err)?;
    Ok(rows.iter().map(Into::into).collect())
}

#[pyfunction]
#[pyo3(signature = (delta = 0.291, c0 = 0.01, eps_num = 1e-9, grid_points = 201))]
fn verify_all(py: Python<'_>, delta: f64, c0: f64, eps_num: f64, grid_points: usize) -> PyResult<PyReport> {
    let r = py
        .detach(|| ledger::verify_all(delta, c0, &opts(eps_num, grid_points)))
        .map_err(err)?;
    Ok(PyReport {
        delta: r.delta,
        c0: r.c0,
        tables: r.tables.iter().map(Into::into).collect(),
        cases: r.cases.iter().map(Into::into).collect(),
        c1: r.c1,
        overall_pass: r.overall_pass,
        json: serde_json::to_string(&r).map_err(|e| PyValueError::new_err(e.to_string()))?,
    })
}

#[pyfunction]
#[pyo3(signature = (lo, hi, tol = 1e-3, c0 = 0.01))]
fn delta_search(py: Python<'_>, lo: f64, hi: f64, tol: f64, c0: f64) -> PyResult<PyDeltaSearch> {
    let s = py
        .detach(|| ledger::delta_search(lo, hi, tol, c0, &LedgerOptions::default()))
        .map_err(err)?;
    let outcome = match s.outcome {
        ledger::SearchOutcome::Bracketed => "bracketed",
        ledger::SearchOutcome::BothPass => "both_pass",
        ledger::SearchOutcome::BothFail => "both_fail",
        ledger::SearchOutcome::SingleProbe => "single_probe",
    };
    Ok(PyDeltaSearch {
        outcome: outcome.into(),
        frontier: s.frontier,
        passes_below: s.passes_below,
        monotone: s.monotone,
        trace: s.trace.iter().map(|p| (p.delta, p.pass, p.worst_margin)).collect(),
    })
}

#[pyfunction]
#[pyo3(signature = (case_id, budget, delta = 0.291, c0 = 0.01))]
fn adversary_audit(py: Python<'_>, case_id: u8, budget: usize, delta: f64, c0: f64) -> PyResult<Vec<PyAdversary>> {
    let out = py
        .detach(|| ledger::adversary_audit(case_id, delta, c0, budget, &LedgerOptions::default()))
        .map_err(err)?;
    Ok(out
        .into_iter()
        .map(|o| PyAdversary {
            case_id: o.case_id,
            subcase: o.subcase,
            value: o.value,
            certificate: o.certificate,
            restarts: o.restarts,
            sound: o.sound,
        })
        .collect())
}

#[pymodule(name = "zeroledger")]
fn zeroledger_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyKernel>()?;
    m.add_class::<PyTBound>()?;
    m.add_class::<PyRBound>()?;
    m.add_class::<PyTableRow>()?;
    m.add_class::<PyCertificate>()?;
    m.add_class::<PyReport>()?;
    m.add_class::<PyDeltaSearch>()?;
    m.add_class::<PyAdversary>()?;
    m.add_function(wrap_pyfunction!(g, m)?)?;
    m.add_function(wrap_pyfunction!(laplace_g, m)?)?;
    m.add_function(wrap_pyfunction!(b0, m)?)?;
    m.add_function(wrap_pyfunction!(b_bound, m)?)?;
    m.add_function(wrap_pyfunction!(t_bound, m)?)?;
    m.add_function(wrap_pyfunction!(t_bound_staircase, m)?)?;
    m.add_function(wrap_pyfunction!(r_bound, m)?)?;
    m.add_function(wrap_pyfunction!(split_s, m)?)?;
    m.add_function(wrap_pyfunction!(verify_tables, m)?)?;
    m.add_function(wrap_pyfunction!(verify_all, m)?)?;
    m.add_function(wrap_pyfunction!(delta_search, m)?)?;
    m.add_function(wrap_pyfunction!(adversary_audit, m)?)?;
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    Ok(())
}
