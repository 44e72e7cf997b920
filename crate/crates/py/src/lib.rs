//! Python bindings. Matrices cross the boundary as `list[list[complex]]`
//! (anything indexable whose entries convert to `complex`, numpy included);
//! reports come back as plain dicts.

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyAny;

use qmetric::channels::{self, KrausChannel};
use qmetric::harness::{self, TrialConfig};
use qmetric::metrics::{CptniMetric, CptpMetricSpec, DensityLikeOperator, PetzMetric, TraceMode};
use qmetric::{means, CMat, Complex64, Error, MonotoneFunctionSpec};

fn err(e: Error) -> PyErr {
    match e {
        Error::NonConvergence(_) => PyRuntimeError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

fn to_cmat(rows: Vec<Vec<Complex64>>) -> PyResult<CMat> {
    let n = rows.len();
    let m = rows.first().map_or(0, Vec::len);
    if n == 0 || m == 0 || rows.iter().any(|r| r.len() != m) {
        return Err(PyValueError::new_err("expected a non-empty rectangular matrix"));
    }
    Ok(CMat::from_fn(n, m, |i, j| rows[i][j]))
}

fn from_cmat(m: &CMat) -> Vec<Vec<Complex64>> {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect())
        .collect()
}

fn spec(name: &str) -> PyResult<MonotoneFunctionSpec> {
    name.parse().map_err(err)
}

fn trace_mode(s: &str) -> PyResult<TraceMode> {
    s.parse().map_err(err)
}

fn density(rho: Vec<Vec<Complex64>>, mode: &str) -> PyResult<DensityLikeOperator> {
    DensityLikeOperator::new(&to_cmat(rho)?, trace_mode(mode)?).map_err(err)
}

fn to_py<'py>(py: Python<'py>, v: &impl serde::Serialize) -> PyResult<Bound<'py, PyAny>> {
    let text = serde_json::to_string(v).map_err(|e| PyRuntimeError::new_err(e.to_string()))?;
    py.import("json")?.call_method1("loads", (text,))
}

/// Operator monotone function from the catalog, optionally transformed
/// (`"sld"`, `"wy"`, `"kmb.perp"`, ...).
#[pyclass(name = "MonotoneFunction", frozen)]
struct PyMonotoneFunction(MonotoneFunctionSpec);

#[pymethods]
impl PyMonotoneFunction {
    #[new]
    fn new(name: &str) -> PyResult<Self> {
        spec(name).map(Self)
    }

    #[staticmethod]
    fn catalog() -> Vec<String> {
        MonotoneFunctionSpec::monotone_catalog()
            .iter()
            .map(|f| f.name())
            .collect()
    }

    #[getter]
    fn name(&self) -> String {
        self.0.name()
    }

    fn __call__(&self, x: f64) -> f64 {
        self.0.eval(x)
    }

    fn f_at_0(&self) -> f64 {
        self.0.f_at_0()
    }

    fn perp(&self) -> Self {
        Self(self.0.perp())
    }

    fn prime(&self) -> Self {
        Self(self.0.prime())
    }

    fn __repr__(&self) -> String {
        format!("MonotoneFunction({:?})", self.0.name())
    }
}

/// Linear map in Kraus form.
#[pyclass(name = "Channel", frozen)]
struct PyChannel(KrausChannel);

#[pymethods]
impl PyChannel {
    #[new]
    fn new(in_dim: usize, out_dim: usize, kraus: Vec<Vec<Vec<Complex64>>>) -> PyResult<Self> {
        let ops = kraus.into_iter().map(to_cmat).collect::<PyResult<Vec<_>>>()?;
        KrausChannel::new(in_dim, out_dim, ops).map(Self).map_err(err)
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        let v: serde_json::Value = serde_json::from_str(text).map_err(|e| PyValueError::new_err(e.to_string()))?;
        qmetric::io::channel_from_value(&v).map(Self).map_err(err)
    }

    fn to_json(&self) -> String {
        qmetric::io::channel_value(&self.0).to_string()
    }

    #[staticmethod]
    fn identity(n: usize) -> Self {
        Self(channels::identity_channel(n))
    }

    #[staticmethod]
    fn transpose(n: usize) -> Self {
        Self(channels::transpose_map(n))
    }

    #[staticmethod]
    #[pyo3(signature = (n, m, k=1, slack=0.8, seed=0))]
    fn random_cptni(n: usize, m: usize, k: usize, slack: f64, seed: u64) -> Self {
        Self(channels::random_cptni(n, m, k, slack, seed))
    }

    #[getter]
    fn in_dim(&self) -> usize {
        self.0.in_dim()
    }

    #[getter]
    fn out_dim(&self) -> usize {
        self.0.out_dim()
    }

    fn classification(&self) -> String {
        self.0.classification().to_string()
    }

    fn completeness_defect(&self) -> f64 {
        self.0.completeness_defect()
    }

    fn choi_min_eigenvalue(&self) -> f64 {
        self.0.choi_min_eigenvalue()
    }

    fn apply(&self, x: Vec<Vec<Complex64>>) -> PyResult<Vec<Vec<Complex64>>> {
        self.0.apply(&to_cmat(x)?).map(|y| from_cmat(&y)).map_err(err)
    }

    fn adjoint_apply(&self, y: Vec<Vec<Complex64>>) -> PyResult<Vec<Vec<Complex64>>> {
        self.0.adjoint_apply(&to_cmat(y)?).map(|x| from_cmat(&x)).map_err(err)
    }

    fn then(&self, after: &PyChannel) -> PyResult<Self> {
        self.0.then(&after.0).map(Self).map_err(err)
    }

    /// Adds `σ (Tr ρ − Tr T(ρ))` to make the map trace preserving.
    fn complete_to_cptp(&self, sigma: Vec<Vec<Complex64>>) -> PyResult<Self> {
        channels::complete_to_cptp(&self.0, &to_cmat(sigma)?)
            .map(Self)
            .map_err(err)
    }

    fn __repr__(&self) -> String {
        format!(
            "Channel(in_dim={}, out_dim={}, {})",
            self.0.in_dim(),
            self.0.out_dim(),
            self.classification()
        )
    }
}

/// `K_ρ(X, Y)`. `metric` is `"cptni"`, `"petz"` (uses `c`) or `"kumagai"`
/// (uses `b`); `y` defaults to `x`.
#[pyfunction]
#[pyo3(signature = (rho, x, y=None, f="sld", metric="cptni", b=1.0, c=0.0, trace_mode="bounded"))]
#[allow(clippy::too_many_arguments)]
fn eval(
    rho: Vec<Vec<Complex64>>,
    x: Vec<Vec<Complex64>>,
    y: Option<Vec<Vec<Complex64>>>,
    f: &str,
    metric: &str,
    b: f64,
    c: f64,
    trace_mode: &str,
) -> PyResult<Complex64> {
    let rho = density(rho, trace_mode)?;
    let x = to_cmat(x)?;
    let y = match y {
        Some(y) => to_cmat(y)?,
        None => x.clone(),
    };
    let f = spec(f)?;
    match metric {
        "cptni" => CptniMetric::new(f).eval(&rho, &x, &y),
        "petz" => PetzMetric::new(f, c).and_then(|m| m.eval(&rho, &x, &y)),
        "kumagai" => CptpMetricSpec::constant(f, b).eval(&rho, &x, &y),
        other => return Err(PyValueError::new_err(format!("unknown metric {other:?}"))),
    }
    .map_err(err)
}

/// Kernel, superoperator and mean-form values of `K_ρ(X, X)` and their
/// largest relative deviation.
#[pyfunction]
#[pyo3(signature = (rho, x, f="sld", trace_mode="bounded"))]
fn cross_check<'py>(
    py: Python<'py>,
    rho: Vec<Vec<Complex64>>,
    x: Vec<Vec<Complex64>>,
    f: &str,
    trace_mode: &str,
) -> PyResult<Bound<'py, PyAny>> {
    let cmp = CptniMetric::new(spec(f)?)
        .cross_check(&density(rho, trace_mode)?, &to_cmat(x)?)
        .map_err(err)?;
    to_py(py, &cmp)
}

/// Kubo–Ando mean `A σ_f B` of positive semidefinite operands.
#[pyfunction]
#[pyo3(signature = (a, b, f="geo"))]
fn mean(a: Vec<Vec<Complex64>>, b: Vec<Vec<Complex64>>, f: &str) -> PyResult<Vec<Vec<Complex64>>> {
    means::mean(&to_cmat(a)?, &to_cmat(b)?, &spec(f)?)
        .map(|m| from_cmat(&m))
        .map_err(err)
}

/// Classification report for a channel, as `validate-channel` prints it.
#[pyfunction]
fn validate_channel<'py>(py: Python<'py>, channel: &PyChannel) -> PyResult<Bound<'py, PyAny>> {
    let ch = &channel.0;
    let report = serde_json::json!({
        "classification": channel.classification(),
        "in_dim": ch.in_dim(),
        "out_dim": ch.out_dim(),
        "completeness_defect": ch.completeness_defect(),
        "defect_min_eigenvalue": ch.defect_min_eigenvalue().ok(),
        "choi_min_eigenvalue": ch.choi_min_eigenvalue(),
    });
    to_py(py, &report)
}

/// Runs verification suites (`"all"` or names from `SUITES`) and returns
/// `{"passed", "report_hash", "reports"}`.
#[pyfunction]
#[pyo3(signature = (suites="all", trials=200, seed=42, dims=None, f_names=None, tol=1e-8, trace_mode="bounded", b=1.0))]
#[allow(clippy::too_many_arguments)]
fn verify<'py>(
    py: Python<'py>,
    suites: &str,
    trials: usize,
    seed: u64,
    dims: Option<&str>,
    f_names: Option<Vec<String>>,
    tol: f64,
    trace_mode: &str,
    b: f64,
) -> PyResult<Bound<'py, PyAny>> {
    let mut cfg = TrialConfig {
        trials,
        seed,
        tol,
        trace_mode: self::trace_mode(trace_mode)?,
        demo_b: b,
        ..TrialConfig::default()
    };
    if let Some(d) = dims {
        (cfg.dim_min, cfg.dim_max) = qmetric::io::parse_dims(d).map_err(err)?;
    }
    if let Some(names) = f_names {
        cfg.f_names = names.iter().map(|n| spec(n)).collect::<PyResult<_>>()?;
    }
    cfg.validate().map_err(err)?;
    let names: Vec<&str> = if suites == "all" {
        harness::SUITE_NAMES.to_vec()
    } else {
        suites.split(',').map(str::trim).collect()
    };
    let reports = py
        .detach(|| {
            names
                .iter()
                .map(|s| harness::run_suite(s, &cfg))
                .collect::<qmetric::Result<Vec<_>>>()
        })
        .map_err(err)?;
    let out = serde_json::json!({
        "passed": harness::all_passed(&reports),
        "report_hash": harness::report_hash(&reports),
        "reports": reports,
    });
    to_py(py, &out)
}

/// Gap `K^{(b)}_{ρ₁⊕ρ₂} − K^{(b)}_{ρ₁} − K^{(b)}_{ρ₂}` on the canonical instance.
#[pyfunction]
#[pyo3(signature = (b=1.0))]
fn demo(py: Python<'_>, b: f64) -> PyResult<Bound<'_, PyAny>> {
    let o = harness::demo_cptp_non_additivity(b).map_err(err)?;
    to_py(py, &o)
}

#[pymodule]
fn pyqmetric(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyMonotoneFunction>()?;
    m.add_class::<PyChannel>()?;
    m.add_function(wrap_pyfunction!(eval, m)?)?;
    m.add_function(wrap_pyfunction!(cross_check, m)?)?;
    m.add_function(wrap_pyfunction!(mean, m)?)?;
    m.add_function(wrap_pyfunction!(validate_channel, m)?)?;
    m.add_function(wrap_pyfunction!(verify, m)?)?;
    m.add_function(wrap_pyfunction!(demo, m)?)?;
    m.add("SUITES", harness::SUITE_NAMES.to_vec())?;
    Ok(())
}
