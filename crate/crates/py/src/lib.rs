//! Python bindings: `import pycrnsim`.

use std::collections::BTreeMap;
use std::path::PathBuf;

use pyo3::exceptions::{PyIOError, PyRuntimeError, PyValueError};
use pyo3::prelude::*;

use crnsim::experiments::{self, RunnerOptions, SchemeConfig, SchemeId};
use crnsim::metrics::RunStats;
use crnsim::{oracles, Discipline, Error, JobClass, RngStream};

fn to_py(e: Error) -> PyErr {
    match e {
        Error::Domain(_) | Error::Config { .. } | Error::NoScenario | Error::Unstable(_) => {
            PyValueError::new_err(e.to_string())
        }
        Error::Io(_) => PyIOError::new_err(e.to_string()),
        _ => PyRuntimeError::new_err(e.to_string()),
    }
}

/// Branch probability of the GE distribution, `2 / (scv + 1)`.
#[pyfunction]
fn ge_tau(scv: f64) -> PyResult<f64> {
    crnsim::ge_tau(scv).map_err(to_py)
}

/// Generalized exponential distribution with a mean rate and an SCV >= 1.
#[pyclass(name = "GeParams", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyGeParams(crnsim::GeParams);

#[pymethods]
impl PyGeParams {
    #[new]
    fn new(rate: f64, scv: f64) -> PyResult<Self> {
        crnsim::GeParams::new(rate, scv).map(Self).map_err(to_py)
    }

    #[getter]
    fn rate(&self) -> f64 {
        self.0.rate()
    }

    #[getter]
    fn scv(&self) -> f64 {
        self.0.scv()
    }

    #[getter]
    fn tau(&self) -> f64 {
        self.0.tau()
    }

    #[getter]
    fn mean(&self) -> f64 {
        self.0.mean()
    }

    /// `n` variates from the substream `(seed, stream)`.
    #[pyo3(signature = (n, seed, stream = 0))]
    fn sample(&self, n: usize, seed: u64, stream: u64) -> Vec<f64> {
        let mut rng = RngStream::new(seed, stream);
        (0..n).map(|_| crnsim::ge_sample(&self.0, &mut rng)).collect()
    }

    fn __repr__(&self) -> String {
        format!("GeParams(rate={}, scv={})", self.0.rate(), self.0.scv())
    }
}

/// One network scenario: SEC (optional) -> AC -> CH.
#[pyclass(name = "NetworkConfig", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyNetworkConfig(crnsim::NetworkConfig);

#[pymethods]
impl PyNetworkConfig {
    /// `warmup` defaults to 10% of the horizon. A zero rate disables a class.
    #[new]
    #[pyo3(signature = (
        discipline = "PR", security = true, channels = 1, capacity = 20,
        pu_rate = 3.0, su_rate = 1.0, scv_arrival = 1.0, scv_service = 1.0, mu = 13.0,
        seed = 1, horizon = 2e5, warmup = None, p_malicious = 0.0, p_admission_reject = 0.0
    ))]
    #[allow(clippy::too_many_arguments)]
    fn new(
        discipline: &str,
        security: bool,
        channels: usize,
        capacity: usize,
        pu_rate: f64,
        su_rate: f64,
        scv_arrival: f64,
        scv_service: f64,
        mu: f64,
        seed: u64,
        horizon: f64,
        warmup: Option<f64>,
        p_malicious: f64,
        p_admission_reject: f64,
    ) -> PyResult<Self> {
        let discipline: Discipline = discipline.parse().map_err(PyValueError::new_err)?;
        let mut cfg = crnsim::NetworkConfig::standard(
            discipline,
            security,
            channels,
            capacity,
            pu_rate,
            su_rate,
            scv_arrival,
            scv_service,
            mu,
        )
        .map_err(to_py)?
        .with_run(seed, horizon, warmup.unwrap_or(0.1 * horizon));
        cfg.p_malicious = p_malicious;
        cfg.p_admission_reject = p_admission_reject;
        cfg.validate().map_err(to_py)?;
        Ok(Self(cfg))
    }

    #[getter]
    fn discipline(&self) -> String {
        self.0.discipline.to_string()
    }

    #[getter]
    fn security(&self) -> bool {
        self.0.security_enabled
    }

    #[getter]
    fn horizon(&self) -> f64 {
        self.0.horizon
    }

    #[getter]
    fn seed(&self) -> u64 {
        self.0.seed
    }

    /// Runs one replication; see `run_replication`.
    #[pyo3(signature = (replication = 0))]
    fn run(&self, py: Python<'_>, replication: u64) -> PyResult<RunDict> {
        run_replication(py, self, replication)
    }
}

type RunDict = BTreeMap<String, Option<f64>>;

fn flatten(stats: &RunStats) -> RunDict {
    let mut out: RunDict = stats
        .metrics()
        .into_iter()
        .map(|(k, v)| (k.plot_name(), v))
        .collect();
    for class in JobClass::ALL {
        let c = &stats.conservation[class.index()];
        let prefix = class.to_string().to_lowercase();
        for (name, v) in [
            ("external_arrivals", c.external_arrivals),
            ("departures", c.departures),
            ("losses", c.losses),
            ("security_drops", c.security_drops),
            ("admission_drops", c.admission_drops),
            ("in_system", c.in_system),
        ] {
            out.insert(format!("{prefix}_{name}"), Some(v as f64));
        }
    }
    out
}

/// Runs one seeded replication and returns a flat dict of metrics
/// (e.g. `mean_response_time_total`) and per-class conservation counts.
/// Metrics without data are `None`.
#[pyfunction]
#[pyo3(signature = (config, replication = 0))]
fn run_replication(py: Python<'_>, config: &PyNetworkConfig, replication: u64) -> PyResult<RunDict> {
    let cfg = config.0.clone();
    let stats = py
        .detach(move || crnsim::run_replication(&cfg, replication))
        .map_err(to_py)?;
    Ok(flatten(&stats))
}

#[pyfunction]
fn mm1(lambda_: f64, mu: f64) -> PyResult<BTreeMap<&'static str, f64>> {
    let r = oracles::mm1(lambda_, mu).map_err(to_py)?;
    Ok(BTreeMap::from([
        ("rho", r.rho),
        ("l", r.l),
        ("lq", r.lq),
        ("w", r.w),
        ("wq", r.wq),
    ]))
}

#[pyfunction]
fn mm1n_loss(lambda_: f64, mu: f64, n_total: usize) -> PyResult<f64> {
    oracles::mm1n_loss(lambda_, mu, n_total).map_err(to_py)
}

#[pyfunction]
fn erlang_c(lambda_: f64, mu: f64, c: usize) -> PyResult<f64> {
    oracles::erlang_c(lambda_, mu, c).map_err(to_py)
}

#[pyfunction]
fn erlang_c_wq(lambda_: f64, mu: f64, c: usize) -> PyResult<f64> {
    oracles::erlang_c_wq(lambda_, mu, c).map_err(to_py)
}

#[pyfunction]
fn mm1_preemptive_resume(lambda1: f64, lambda2: f64, mu: f64) -> PyResult<(f64, f64)> {
    oracles::mm1_preemptive_resume(lambda1, lambda2, mu).map_err(to_py)
}

/// Runs a built-in scheme (`"A"`..`"D"`) or a scenario file and returns the
/// output rows as dicts with the CSV column names.
#[pyfunction]
#[pyo3(signature = (scheme = None, config = None, reps = None, horizon = None, warmup = None, seed = None, parallel = 0))]
#[allow(clippy::too_many_arguments)]
fn run_scheme(
    py: Python<'_>,
    scheme: Option<&str>,
    config: Option<PathBuf>,
    reps: Option<usize>,
    horizon: Option<f64>,
    warmup: Option<f64>,
    seed: Option<u64>,
    parallel: usize,
) -> PyResult<Vec<BTreeMap<&'static str, Py<PyAny>>>> {
    let mut s = match (scheme, config) {
        (Some(_), Some(_)) => return Err(PyValueError::new_err("pass either scheme or config, not both")),
        (Some(id), None) => {
            let id: SchemeId = id.parse().map_err(PyValueError::new_err)?;
            SchemeConfig::builtin(id).map_err(to_py)?
        }
        (None, Some(path)) => experiments::load_config(path).map_err(to_py)?,
        (None, None) => return Err(to_py(Error::NoScenario)),
    };
    if let Some(v) = reps {
        s.reps = v;
    }
    if let Some(v) = horizon {
        s.horizon = v;
    }
    if let Some(v) = warmup {
        s.warmup = v;
    }
    if let Some(v) = seed {
        s.seed = v;
    }
    let opts = RunnerOptions {
        parallel,
        trace_dir: None,
    };
    let result = py.detach(|| experiments::run_scheme(&s, &opts)).map_err(to_py)?;
    if let Some((p, e)) = result.failures().next() {
        return Err(PyRuntimeError::new_err(format!("grid point {} failed: {e}", p.index)));
    }
    experiments::rows(&result)
        .into_iter()
        .map(|r| {
            let mut d: BTreeMap<&'static str, Py<PyAny>> = BTreeMap::new();
            let mut put = |k: &'static str, v: Bound<'_, PyAny>| {
                d.insert(k, v.unbind());
            };
            put("scheme", r.scheme.into_pyobject(py)?.into_any());
            put("discipline", r.discipline.to_string().into_pyobject(py)?.into_any());
            put("security", r.security.into_pyobject(py)?.to_owned().into_any());
            put("c", r.c.into_pyobject(py)?.into_any());
            put("N", r.n.into_pyobject(py)?.into_any());
            put("pu_rate", r.pu_rate.into_pyobject(py)?.into_any());
            put("su_rate", r.su_rate.into_pyobject(py)?.into_any());
            put("scv_arrival", r.scv_arrival.into_pyobject(py)?.into_any());
            put("scv_service", r.scv_service.into_pyobject(py)?.into_any());
            put("metric_name", r.metric.metric.name().into_pyobject(py)?.into_any());
            put("class_scope", r.metric.class.to_string().into_pyobject(py)?.into_any());
            put("station_scope", r.metric.station.to_string().into_pyobject(py)?.into_any());
            put("mean", r.mean.into_pyobject(py)?.into_any());
            put("ci95_half_width", r.ci95_half_width.into_pyobject(py)?.into_any());
            put("reps", r.reps.into_pyobject(py)?.into_any());
            Ok(d)
        })
        .collect()
}

#[pymodule]
fn pycrnsim(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyGeParams>()?;
    m.add_class::<PyNetworkConfig>()?;
    m.add_function(wrap_pyfunction!(ge_tau, m)?)?;
    m.add_function(wrap_pyfunction!(run_replication, m)?)?;
    m.add_function(wrap_pyfunction!(mm1, m)?)?;
    m.add_function(wrap_pyfunction!(mm1n_loss, m)?)?;
    m.add_function(wrap_pyfunction!(erlang_c, m)?)?;
    m.add_function(wrap_pyfunction!(erlang_c_wq, m)?)?;
    m.add_function(wrap_pyfunction!(mm1_preemptive_resume, m)?)?;
    m.add_function(wrap_pyfunction!(run_scheme, m)?)?;
    Ok(())
}
