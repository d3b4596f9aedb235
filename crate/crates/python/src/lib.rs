//! Python bindings for the `mimo_islr` waveform-design library.

use mimo_islr::engine::{self, RunRecord};
use mimo_islr::metrics::{self, IslrReport};
use mimo_islr::model::{validate_config, AngleRegion, AngleScenario, ConstraintSpec, RunConfig, WaveformSet};
use num_complex::Complex64;
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::PyDict;

fn py_err(e: mimo_islr::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

/// Transmit matrix, one row per antenna.
#[pyclass(name = "Waveform", module = "mimo_islr", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyWaveform {
    inner: WaveformSet,
}

#[pymethods]
impl PyWaveform {
    #[new]
    fn new(rows: Vec<Vec<Complex64>>) -> PyResult<Self> {
        Ok(Self { inner: WaveformSet::from_rows(&rows).map_err(py_err)? })
    }

    /// Random MPSK matrix from a seeded generator.
    #[staticmethod]
    #[pyo3(signature = (mt, n, alphabet = 8, seed = 0))]
    fn random_mpsk(mt: usize, n: usize, alphabet: usize, seed: u64) -> PyResult<Self> {
        Ok(Self { inner: engine::init_waveform(mt, n, alphabet, seed).map_err(py_err)? })
    }

    #[getter]
    fn mt(&self) -> usize {
        self.inner.mt()
    }

    #[getter]
    fn n(&self) -> usize {
        self.inner.n()
    }

    fn rows(&self) -> Vec<Vec<Complex64>> {
        self.inner.rows().map(<[Complex64]>::to_vec).collect()
    }

    fn energy(&self) -> f64 {
        self.inner.energy()
    }

    fn par(&self) -> f64 {
        self.inner.par()
    }

    fn __repr__(&self) -> String {
        format!("Waveform(mt={}, n={})", self.inner.mt(), self.inner.n())
    }
}

/// Desired and undesired angle sets for a given array size.
#[pyclass(name = "Scenario", module = "mimo_islr", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyScenario {
    inner: AngleScenario,
}

fn regions(triples: Vec<(f64, f64, f64)>) -> Vec<AngleRegion> {
    triples.into_iter().map(|(lo, hi, step)| AngleRegion::new(lo, hi, step)).collect()
}

#[pymethods]
impl PyScenario {
    /// Regions are `(lo_deg, hi_deg, step_deg)` triples.
    #[new]
    #[pyo3(signature = (mt, n, theta_d, theta_u, dt_over_lambda = 0.5))]
    fn new(
        mt: usize,
        n: usize,
        theta_d: Vec<(f64, f64, f64)>,
        theta_u: Vec<(f64, f64, f64)>,
        dt_over_lambda: f64,
    ) -> PyResult<Self> {
        let inner = AngleScenario::from_regions_deg(mt, n, &regions(theta_d), &regions(theta_u), dt_over_lambda)
            .map_err(py_err)?;
        Ok(Self { inner })
    }

    /// Desired `[-55, -35]`, undesired `[-90, -60]` and `[-30, 90]` degrees, 5 degree grid.
    #[staticmethod]
    fn reference(mt: usize, n: usize) -> PyResult<Self> {
        Ok(Self { inner: AngleScenario::reference(mt, n).map_err(py_err)? })
    }

    /// Desired angles in radians.
    #[getter]
    fn theta_d(&self) -> Vec<f64> {
        self.inner.theta_d().to_vec()
    }

    /// Undesired angles in radians.
    #[getter]
    fn theta_u(&self) -> Vec<f64> {
        self.inner.theta_u().to_vec()
    }
}

/// Settings for one optimization run.
#[pyclass(name = "Config", module = "mimo_islr", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyConfig {
    inner: RunConfig,
}

fn parse_constraint(kind: &str, gamma_p_db: Option<f64>, alphabet_size: Option<usize>) -> PyResult<ConstraintSpec> {
    match kind {
        "energy" => Ok(ConstraintSpec::Energy),
        "continuous" => Ok(ConstraintSpec::ContinuousPhase),
        "par" => gamma_p_db
            .map(ConstraintSpec::par_db)
            .ok_or_else(|| PyValueError::new_err("constraint 'par' requires gamma_p_db")),
        "discrete" => alphabet_size
            .map(|alphabet| ConstraintSpec::DiscretePhase { alphabet })
            .ok_or_else(|| PyValueError::new_err("constraint 'discrete' requires alphabet_size")),
        other => Err(PyValueError::new_err(format!(
            "unknown constraint '{other}' (expected energy, par, continuous or discrete)"
        ))),
    }
}

#[pymethods]
impl PyConfig {
    #[new]
    #[pyo3(signature = (
        mt, n, constraint, eta, *, gamma_p_db = None, alphabet_size = None, scenario = None,
        zeta = RunConfig::DEFAULT_ZETA, max_sweeps = RunConfig::DEFAULT_MAX_SWEEPS, seed = 0,
        init_alphabet = RunConfig::DEFAULT_INIT_ALPHABET,
    ))]
    #[allow(clippy::too_many_arguments)]
    fn new(
        mt: usize,
        n: usize,
        constraint: &str,
        eta: f64,
        gamma_p_db: Option<f64>,
        alphabet_size: Option<usize>,
        scenario: Option<PyRef<'_, PyScenario>>,
        zeta: f64,
        max_sweeps: usize,
        seed: u64,
        init_alphabet: usize,
    ) -> PyResult<Self> {
        let scenario = match scenario {
            Some(s) => s.inner.clone(),
            None => AngleScenario::reference(mt, n).map_err(py_err)?,
        };
        let inner = validate_config(RunConfig {
            mt,
            n,
            scenario,
            constraint: parse_constraint(constraint, gamma_p_db, alphabet_size)?,
            eta,
            zeta,
            max_sweeps,
            seed,
            init_alphabet,
        })
        .map_err(py_err)?;
        Ok(Self { inner })
    }

    #[getter]
    fn eta(&self) -> f64 {
        self.inner.eta
    }

    #[getter]
    fn seed(&self) -> u64 {
        self.inner.seed
    }

    #[getter]
    fn constraint(&self) -> &'static str {
        self.inner.constraint.name()
    }

    #[getter]
    fn scenario(&self) -> PyScenario {
        PyScenario { inner: self.inner.scenario.clone() }
    }
}

fn report_dict<'py>(py: Python<'py>, r: &IslrReport) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    d.set_item("spatial_islr", r.spatial_islr)?;
    d.set_item("range_islr", r.range_islr)?;
    d.set_item("objective", r.objective)?;
    d.set_item("spatial_islr_db", r.spatial_islr_db)?;
    d.set_item("range_islr_db", r.range_islr_db)?;
    Ok(d)
}

fn record_dict<'py>(py: Python<'py>, rec: RunRecord) -> PyResult<Bound<'py, PyDict>> {
    let d = report_dict(py, &rec.final_report)?;
    let history: Vec<(usize, f64, f64, f64)> =
        rec.history.iter().map(|h| (h.sweep, h.f_o, h.spatial_islr_db, h.range_islr_db)).collect();
    d.set_item("initial", report_dict(py, &rec.initial)?)?;
    d.set_item("history", history)?;
    d.set_item("sweeps", rec.sweeps_used)?;
    d.set_item("stop_reason", rec.stop_reason.as_str())?;
    d.set_item("fallbacks", rec.diagnostics.fallbacks)?;
    d.set_item("wall_time_s", rec.diagnostics.wall_time_s)?;
    d.set_item("waveform", PyWaveform { inner: rec.final_waveform })?;
    Ok(d)
}

/// Runs coordinate descent; returns the final metrics, history and waveform.
#[pyfunction]
#[pyo3(signature = (config, initial = None))]
fn run<'py>(
    py: Python<'py>,
    config: PyRef<'py, PyConfig>,
    initial: Option<PyRef<'py, PyWaveform>>,
) -> PyResult<Bound<'py, PyDict>> {
    let cfg = config.inner.clone();
    let s0 = initial.map(|w| w.inner.clone());
    let rec = py.detach(move || engine::run(&cfg, s0)).map_err(py_err)?;
    record_dict(py, rec)
}

/// Best-of-`trials` run per weight, sorted by weight.
#[pyfunction]
#[pyo3(signature = (config, etas, trials = 1))]
fn pareto_sweep<'py>(
    py: Python<'py>,
    config: PyRef<'py, PyConfig>,
    etas: Vec<f64>,
    trials: usize,
) -> PyResult<Vec<Bound<'py, PyDict>>> {
    let cfg = config.inner.clone();
    let points = py.detach(move || engine::pareto_sweep(&cfg, &etas, trials)).map_err(py_err)?;
    points
        .into_iter()
        .map(|p| {
            let d = match p.record {
                Ok(rec) => record_dict(py, rec)?,
                Err(e) => {
                    let d = PyDict::new(py);
                    d.set_item("error", e.to_string())?;
                    d
                }
            };
            d.set_item("eta", p.eta)?;
            d.set_item("trial", p.trial)?;
            Ok(d)
        })
        .collect()
}

/// Spatial and range ISLR of `waveform` and their weighted objective.
#[pyfunction]
#[pyo3(name = "metrics")]
fn py_metrics<'py>(
    py: Python<'py>,
    waveform: PyRef<'py, PyWaveform>,
    scenario: PyRef<'py, PyScenario>,
    eta: f64,
) -> PyResult<Bound<'py, PyDict>> {
    let report = metrics::objective(&waveform.inner, &scenario.inner, eta).map_err(py_err)?;
    report_dict(py, &report)
}

#[pymodule]
#[pyo3(name = "mimo_islr")]
fn init_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyWaveform>()?;
    m.add_class::<PyScenario>()?;
    m.add_class::<PyConfig>()?;
    m.add_function(wrap_pyfunction!(run, m)?)?;
    m.add_function(wrap_pyfunction!(pareto_sweep, m)?)?;
    m.add_function(wrap_pyfunction!(py_metrics, m)?)?;
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    Ok(())
}
