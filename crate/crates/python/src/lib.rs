//! Python bindings. Structured results cross the boundary as plain dicts
//! and lists.

use std::path::PathBuf;

use pyo3::exceptions::{PyIOError, PyValueError};
use pyo3::prelude::*;
use serde::Serialize;
use serde_json::Value;

use sim::analysis;
use sim::calibration::{self, calibrate};
use sim::config::{apply_overrides, Experiment};
use sim::engine::{run_experiment, ExperimentResult, ReplicationResult};
use sim::output;
use sim::psychodynamics::{dropout_hazard as hazard, HazardParams};
use sim::{Error, ScenarioKind};

fn to_py(e: Error) -> PyErr {
    match e {
        Error::Io { .. } => PyIOError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

fn to_python<'py>(py: Python<'py>, value: &impl Serialize) -> PyResult<Bound<'py, PyAny>> {
    let text = serde_json::to_string(value).map_err(|e| PyValueError::new_err(e.to_string()))?;
    py.import("json")?.call_method1("loads", (text,))
}

fn from_python(py: Python<'_>, obj: &Bound<'_, PyAny>) -> PyResult<Value> {
    let text: String = py.import("json")?.call_method1("dumps", (obj,))?.extract()?;
    serde_json::from_str(&text).map_err(|e| PyValueError::new_err(e.to_string()))
}

fn scenario(label: &str) -> PyResult<ScenarioKind> {
    ScenarioKind::from_label(label)
        .or_else(|| ScenarioKind::from_key(label))
        .ok_or_else(|| PyValueError::new_err(format!("unknown scenario {label:?}")))
}

/// Loaded experiment: config plus resolved curriculum and archetypes.
#[pyclass(name = "Experiment", frozen)]
struct PyExperiment {
    inner: Experiment,
}

#[pymethods]
impl PyExperiment {
    /// `config`: path to a JSON config; the built-in default when omitted.
    /// `overrides`: mapping of dotted keys to values.
    #[new]
    #[pyo3(signature = (config=None, overrides=None))]
    fn new(py: Python<'_>, config: Option<PathBuf>, overrides: Option<Bound<'_, PyAny>>) -> PyResult<Self> {
        let base = match config {
            Some(p) => Experiment::from_path(&p).map_err(to_py)?,
            None => Experiment::builtin_default(),
        };
        let Some(ov) = overrides else {
            return Ok(Self { inner: base });
        };
        let Value::Object(map) = from_python(py, &ov)? else {
            return Err(PyValueError::new_err("overrides must be a dict"));
        };
        let pairs: Vec<(String, Value)> = map.into_iter().collect();
        let cfg = apply_overrides(&base.config, &pairs).map_err(to_py)?;
        Ok(Self {
            inner: base.with_config(cfg).map_err(to_py)?,
        })
    }

    #[getter]
    fn cohort_size(&self) -> usize {
        self.inner.config.cohort_size
    }

    #[getter]
    fn replications(&self) -> usize {
        self.inner.config.replications_per_scenario
    }

    /// Effective config with resolved inputs and run metadata.
    fn config<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        to_python(py, &self.inner.effective_config(None))
    }

    /// Runs every configured scenario. The GIL is released meanwhile.
    #[pyo3(signature = (parallel=true))]
    fn run(&self, py: Python<'_>, parallel: bool) -> PyResult<PyRun> {
        let inner = &self.inner;
        let result = py.detach(|| run_experiment(inner, parallel)).map_err(to_py)?;
        Ok(PyRun {
            experiment: self.inner.clone(),
            result,
        })
    }

    /// Grid calibration of the regime-A curve; returns the report as a dict.
    #[pyo3(signature = (tolerance=None))]
    fn calibrate<'py>(&self, py: Python<'py>, tolerance: Option<f64>) -> PyResult<Bound<'py, PyAny>> {
        let mut settings = self.inner.config.calibration.clone();
        if let Some(t) = tolerance {
            settings.tolerance = t;
        }
        let inner = &self.inner;
        let mut result = py.detach(|| calibrate(inner, &settings)).map_err(to_py)?;
        result.candidates.clear();
        to_python(py, &result)
    }
}

/// Finished experiment.
#[pyclass(name = "Run", frozen)]
struct PyRun {
    experiment: Experiment,
    result: ExperimentResult,
}

impl PyRun {
    fn replications(&self, label: &str) -> PyResult<Vec<ReplicationResult>> {
        let kind = scenario(label)?;
        let reps: Vec<_> = self.result.for_scenario(kind).cloned().collect();
        if reps.is_empty() {
            return Err(PyValueError::new_err(format!("scenario {label} was not run")));
        }
        Ok(reps)
    }
}

#[pymethods]
impl PyRun {
    #[getter]
    fn agent_count(&self) -> usize {
        self.result.agent_count()
    }

    /// One dict per scenario with the summary columns.
    fn summary<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        let records = output::agent_records(&self.experiment, &self.result);
        to_python(py, &analysis::summarize_by_scenario(&records).map_err(to_py)?)
    }

    /// Cumulative dropout at the end of years 1 to 6.
    fn yearly_dropout(&self, scenario: &str) -> PyResult<Vec<f64>> {
        calibration::cumulative_dropout_by_year(&self.replications(scenario)?).map_err(to_py)
    }

    /// Per-semester active-agent means and final means over all agents.
    fn trajectories<'py>(&self, py: Python<'py>, scenario: &str) -> PyResult<Bound<'py, PyAny>> {
        to_python(py, &analysis::psychosocial_trajectories(&self.replications(scenario)?).map_err(to_py)?)
    }

    /// Writes the run directory and returns the written paths.
    fn write(&self, dir: PathBuf) -> PyResult<Vec<PathBuf>> {
        let f = output::write_run(&dir, &self.experiment, &self.result, None).map_err(to_py)?;
        Ok(vec![f.agent_outcomes, f.summary, f.config, f.curves, f.run_log])
    }
}

/// Audits a run directory; returns the report as a dict.
#[pyfunction]
fn audit<'py>(py: Python<'py>, dir: PathBuf) -> PyResult<Bound<'py, PyAny>> {
    to_python(py, &analysis::audit(&dir).map_err(to_py)?)
}

#[pyfunction]
fn dropout_hazard(stress: f64, belonging: f64, alpha0: f64, alpha1: f64, alpha2: f64) -> f64 {
    hazard(stress, belonging, &HazardParams { alpha0, alpha1, alpha2 })
}

#[pyfunction]
fn rmse(simulated: Vec<f64>, target: Vec<f64>) -> PyResult<f64> {
    calibration::rmse(&simulated, &target).map_err(to_py)
}

#[pymodule]
fn promowall(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyExperiment>()?;
    m.add_class::<PyRun>()?;
    m.add_function(wrap_pyfunction!(audit, m)?)?;
    m.add_function(wrap_pyfunction!(dropout_hazard, m)?)?;
    m.add_function(wrap_pyfunction!(rmse, m)?)?;
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    Ok(())
}
