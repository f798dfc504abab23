use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

use lin3lp::linalg::{Vec2, Vec8};
use lin3lp::sim::Scenario;
use lin3lp::{signal, solve_periodic, ModelParams};

fn err(e: lin3lp::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn vec8(e: Vec<f64>) -> PyResult<Vec8> {
    if e.len() != 8 {
        return Err(PyValueError::new_err(format!(
            "expected 8 error entries, got {}",
            e.len()
        )));
    }
    Ok(Vec8::from_column_slice(&e))
}

/// Default model parameters as JSON.
#[pyfunction]
fn default_params() -> PyResult<String> {
    ModelParams::default().to_json().map_err(err)
}

/// Solve the periodic gait for `(vx, vy)`. Returns the gait as JSON.
#[pyfunction]
#[pyo3(signature = (vx, vy=0.0, step_time=None, params=None))]
fn solve_gait(vx: f64, vy: f64, step_time: Option<f64>, params: Option<&str>) -> PyResult<String> {
    let p = match params {
        Some(s) => ModelParams::from_json(s).map_err(err)?,
        None => ModelParams::default(),
    };
    let t = step_time.unwrap_or(p.step_time);
    solve_periodic(&p, Vec2::new(vx, vy), t)
        .map_err(err)?
        .to_json()
        .map_err(err)
}

#[pyfunction]
fn dead_zone(x: f64, a: f64) -> f64 {
    signal::dead_zone(x, a)
}

/// Gait, error dynamics and DLQR gain for one walking speed.
#[pyclass(name = "Controller")]
struct PyController(lin3lp::Controller);

#[pymethods]
impl PyController {
    #[new]
    #[pyo3(signature = (vx=0.0, vy=0.0, step_time=None))]
    fn new(vx: f64, vy: f64, step_time: Option<f64>) -> PyResult<Self> {
        let p = ModelParams::default();
        let g =
            solve_periodic(&p, Vec2::new(vx, vy), step_time.unwrap_or(p.step_time)).map_err(err)?;
        Ok(Self(
            lin3lp::Controller::with_default_weights(g).map_err(err)?,
        ))
    }

    #[staticmethod]
    fn from_gait_json(gait: &str) -> PyResult<Self> {
        let g = lin3lp::PeriodicGait::from_json(gait).map_err(err)?;
        Ok(Self(
            lin3lp::Controller::with_default_weights(g).map_err(err)?,
        ))
    }

    #[getter]
    fn step_time(&self) -> f64 {
        self.0.step_time()
    }

    #[getter]
    fn spectral_radius(&self) -> f64 {
        self.0.gain.spectral_radius
    }

    /// Row-major 4x8 gain.
    #[getter]
    fn gain(&self) -> Vec<Vec<f64>> {
        let k = &self.0.gain.k;
        (0..4)
            .map(|i| (0..8).map(|j| k[(i, j)]).collect())
            .collect()
    }

    /// Input correction for error `e` at phase time `tau`.
    fn time_project(&self, e: Vec<f64>, tau: f64) -> PyResult<Vec<f64>> {
        Ok(self
            .0
            .time_project(&vec8(e)?, tau)
            .map_err(err)?
            .iter()
            .copied()
            .collect())
    }

    /// `(raw, dp, attack, truncated)` footstep adjustment.
    #[pyo3(signature = (e, tau, limit=lin3lp::stabilizer::DEFAULT_TRUNCATION))]
    fn footstep_adjustment(
        &self,
        e: Vec<f64>,
        tau: f64,
        limit: f64,
    ) -> PyResult<([f64; 2], [f64; 2], [f64; 2], [bool; 2])> {
        let a = self
            .0
            .footstep_adjustment(&vec8(e)?, tau, limit)
            .map_err(err)?;
        Ok((a.raw.into(), a.dp.into(), a.attack.into(), a.truncated))
    }
}

/// Run a scenario given as JSON. Returns `(trace_csv, metrics_json)`.
#[pyfunction]
fn run_scenario(scenario: &str) -> PyResult<(String, String)> {
    let s = Scenario::from_json(scenario).map_err(err)?;
    let (trace, metrics) = lin3lp::sim::run_scenario(&s).map_err(err)?;
    let m = serde_json::to_string(&metrics).map_err(|e| PyValueError::new_err(e.to_string()))?;
    Ok((trace.to_csv(), m))
}

/// Default scenario as JSON, a starting point for edits.
#[pyfunction]
fn default_scenario() -> PyResult<String> {
    Scenario::default().to_json().map_err(err)
}

#[pymodule]
fn lin3lp_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_function(wrap_pyfunction!(default_params, m)?)?;
    m.add_function(wrap_pyfunction!(solve_gait, m)?)?;
    m.add_function(wrap_pyfunction!(dead_zone, m)?)?;
    m.add_function(wrap_pyfunction!(run_scenario, m)?)?;
    m.add_function(wrap_pyfunction!(default_scenario, m)?)?;
    m.add_class::<PyController>()?;
    Ok(())
}
