//! Python module `ies_sched`.
//!
//! Scenarios and schedules cross the boundary as wrapped objects; anything
//! structured comes back as plain dicts and lists built from the JSON form.

use std::path::PathBuf;

use ies_core::building::{heating_demand as demand, indoor_temp_step as temp_step, BuildingParams};
use ies_core::cli::{self, ModeSelection, RunConfig, SolverChoice};
use ies_core::harness;
use ies_core::milp::{write_lp, SolveOptions};
use ies_core::probseq::{self, ProbSeq, PvParams, WindParams};
use ies_core::scheduler::{self, Mode};
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyAny;

fn err(e: ies_core::Error) -> PyErr {
    match e {
        ies_core::Error::Io(_) | ies_core::Error::Solver(_) => PyRuntimeError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

fn to_py<'py>(py: Python<'py>, value: &impl serde::Serialize) -> PyResult<Bound<'py, PyAny>> {
    let text = serde_json::to_string(value).map_err(|e| PyRuntimeError::new_err(e.to_string()))?;
    py.import("json")?.call_method1("loads", (text,))
}

#[pyclass(name = "Scenario", module = "ies_sched")]
#[derive(Clone)]
struct PyScenario {
    inner: scheduler::Scenario,
}

#[pymethods]
impl PyScenario {
    /// Parses and validates a scenario from a JSON string.
    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        let s: scheduler::Scenario = serde_json::from_str(text).map_err(|e| PyValueError::new_err(e.to_string()))?;
        s.validate().map_err(err)?;
        Ok(PyScenario { inner: s })
    }

    fn to_json(&self) -> PyResult<String> {
        serde_json::to_string_pretty(&self.inner).map_err(|e| PyRuntimeError::new_err(e.to_string()))
    }

    #[getter]
    fn name(&self) -> String {
        self.inner.name.clone()
    }

    #[getter]
    fn horizon(&self) -> usize {
        self.inner.horizon
    }

    #[getter]
    fn mode(&self) -> Option<u8> {
        self.inner.mode.map(Mode::number)
    }

    #[getter]
    fn alpha(&self) -> f64 {
        self.inner.alpha
    }

    #[getter]
    fn num_thermal(&self) -> usize {
        self.inner.thermal_units.len()
    }

    #[getter]
    fn num_chp(&self) -> usize {
        self.inner.chp_units.len()
    }

    /// Copy reduced to operating mode `mode` (1..6).
    fn with_mode(&self, mode: u8) -> PyResult<Self> {
        let m = Mode::new(mode).map_err(err)?;
        self.inner.check_mode(m).map_err(err)?;
        Ok(PyScenario {
            inner: scheduler::apply_mode(&self.inner, m),
        })
    }

    /// Copy with other settings; `chance` is "binary" or "quantile".
    #[pyo3(signature = (alpha=None, chance=None, q=None))]
    fn with_settings(&self, alpha: Option<f64>, chance: Option<&str>, q: Option<f64>) -> PyResult<Self> {
        let mut s = self.inner.clone();
        if let Some(a) = alpha {
            s.alpha = a;
        }
        if let Some(c) = chance {
            s.chance_formulation = cli::parse_chance(c).map_err(err)?;
        }
        if let Some(q) = q {
            s.q_step = q;
        }
        s.validate().map_err(err)?;
        Ok(PyScenario { inner: s })
    }

    /// Expected joint renewable output and required reserve per period.
    fn renewables(&self) -> PyResult<Vec<(f64, f64)>> {
        let ren = scheduler::renewables(&self.inner).map_err(err)?;
        Ok(ren.iter().map(|r| (r.expected, r.required_reserve)).collect())
    }

    /// The model in LP text format.
    fn lp_text(&self) -> PyResult<String> {
        Ok(write_lp(&scheduler::build_model(&self.inner).map_err(err)?))
    }

    fn __repr__(&self) -> String {
        let mode = self.inner.mode.map_or("None".to_string(), |m| m.to_string());
        format!(
            "Scenario(name={:?}, horizon={}, mode={mode}, alpha={})",
            self.inner.name, self.inner.horizon, self.inner.alpha
        )
    }
}

#[pyclass(name = "Schedule", module = "ies_sched")]
#[derive(Clone)]
struct PySchedule {
    inner: scheduler::Schedule,
    #[pyo3(get)]
    status: String,
    #[pyo3(get)]
    nodes: usize,
}

#[pymethods]
impl PySchedule {
    #[getter]
    fn objective(&self) -> f64 {
        self.inner.objective
    }

    #[getter]
    fn true_cost(&self) -> f64 {
        self.inner.costs.total
    }

    #[getter]
    fn total_curtailment(&self) -> f64 {
        self.inner.total_curtailment()
    }

    #[getter]
    fn total_reserve(&self) -> Vec<f64> {
        self.inner.total_reserve.clone()
    }

    #[getter]
    fn required_reserve(&self) -> Vec<f64> {
        self.inner.required_reserve.clone()
    }

    fn to_dict<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        to_py(py, &self.inner)
    }

    fn __repr__(&self) -> String {
        format!("Schedule(status={}, objective={})", self.status, self.inner.objective)
    }
}

#[pyfunction]
fn load_scenario(path: PathBuf) -> PyResult<PyScenario> {
    Ok(PyScenario {
        inner: scheduler::load_scenario(path).map_err(err)?,
    })
}

/// Solves with the embedded MILP solver. Raises when no solution is found.
#[pyfunction]
#[pyo3(signature = (scenario, time_limit=None))]
fn solve(py: Python<'_>, scenario: &PyScenario, time_limit: Option<f64>) -> PyResult<PySchedule> {
    let opts = SolveOptions {
        time_limit: time_limit.map(std::time::Duration::from_secs_f64),
        ..SolveOptions::default()
    };
    let s = scenario.inner.clone();
    let out = py.allow_threads(|| scheduler::solve_scenario(&s, &opts)).map_err(err)?;
    let status = format!("{:?}", out.solution.status);
    match out.schedule {
        Some(inner) => Ok(PySchedule {
            inner,
            status,
            nodes: out.solution.nodes,
        }),
        None => Err(PyRuntimeError::new_err(format!("no solution: {status}"))),
    }
}

/// Constraint replay; returns the report as a dict.
#[pyfunction]
#[pyo3(signature = (scenario, schedule, tol=1e-6))]
fn validate_schedule<'py>(py: Python<'py>, scenario: &PyScenario, schedule: &PySchedule, tol: f64) -> PyResult<Bound<'py, PyAny>> {
    let rep = harness::validate_schedule(&scenario.inner, &schedule.inner, tol).map_err(err)?;
    to_py(py, &rep)
}

#[pyfunction]
#[pyo3(signature = (scenario, schedule, n=100_000, seed=2024))]
fn monte_carlo_reserve_check(py: Python<'_>, scenario: &PyScenario, schedule: &PySchedule, n: usize, seed: u64) -> PyResult<Vec<f64>> {
    let (s, sched) = (scenario.inner.clone(), schedule.inner.clone());
    py.allow_threads(|| harness::monte_carlo_reserve_check(&s, &sched, n, seed)).map_err(err)
}

#[pyfunction]
fn discretize_wind(v_in: f64, v_s: f64, v_out: f64, p_s: f64, shape_m: f64, scale_eps: f64, q: f64) -> PyResult<Vec<f64>> {
    let w = WindParams::new(v_in, v_s, v_out, p_s, shape_m, scale_eps).map_err(err)?;
    Ok(probseq::discretize_wind(&w, q).map_err(err)?.probs().to_vec())
}

#[pyfunction]
fn discretize_pv(lambda1: f64, lambda2: f64, p_max_pv: f64, q: f64) -> PyResult<Vec<f64>> {
    let p = PvParams::new(lambda1, lambda2, p_max_pv).map_err(err)?;
    Ok(probseq::discretize_pv(&p, q).map_err(err)?.probs().to_vec())
}

#[pyfunction]
fn convolve(a: Vec<f64>, b: Vec<f64>, q: f64) -> PyResult<Vec<f64>> {
    let a = ProbSeq::new(q, a).map_err(err)?;
    let b = ProbSeq::new(q, b).map_err(err)?;
    Ok(probseq::convolve(&a, &b).map_err(err)?.probs().to_vec())
}

/// Minimal reserve covering the shortfall below `expected` with probability `alpha`.
#[pyfunction]
fn quantile_reserve(probs: Vec<f64>, q: f64, alpha: f64, expected: f64) -> PyResult<f64> {
    let s = ProbSeq::new(q, probs).map_err(err)?;
    probseq::quantile_reserve(&s, alpha, expected).map_err(err)
}

fn building(params: (f64, f64, f64, f64, f64)) -> PyResult<BuildingParams> {
    BuildingParams::new(params.0, params.1, params.2, params.3, params.4).map_err(err)
}

/// `params` is `(k_transfer, surface_f, volume_v, c_air, rho_air)`.
#[pyfunction]
fn heating_demand(params: (f64, f64, f64, f64, f64), t_now: f64, t_prev: f64, t_outdoor: f64, dt: f64) -> PyResult<f64> {
    Ok(demand(&building(params)?, t_now, t_prev, t_outdoor, dt))
}

#[pyfunction]
fn indoor_temp_step(params: (f64, f64, f64, f64, f64), t_prev: f64, t_outdoor: f64, p_heat: f64, dt: f64) -> PyResult<f64> {
    Ok(temp_step(&building(params)?, t_prev, t_outdoor, p_heat, dt))
}

/// Same as the `ies-sched` command; returns the summary as a dict.
#[pyfunction]
#[pyo3(signature = (scenario, out, mode=None, alpha=None, chance=None, solver="embedded", q=None, mc_samples=100_000, seed=2024))]
#[allow(clippy::too_many_arguments)]
fn run<'py>(
    py: Python<'py>,
    scenario: PathBuf,
    out: PathBuf,
    mode: Option<&str>,
    alpha: Option<Vec<f64>>,
    chance: Option<&str>,
    solver: &str,
    q: Option<f64>,
    mc_samples: usize,
    seed: u64,
) -> PyResult<Bound<'py, PyAny>> {
    let cfg = RunConfig {
        scenario,
        modes: mode.map(str::parse::<ModeSelection>).transpose().map_err(err)?,
        alphas: alpha,
        chance: chance.map(cli::parse_chance).transpose().map_err(err)?,
        solver: solver.parse::<SolverChoice>().map_err(err)?,
        q,
        mc_samples,
        seed,
        out,
    };
    let summary = py.allow_threads(|| cli::run(&cfg)).map_err(err)?;
    to_py(py, &summary)
}

#[pymodule]
fn ies_sched(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyScenario>()?;
    m.add_class::<PySchedule>()?;
    m.add_function(wrap_pyfunction!(load_scenario, m)?)?;
    m.add_function(wrap_pyfunction!(solve, m)?)?;
    m.add_function(wrap_pyfunction!(validate_schedule, m)?)?;
    m.add_function(wrap_pyfunction!(monte_carlo_reserve_check, m)?)?;
    m.add_function(wrap_pyfunction!(discretize_wind, m)?)?;
    m.add_function(wrap_pyfunction!(discretize_pv, m)?)?;
    m.add_function(wrap_pyfunction!(convolve, m)?)?;
    m.add_function(wrap_pyfunction!(quantile_reserve, m)?)?;
    m.add_function(wrap_pyfunction!(heating_demand, m)?)?;
    m.add_function(wrap_pyfunction!(indoor_temp_step, m)?)?;
    m.add_function(wrap_pyfunction!(run, m)?)?;
    m.add("SCHEMA_VERSION", cli::SCHEMA_VERSION)?;
    Ok(())
}
