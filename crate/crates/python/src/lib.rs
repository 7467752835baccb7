//! Python bindings: thermal-law calculus, scenario runs and studies.

use pyo3::exceptions::{PyOSError, PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pythonize::pythonize;

use thermocontact::config::{parse_config, preset_with_overrides, to_toml, Preset, ScenarioSpec};
use thermocontact::diagnostics::EnergyReport;
use thermocontact::monotone::{self, RegParams};
use thermocontact::output::RunSummary;
use thermocontact::stepper::{Model, State, StepRecord, Trajectory};
use thermocontact::study;
use thermocontact::Error;

fn to_py(e: Error) -> PyErr {
    let msg = format!("{}: {}", e.kind(), e);
    match e.exit_code() {
        2 => PyValueError::new_err(msg),
        4 => PyOSError::new_err(msg),
        _ => PyRuntimeError::new_err(msg),
    }
}

fn reg(mu: f64) -> PyResult<RegParams> {
    RegParams::new(mu).map_err(to_py)
}

/// Thermal law `ℓ` with inverse `γ`.
#[pyclass(frozen, module = "thermocontact")]
struct ThermalLaw {
    inner: monotone::ThermalLaw,
}

#[pymethods]
impl ThermalLaw {
    #[staticmethod]
    fn logarithmic() -> Self {
        Self {
            inner: monotone::ThermalLaw::logarithmic(),
        }
    }

    #[staticmethod]
    fn power_law(exponent: f64) -> PyResult<Self> {
        Ok(Self {
            inner: monotone::ThermalLaw::power_law(exponent).map_err(to_py)?,
        })
    }

    #[staticmethod]
    fn linear() -> Self {
        Self {
            inner: monotone::ThermalLaw::linear(),
        }
    }

    #[getter]
    fn name(&self) -> &'static str {
        self.inner.name()
    }

    fn ell(&self, x: f64) -> PyResult<f64> {
        self.inner.ell(x).map_err(to_py)
    }

    fn gamma(&self, y: f64) -> f64 {
        self.inner.gamma(y)
    }

    fn jstar(&self, y: f64) -> f64 {
        self.inner.jstar(y)
    }

    fn resolvent(&self, mu: f64, w: f64) -> PyResult<f64> {
        monotone::resolvent(&self.inner, &reg(mu)?, w).map_err(to_py)
    }

    fn yosida(&self, mu: f64, w: f64) -> PyResult<f64> {
        monotone::yosida_apply(&self.inner, &reg(mu)?, w).map_err(to_py)
    }

    fn ell_reg(&self, mu: f64, u: f64) -> PyResult<f64> {
        monotone::ell_reg_apply(&self.inner, &reg(mu)?, u).map_err(to_py)
    }

    fn ell_reg_inverse(&self, mu: f64, w: f64) -> PyResult<f64> {
        monotone::ell_reg_inverse(&self.inner, &reg(mu)?, w).map_err(to_py)
    }

    fn jstar_moreau(&self, mu: f64, w: f64) -> PyResult<f64> {
        monotone::jstar_moreau(&self.inner, &reg(mu)?, w).map_err(to_py)
    }

    fn coercivity_slack(&self, mu: f64, u: f64) -> PyResult<f64> {
        monotone::coercivity_bound(&self.inner, &reg(mu)?, u).map_err(to_py)
    }

    fn __repr__(&self) -> String {
        format!("ThermalLaw.{}", self.inner.name())
    }
}

fn build_spec(preset: &str, overrides: Vec<String>, config: Option<&str>) -> PyResult<ScenarioSpec> {
    match config {
        Some(text) => parse_config(text, &overrides),
        None => preset_with_overrides(Preset::parse(preset).map_err(to_py)?, &overrides),
    }
    .map_err(to_py)
}

/// A scenario that can be advanced step by step.
///
/// `overrides` are dotted `key=value` strings as accepted by the command line;
/// `config` is the text of a TOML configuration and takes precedence over `preset`.
#[pyclass(module = "thermocontact")]
struct Simulation {
    model: Model,
    state: State,
    steps_taken: usize,
    reports: Vec<EnergyReport>,
    records: Vec<StepRecord>,
}

#[pymethods]
impl Simulation {
    #[new]
    #[pyo3(signature = (preset = "reference", overrides = Vec::new(), config = None))]
    fn new(preset: &str, overrides: Vec<String>, config: Option<&str>) -> PyResult<Self> {
        let spec = build_spec(preset, overrides, config)?;
        let model = Model::new(spec.build().map_err(to_py)?).map_err(to_py)?;
        let state = model.initial_state().map_err(to_py)?;
        let first = thermocontact::diagnostics::initial_report(&model, &state).map_err(to_py)?;
        Ok(Self {
            model,
            state,
            steps_taken: 0,
            reports: vec![first],
            records: Vec::new(),
        })
    }

    /// Advances `n` steps and returns their reports.
    #[pyo3(signature = (n = 1))]
    fn step<'py>(&mut self, py: Python<'py>, n: usize) -> PyResult<Bound<'py, PyAny>> {
        let start = self.reports.len();
        for _ in 0..n {
            let (new, record) = self.model.step(&self.state).map_err(to_py)?;
            self.steps_taken += 1;
            let report =
                thermocontact::diagnostics::step_report(&self.model, &self.state, &new, self.steps_taken, &record)
                    .map_err(to_py)?;
            self.reports.push(report);
            self.records.push(record);
            self.state = new;
        }
        Ok(pythonize(py, &self.reports[start..])?)
    }

    /// Runs the remaining steps up to `t_end`; returns every report so far.
    fn run<'py>(&mut self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        let remaining = self.model.solver().num_steps().saturating_sub(self.steps_taken);
        self.step(py, remaining)?;
        self.reports(py)
    }

    fn reports<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        Ok(pythonize(py, &self.reports)?)
    }

    /// One-line summary of the reports so far.
    fn summary(&self) -> String {
        let traj = Trajectory {
            states: Vec::new(),
            records: self.records.clone(),
            reports: self.reports.clone(),
        };
        RunSummary::new(&self.model.scenario.name, &traj).line()
    }

    #[getter]
    fn time(&self) -> f64 {
        self.state.time
    }

    #[getter]
    fn steps_taken(&self) -> usize {
        self.steps_taken
    }

    #[getter]
    fn theta(&self) -> Vec<f64> {
        self.state.theta.clone()
    }

    #[getter]
    fn w(&self) -> Vec<f64> {
        self.state.w.clone()
    }

    #[getter]
    fn theta_s(&self) -> Vec<f64> {
        self.state.theta_s.clone()
    }

    #[getter]
    fn z(&self) -> Vec<f64> {
        self.state.z.clone()
    }

    #[getter]
    fn chi(&self) -> Vec<f64> {
        self.state.chi.clone()
    }

    /// Displacement as `(ux, uy)` pairs per vertex.
    #[getter]
    fn u(&self) -> Vec<(f64, f64)> {
        self.state.u.chunks(2).map(|c| (c[0], c[1])).collect()
    }

    #[getter]
    fn vertices(&self) -> Vec<(f64, f64)> {
        self.model.mesh().vertices().iter().map(|p| (p[0], p[1])).collect()
    }

    #[getter]
    fn cells(&self) -> Vec<(usize, usize, usize)> {
        self.model.mesh().cells().iter().map(|c| (c[0], c[1], c[2])).collect()
    }

    /// Bulk vertex of each contact node.
    #[getter]
    fn contact_vertices(&self) -> Vec<usize> {
        self.model.mesh().contact_nodes().to_vec()
    }

    fn lyapunov(&self) -> PyResult<f64> {
        thermocontact::diagnostics::lyapunov(&self.model, &self.state).map_err(to_py)
    }
}

/// Runs a study; the configuration must contain a `[study]` section (or
/// `study.*` overrides). Returns the study table as a dict.
#[pyfunction]
#[pyo3(signature = (preset = "reference", overrides = Vec::new(), config = None))]
fn run_study<'py>(
    py: Python<'py>,
    preset: &str,
    overrides: Vec<String>,
    config: Option<&str>,
) -> PyResult<Bound<'py, PyAny>> {
    let spec = build_spec(preset, overrides, config)?;
    let result = py.detach(|| study::run_study(&spec)).map_err(to_py)?;
    Ok(pythonize(py, &result)?)
}

/// Fully resolved configuration as TOML text.
#[pyfunction]
#[pyo3(signature = (preset = "reference", overrides = Vec::new()))]
fn resolved_config(preset: &str, overrides: Vec<String>) -> PyResult<String> {
    let spec = build_spec(preset, overrides, None)?;
    to_toml(&spec).map_err(to_py)
}

#[pymodule]
#[pyo3(name = "thermocontact")]
fn thermocontact_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<ThermalLaw>()?;
    m.add_class::<Simulation>()?;
    m.add_function(wrap_pyfunction!(run_study, m)?)?;
    m.add_function(wrap_pyfunction!(resolved_config, m)?)?;
    Ok(())
}
