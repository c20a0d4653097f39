//! Python bindings: parameters, rate-model oracles, steady-state evolution,
//! bias-flip work and the scenario runner.

use std::path::PathBuf;

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use dark_diode::cli::{execute, RunOptions};
use dark_diode::dynamics::{evolve_in, transition_pair, SteadyStateResult, TransitionWork};
use dark_diode::hilbert::{build_space, m_max as truncation_level};
use dark_diode::{Bias, Error, IntegratorConfig, ModelParams, TruncationPolicy};

fn to_py(e: Error) -> PyErr {
    match e {
        Error::InvalidParameter { .. }
        | Error::Config { .. }
        | Error::UnsupportedRegime(_)
        | Error::UnknownScenario(_)
        | Error::DegenerateTransition => PyValueError::new_err(e.to_string()),
        other => PyRuntimeError::new_err(other.to_string()),
    }
}

/// Model parameters in units of the static hopping J.
#[pyclass(name = "Params", skip_from_py_object)]
#[derive(Clone)]
struct Params {
    #[pyo3(get, set)]
    delta_omega: f64,
    #[pyo3(get, set)]
    j: f64,
    #[pyo3(get, set)]
    j_prime: f64,
    #[pyo3(get, set)]
    gamma: f64,
    #[pyo3(get, set)]
    n_hot: f64,
    #[pyo3(get, set)]
    n_cold: f64,
    #[pyo3(get, set)]
    omega_amp: f64,
    #[pyo3(get, set)]
    gamma_dec: f64,
    #[pyo3(get, set)]
    omega: f64,
    /// "forward" or "reverse".
    #[pyo3(get, set)]
    bias: String,
}

impl Params {
    fn model(&self) -> PyResult<ModelParams> {
        let bias: Bias = self.bias.parse().map_err(PyValueError::new_err)?;
        let p = ModelParams {
            delta_omega: self.delta_omega,
            j: self.j,
            j_prime: self.j_prime,
            gamma: self.gamma,
            n_hot: self.n_hot,
            n_cold: self.n_cold,
            bias,
            omega_amp: self.omega_amp,
            gamma_dec: self.gamma_dec,
            omega: self.omega,
        };
        p.validate().map_err(to_py)?;
        Ok(p)
    }
}

#[pymethods]
impl Params {
    #[new]
    #[pyo3(signature = (*, delta_omega=300.0, j=1.0, j_prime=0.5, gamma=10.0, n_hot=0.5,
                        n_cold=0.0, omega_amp=0.0, gamma_dec=0.0, omega=1.0e4, bias="forward"))]
    #[allow(clippy::too_many_arguments)]
    fn new(
        delta_omega: f64,
        j: f64,
        j_prime: f64,
        gamma: f64,
        n_hot: f64,
        n_cold: f64,
        omega_amp: f64,
        gamma_dec: f64,
        omega: f64,
        bias: &str,
    ) -> PyResult<Self> {
        let p = Params {
            delta_omega,
            j,
            j_prime,
            gamma,
            n_hot,
            n_cold,
            omega_amp,
            gamma_dec,
            omega,
            bias: bias.to_string(),
        };
        p.model()?;
        Ok(p)
    }

    /// Copy with the given bias.
    fn with_bias(&self, bias: &str) -> PyResult<Self> {
        let mut p = self.clone();
        p.bias = bias.to_string();
        p.model()?;
        Ok(p)
    }

    fn __repr__(&self) -> String {
        format!(
            "Params(delta_omega={}, j={}, j_prime={}, gamma={}, n_hot={}, n_cold={}, \
             omega_amp={}, gamma_dec={}, omega={}, bias='{}')",
            self.delta_omega,
            self.j,
            self.j_prime,
            self.gamma,
            self.n_hot,
            self.n_cold,
            self.omega_amp,
            self.gamma_dec,
            self.omega,
            self.bias
        )
    }
}

fn steady_dict<'py>(py: Python<'py>, r: &SteadyStateResult) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    d.set_item("bias", r.bias.name())?;
    d.set_item("current_left", r.current_left)?;
    d.set_item("current_right", r.current_right)?;
    d.set_item("bias_current", r.bias_current())?;
    d.set_item("work_rate", r.work_rate)?;
    d.set_item("work_over_domega", r.work_over_domega)?;
    d.set_item("p_dark", r.p_dark)?;
    d.set_item("populations", r.populations.to_vec())?;
    d.set_item("converged", r.converged)?;
    d.set_item("fluctuation", r.fluctuation)?;
    d.set_item("t_end", r.t_end)?;
    Ok(d)
}

fn transition_dict<'py>(py: Python<'py>, w: &TransitionWork) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    d.set_item("from", w.from.name())?;
    d.set_item("to", w.to.name())?;
    d.set_item("work", w.work)?;
    d.set_item("delta_p_dark", w.delta_p_dark)?;
    d.set_item("converged", w.steady_states_converged())?;
    d.set_item("t", w.series.iter().map(|s| s.t).collect::<Vec<_>>())?;
    d.set_item(
        "work_over_domega",
        w.series.iter().map(|s| s.work_over_domega).collect::<Vec<_>>(),
    )?;
    d.set_item("accumulated", w.series.iter().map(|s| s.accumulated).collect::<Vec<_>>())?;
    Ok(d)
}

fn integrator(p: &ModelParams, t_final: Option<f64>, early_stop: bool) -> IntegratorConfig {
    let mut config = IntegratorConfig::for_params(p).with_early_stop(early_stop);
    if let Some(t) = t_final {
        config.t_final = t;
    }
    config
}

/// Closed-form Markovian transport; requires n_cold = 0 and j_prime > 0.
#[pyfunction]
fn analytic_transport<'py>(py: Python<'py>, params: PyRef<'_, Params>) -> PyResult<Bound<'py, PyDict>> {
    let a = dark_diode::analytic_transport(&params.model()?).map_err(to_py)?;
    let d = PyDict::new(py);
    d.set_item("current_forward", a.current_forward)?;
    d.set_item("current_reverse", a.current_reverse)?;
    d.set_item("work_forward", a.work_forward)?;
    d.set_item("work_reverse", a.work_reverse)?;
    d.set_item("rectification", a.rectification)?;
    d.set_item("populations_forward", a.populations_forward.to_vec())?;
    d.set_item("populations_reverse", a.populations_reverse.to_vec())?;
    Ok(d)
}

/// Stationary qutrit populations (dark, ground, excited) of the rate model.
#[pyfunction]
fn markov_steady_state(params: PyRef<'_, Params>) -> PyResult<Vec<f64>> {
    Ok(dark_diode::markov_steady_state(&params.model()?).map_err(to_py)?.to_vec())
}

/// Evolves to the periodic steady state for the bias stored in `params`.
#[pyfunction]
#[pyo3(signature = (params, *, t_final=None, early_stop=false, threshold=1e-3, floor=4))]
fn steady_state<'py>(
    py: Python<'py>,
    params: PyRef<'_, Params>,
    t_final: Option<f64>,
    early_stop: bool,
    threshold: f64,
    floor: usize,
) -> PyResult<Bound<'py, PyDict>> {
    let p = params.model()?;
    let policy = TruncationPolicy::new(threshold, floor).map_err(to_py)?;
    let config = integrator(&p, t_final, early_stop);
    let result = py
        .detach(|| {
            let space = build_space(&p, &policy)?;
            evolve_in(&p, &space, &config)
        })
        .map_err(to_py)?;
    steady_dict(py, &result.result)
}

/// Work done while flipping reverse→forward and forward→reverse.
#[pyfunction]
#[pyo3(signature = (params, *, t_turn=500.0, t_final=None, early_stop=false))]
fn transition<'py>(
    py: Python<'py>,
    params: PyRef<'_, Params>,
    t_turn: f64,
    t_final: Option<f64>,
    early_stop: bool,
) -> PyResult<(Bound<'py, PyDict>, Bound<'py, PyDict>)> {
    let p = params.model()?;
    let config = integrator(&p, t_final, early_stop);
    let (rf, fr) = py
        .detach(|| transition_pair(&p, t_turn, &config, &TruncationPolicy::default()))
        .map_err(to_py)?;
    Ok((transition_dict(py, &rf)?, transition_dict(py, &fr)?))
}

/// −J_f/J_r, or infinity when the reverse current is unresolvably small.
#[pyfunction]
fn rectification(current_forward: f64, current_reverse: f64) -> f64 {
    dark_diode::rectification(current_forward, current_reverse).value()
}

/// Highest oscillator level kept for mean occupation `n`.
#[pyfunction]
#[pyo3(signature = (n, threshold=1e-3, floor=4))]
fn m_max(n: f64, threshold: f64, floor: usize) -> PyResult<usize> {
    let policy = TruncationPolicy::new(threshold, floor).map_err(to_py)?;
    truncation_level(n, &policy).map_err(to_py)
}

/// Runs a named scenario exactly like `rectifier run`.
#[pyfunction]
#[pyo3(signature = (name, *, config=None, out=None, workers=None, fast=false))]
fn run_scenario<'py>(
    py: Python<'py>,
    name: &str,
    config: Option<PathBuf>,
    out: Option<PathBuf>,
    workers: Option<usize>,
    fast: bool,
) -> PyResult<Bound<'py, PyDict>> {
    let options = RunOptions {
        config,
        out,
        workers,
        fast,
    };
    let report = py.detach(|| execute(name, &options)).map_err(to_py)?;
    let d = PyDict::new(py);
    d.set_item("files", report.files)?;
    d.set_item("points", report.points)?;
    d.set_item("non_converged", report.non_converged)?;
    Ok(d)
}

#[pymodule]
fn dark_diode_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Params>()?;
    m.add_function(wrap_pyfunction!(analytic_transport, m)?)?;
    m.add_function(wrap_pyfunction!(markov_steady_state, m)?)?;
    m.add_function(wrap_pyfunction!(steady_state, m)?)?;
    m.add_function(wrap_pyfunction!(transition, m)?)?;
    m.add_function(wrap_pyfunction!(rectification, m)?)?;
    m.add_function(wrap_pyfunction!(m_max, m)?)?;
    m.add_function(wrap_pyfunction!(run_scenario, m)?)?;
    Ok(())
}
