//! Time integration of the master equation and transport observables.
//!
//! The state is propagated with a fixed-step classical Runge–Kutta scheme
//! whose step divides the drive period, so averaging windows cover an exact
//! number of periods. Observables are evaluated after every step and
//! averaged with the trapezoid rule over each window.

use std::io::Write;

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;

use crate::error::{invalid, Error, Result};
use crate::hilbert::{
    build_space, build_space_both_biases, initial_state, CompositeSpace, DensityMatrix, Site,
    TruncationPolicy,
};
use crate::liouvillian::{Functional, Generator, Ladders};
use crate::params::{Bias, ModelParams};

const ZERO: C64 = C64 { re: 0.0, im: 0.0 };

/// Trace drift above which the state is renormalized.
pub const TRACE_DRIFT_TOL: f64 = 1e-12;
/// Eigenvalue below which a step is rejected.
pub const STEP_REJECT_EIGENVALUE: f64 = -1e-6;
/// Largest imaginary residue tolerated in the work rate.
pub const WORK_RESIDUE_TOL: f64 = 1e-10;
/// Currents below this magnitude are indistinguishable from zero.
pub const CURRENT_FLOOR: f64 = 1e-12;

/// Fixed-step integration protocol.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegratorConfig {
    pub dt: f64,
    pub t_final: f64,
    /// Requested averaging window; snapped to a whole number of drive periods.
    pub averaging_window: f64,
    /// Steps between recorded samples (and positivity checks).
    pub sample_stride: usize,
    /// Consecutive windows whose currents agree within this relative
    /// tolerance mark the run as converged.
    pub convergence_tol: f64,
    /// Stop as soon as the run has converged instead of running to `t_final`.
    pub early_stop: bool,
}

impl IntegratorConfig {
    /// Default protocol: dt = 2π/(20δω), evolve to 5000/J, average the last 100/J.
    pub fn for_params(params: &ModelParams) -> Self {
        let dt = params.drive_period() / 20.0;
        IntegratorConfig {
            dt,
            t_final: 5000.0 / params.j,
            averaging_window: 100.0 / params.j,
            sample_stride: ((1.0 / params.j) / dt).round().max(1.0) as usize,
            convergence_tol: 1e-2,
            early_stop: false,
        }
    }

    /// Shortened protocol evolving to 1000/J.
    pub fn fast(params: &ModelParams) -> Self {
        IntegratorConfig {
            t_final: 1000.0 / params.j,
            ..Self::for_params(params)
        }
    }

    pub fn with_early_stop(mut self, early_stop: bool) -> Self {
        self.early_stop = early_stop;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0) || !self.dt.is_finite() {
            return Err(invalid("dt", "must be > 0"));
        }
        if !(self.averaging_window > 0.0) {
            return Err(invalid("averaging_window", "must be > 0"));
        }
        if !(self.averaging_window < self.t_final) {
            return Err(invalid("averaging_window", "must be shorter than t_final"));
        }
        if self.sample_stride == 0 {
            return Err(invalid("sample_stride", "must be >= 1"));
        }
        if !(self.convergence_tol > 0.0) {
            return Err(invalid("convergence_tol", "must be > 0"));
        }
        Ok(())
    }

    /// Steps per averaging window, covering an integer number of drive periods.
    pub fn window_steps(&self, params: &ModelParams) -> usize {
        let period = params.drive_period();
        let periods = (self.averaging_window / period).round().max(1.0);
        ((periods * period) / self.dt).round().max(1.0) as usize
    }

    /// Number of windows needed to reach `t_final`.
    pub fn window_count(&self, params: &ModelParams) -> usize {
        let window = self.window_steps(params) as f64 * self.dt;
        ((self.t_final / window) - 1e-9).ceil().max(2.0) as usize
    }
}

/// One recorded sample of an evolution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sample {
    pub t: f64,
    pub current_left: f64,
    pub current_right: f64,
    pub work_rate: f64,
    pub work_over_domega: f64,
    pub p_dark: f64,
    pub trace_error: f64,
    pub min_eigenvalue: f64,
}

/// Time-ordered record of observables during an evolution.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ObservableSeries {
    pub samples: Vec<Sample>,
}

impl ObservableSeries {
    pub const HEADER: &'static str = "t,J_L,J_R,W_rate,W_over_domega,P_dark,trace_err,min_eig";

    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "{}", Self::HEADER)?;
        for s in &self.samples {
            let fields = [
                s.t,
                s.current_left,
                s.current_right,
                s.work_rate,
                s.work_over_domega,
                s.p_dark,
                s.trace_error,
                s.min_eigenvalue,
            ];
            let row: Vec<String> = fields.iter().map(|v| format_sig(*v)).collect();
            writeln!(out, "{}", row.join(","))?;
        }
        Ok(())
    }
}

/// Scientific notation with 12 significant digits.
pub fn format_sig(v: f64) -> String {
    format!("{v:.11e}")
}

/// Window-averaged steady-state observables.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SteadyStateResult {
    pub bias: Bias,
    /// Excitation current 𝒥_L into the system from the left bath.
    pub current_left: f64,
    /// Excitation current 𝒥_R into the system from the right bath.
    pub current_right: f64,
    /// Work rate 𝒲.
    pub work_rate: f64,
    /// 𝒲/δω, work in excitation quanta per unit time.
    pub work_over_domega: f64,
    pub p_dark: f64,
    pub populations: [f64; 3],
    pub converged: bool,
    /// Relative change of the window-averaged currents between the last two windows.
    pub fluctuation: f64,
    /// Time at which the evolution stopped.
    pub t_end: f64,
}

impl SteadyStateResult {
    /// Bias current: −𝒥_R in forward bias, 𝒥_L in reverse bias.
    pub fn bias_current(&self) -> f64 {
        match self.bias {
            Bias::Forward => -self.current_right,
            Bias::Reverse => self.current_left,
        }
    }
}

/// Precomputed functionals for the transport observables.
#[derive(Debug, Clone)]
pub struct Observables {
    gamma: f64,
    n_left: f64,
    n_right: f64,
    j_prime: f64,
    delta_omega: f64,
    left_number: Functional,
    left_anti: Functional,
    right_number: Functional,
    right_anti: Functional,
    hop_in: Functional,
    hop_out: Functional,
    qutrit: [Functional; 3],
}

/// Instantaneous observables of one state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Snapshot {
    pub current_left: f64,
    pub current_right: f64,
    pub work_rate: f64,
    pub populations: [f64; 3],
}

impl Snapshot {
    fn scaled_add(&mut self, other: &Snapshot, w: f64) {
        self.current_left += w * other.current_left;
        self.current_right += w * other.current_right;
        self.work_rate += w * other.work_rate;
        for (a, b) in self.populations.iter_mut().zip(other.populations) {
            *a += w * b;
        }
    }

    fn zero() -> Self {
        Snapshot {
            current_left: 0.0,
            current_right: 0.0,
            work_rate: 0.0,
            populations: [0.0; 3],
        }
    }
}

impl Observables {
    pub fn new(params: &ModelParams, generator: &Generator) -> Self {
        let space = generator.space();
        let a = Ladders::new(space);
        let (n_left, n_right) = params.occupations();
        let number = |x: &DMatrix<C64>| generator.functional(&(x.adjoint() * x));
        let anti = |x: &DMatrix<C64>| generator.functional(&(x * x.adjoint()));
        Observables {
            gamma: params.gamma,
            n_left,
            n_right,
            j_prime: params.j_prime,
            delta_omega: params.delta_omega,
            left_number: number(&a.left),
            left_anti: anti(&a.left),
            right_number: number(&a.right),
            right_anti: anti(&a.right),
            hop_in: generator.functional(&(&a.left * a.qutrit.adjoint())),
            hop_out: generator.functional(&(a.left.adjoint() * &a.qutrit)),
            qutrit: [0, 1, 2].map(|k| generator.functional(&space.qutrit_projector(k))),
        }
    }

    pub fn current(&self, x: &[C64], site: Site) -> f64 {
        let (n, number, anti) = match site {
            Site::Left => (self.n_left, &self.left_number, &self.left_anti),
            Site::Right => (self.n_right, &self.right_number, &self.right_anti),
            Site::Qutrit => panic!("the qutrit is not coupled to a bath"),
        };
        self.gamma * n * anti.eval(x).re - self.gamma * (n + 1.0) * number.eval(x).re
    }

    pub fn work_rate(&self, x: &[C64], t: f64) -> Result<f64> {
        work_from_expectations(
            self.hop_in.eval(x),
            self.hop_out.eval(x),
            t,
            self.j_prime,
            self.delta_omega,
        )
    }

    pub fn snapshot(&self, x: &[C64], t: f64) -> Result<Snapshot> {
        Ok(Snapshot {
            current_left: self.current(x, Site::Left),
            current_right: self.current(x, Site::Right),
            work_rate: self.work_rate(x, t)?,
            populations: [0, 1, 2].map(|k| self.qutrit[k].eval(x).re),
        })
    }
}

/// (J′δω/2i)(⟨a_L a_T†⟩ e^{−iδωt} − ⟨a_L† a_T⟩ e^{iδωt}).
fn work_from_expectations(
    hop_in: C64,
    hop_out: C64,
    t: f64,
    j_prime: f64,
    delta_omega: f64,
) -> Result<f64> {
    if j_prime == 0.0 {
        return Ok(0.0);
    }
    let phase = C64::from_polar(1.0, -delta_omega * t);
    let bracket = hop_in * phase - hop_out * phase.conj();
    let value = bracket * C64::new(0.0, -0.5 * j_prime * delta_omega);
    let scale = (j_prime * delta_omega).max(1.0);
    if value.im.abs() > WORK_RESIDUE_TOL * scale {
        return Err(Error::ComplexWork { residue: value.im });
    }
    Ok(value.re)
}

/// Excitation current Γn⟨a a†⟩ − Γ(n+1)⟨a†a⟩ exchanged with the bath on `site`.
pub fn excitation_current(
    rho: &DensityMatrix,
    space: &CompositeSpace,
    site: Site,
    params: &ModelParams,
) -> f64 {
    let (n_left, n_right) = params.occupations();
    let n = match site {
        Site::Left => n_left,
        Site::Right => n_right,
        Site::Qutrit => panic!("the qutrit is not coupled to a bath"),
    };
    let a = space.ladder(site);
    let number = rho.expectation(&(a.adjoint() * &a)).re;
    let anti = rho.expectation(&(&a * a.adjoint())).re;
    params.gamma * n * anti - params.gamma * (n + 1.0) * number
}

/// Work rate and its value in excitation quanta.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WorkRate {
    pub rate: f64,
    pub per_quantum: f64,
}

pub fn work_rate(
    rho: &DensityMatrix,
    space: &CompositeSpace,
    t: f64,
    params: &ModelParams,
) -> Result<WorkRate> {
    let a = Ladders::new(space);
    let hop_in = rho.expectation(&(&a.left * a.qutrit.adjoint()));
    let hop_out = rho.expectation(&(a.left.adjoint() * &a.qutrit));
    let rate = work_from_expectations(hop_in, hop_out, t, params.j_prime, params.delta_omega)?;
    Ok(WorkRate {
        rate,
        per_quantum: rate / params.delta_omega,
    })
}

/// Classical fourth-order Runge–Kutta over a linear right-hand side.
#[derive(Debug, Clone)]
pub struct Rk4 {
    k1: Vec<C64>,
    k2: Vec<C64>,
    k3: Vec<C64>,
    k4: Vec<C64>,
    probe: Vec<C64>,
}

impl Rk4 {
    pub fn new(len: usize) -> Self {
        Rk4 {
            k1: vec![ZERO; len],
            k2: vec![ZERO; len],
            k3: vec![ZERO; len],
            k4: vec![ZERO; len],
            probe: vec![ZERO; len],
        }
    }

    /// Advances `x` from `t` to `t + dt` under ẋ = f(t, x).
    pub fn advance<F>(&mut self, f: F, x: &mut [C64], t: f64, dt: f64)
    where
        F: Fn(f64, &[C64], &mut [C64]),
    {
        let half = 0.5 * dt;
        f(t, x, &mut self.k1);
        for ((p, &xi), &k) in self.probe.iter_mut().zip(x.iter()).zip(&self.k1) {
            *p = xi + k * half;
        }
        f(t + half, &self.probe, &mut self.k2);
        for ((p, &xi), &k) in self.probe.iter_mut().zip(x.iter()).zip(&self.k2) {
            *p = xi + k * half;
        }
        f(t + half, &self.probe, &mut self.k3);
        for ((p, &xi), &k) in self.probe.iter_mut().zip(x.iter()).zip(&self.k3) {
            *p = xi + k * dt;
        }
        f(t + dt, &self.probe, &mut self.k4);
        let sixth = dt / 6.0;
        for (i, xi) in x.iter_mut().enumerate() {
            *xi += (self.k1[i] + (self.k2[i] + self.k3[i]) * 2.0 + self.k4[i]) * sixth;
        }
    }
}

/// Restores unit trace when the drift exceeds [`TRACE_DRIFT_TOL`]; returns
/// the drift found.
fn fix_trace(generator: &Generator, diagonal: &[usize], x: &mut [C64]) -> f64 {
    let trace: f64 = diagonal.iter().map(|&p| x[p].re).sum();
    let drift = (trace - 1.0).abs();
    if drift > TRACE_DRIFT_TOL {
        log::debug!("renormalizing trace drift {drift:.3e}");
        x.iter_mut().for_each(|v| *v /= trace);
    }
    debug_assert_eq!(generator.len(), x.len());
    drift
}

/// One Runge–Kutta step of a density matrix.
pub fn step(rho: &DensityMatrix, t: f64, dt: f64, generator: &Generator) -> Result<DensityMatrix> {
    let mut x = generator.vectorize(rho.matrix())?;
    let mut rk = Rk4::new(x.len());
    rk.advance(|s, y, out| generator.apply(s, y, out), &mut x, t, dt);
    fix_trace(generator, &generator.diagonal_positions(), &mut x);
    let min_eigenvalue = generator.min_eigenvalue(&x);
    if min_eigenvalue < STEP_REJECT_EIGENVALUE {
        return Err(Error::StepRejected {
            t: t + dt,
            min_eigenvalue,
        });
    }
    Ok(generator.to_density(&x))
}

/// Outcome of a full evolution.
#[derive(Debug, Clone)]
pub struct Evolution {
    pub result: SteadyStateResult,
    pub series: ObservableSeries,
    pub state: DensityMatrix,
    /// Largest |tr ρ − 1| seen before renormalization.
    pub max_trace_drift: f64,
    /// Largest |ρ − ρ†| over the recorded samples.
    pub max_hermiticity_error: f64,
    /// Smallest eigenvalue over the recorded samples.
    pub min_eigenvalue: f64,
}

/// Evolves `initial` from `t_start` under the generator of `params` and
/// averages the observables over the last window.
pub fn evolve(
    params: &ModelParams,
    space: &CompositeSpace,
    config: &IntegratorConfig,
    initial: &DensityMatrix,
    t_start: f64,
) -> Result<Evolution> {
    params.validate()?;
    config.validate()?;
    let generator = Generator::with_seed(params, space, Some(initial.matrix()))?;
    let observables = Observables::new(params, &generator);
    let diagonal = generator.diagonal_positions();
    let mut x = generator.vectorize(initial.matrix())?;
    let mut rk = Rk4::new(x.len());

    let window_steps = config.window_steps(params);
    let windows = config.window_count(params);
    let dt = config.dt;
    let mut series = ObservableSeries::default();
    let mut max_trace_drift = 0.0f64;
    let mut max_herm = 0.0f64;
    let mut min_eig = f64::INFINITY;

    let mut record = |x: &[C64], t: f64, snap: &Snapshot, series: &mut ObservableSeries| {
        let trace_error = (generator.trace(x) - C64::new(1.0, 0.0)).norm();
        let min_eigenvalue = generator.min_eigenvalue(x);
        max_herm = max_herm.max(generator.hermiticity_error(x));
        min_eig = min_eig.min(min_eigenvalue);
        series.samples.push(Sample {
            t,
            current_left: snap.current_left,
            current_right: snap.current_right,
            work_rate: snap.work_rate,
            work_over_domega: snap.work_rate / params.delta_omega,
            p_dark: snap.populations[0],
            trace_error,
            min_eigenvalue,
        });
        if min_eigenvalue < STEP_REJECT_EIGENVALUE {
            return Err(Error::StepRejected { t, min_eigenvalue });
        }
        Ok(())
    };

    let mut t = t_start;
    let mut current = observables.snapshot(&x, t)?;
    record(&x, t, &current, &mut series)?;
    let mut previous_avg: Option<Snapshot> = None;
    let mut last_avg = current;
    let mut fluctuation = f64::INFINITY;
    let mut step_index = 0usize;

    for window in 0..windows {
        let mut acc = Snapshot::zero();
        acc.scaled_add(&current, 0.5);
        for s in 0..window_steps {
            rk.advance(|tt, y, out| generator.apply(tt, y, out), &mut x, t, dt);
            step_index += 1;
            t = t_start + step_index as f64 * dt;
            max_trace_drift = max_trace_drift.max(fix_trace(&generator, &diagonal, &mut x));
            current = observables.snapshot(&x, t)?;
            acc.scaled_add(&current, if s + 1 == window_steps { 0.5 } else { 1.0 });
            if step_index % config.sample_stride == 0 {
                record(&x, t, &current, &mut series)?;
            }
        }
        let mut avg = Snapshot::zero();
        avg.scaled_add(&acc, 1.0 / window_steps as f64);
        if let Some(prev) = previous_avg {
            let scale = avg
                .current_left
                .abs()
                .max(avg.current_right.abs())
                .max(CURRENT_FLOOR);
            fluctuation = (avg.current_left - prev.current_left)
                .abs()
                .max((avg.current_right - prev.current_right).abs())
                / scale;
        }
        previous_avg = Some(avg);
        last_avg = avg;
        if config.early_stop && window >= 1 && fluctuation < config.convergence_tol {
            break;
        }
    }
    if step_index % config.sample_stride != 0 {
        record(&x, t, &current, &mut series)?;
    }

    let result = SteadyStateResult {
        bias: params.bias,
        current_left: last_avg.current_left,
        current_right: last_avg.current_right,
        work_rate: last_avg.work_rate,
        work_over_domega: last_avg.work_rate / params.delta_omega,
        p_dark: last_avg.populations[0].clamp(0.0, 1.0),
        populations: last_avg.populations,
        converged: fluctuation < config.convergence_tol,
        fluctuation,
        t_end: t,
    };
    if !result.converged {
        log::warn!(
            "{} bias did not converge by t = {t}: fluctuation {fluctuation:.3e}",
            params.bias
        );
    }
    Ok(Evolution {
        result,
        series,
        state: generator.to_density(&x),
        max_trace_drift,
        max_hermiticity_error: max_herm,
        min_eigenvalue: min_eig,
    })
}

/// Evolves the default initial state of `params` in `space`.
pub fn evolve_in(
    params: &ModelParams,
    space: &CompositeSpace,
    config: &IntegratorConfig,
) -> Result<Evolution> {
    let rho = initial_state(params, space)?;
    evolve(params, space, config, &rho, 0.0)
}

/// Steady state of `params` with the default truncation.
pub fn evolve_to_steady(
    params: &ModelParams,
    config: &IntegratorConfig,
) -> Result<(SteadyStateResult, ObservableSeries)> {
    let space = build_space(params, &TruncationPolicy::default())?;
    let evolution = evolve_in(params, &space, config)?;
    Ok((evolution.result, evolution.series))
}

/// Diode quality −𝒥_f/𝒥_r.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Rectification {
    Finite(f64),
    /// |𝒥_r| below [`CURRENT_FLOOR`]: the diode is ideal within resolution.
    IdealWithinResolution,
}

impl Rectification {
    pub fn value(&self) -> f64 {
        match self {
            Rectification::Finite(r) => *r,
            Rectification::IdealWithinResolution => f64::INFINITY,
        }
    }
}

pub fn rectification(current_forward: f64, current_reverse: f64) -> Rectification {
    if current_reverse.abs() < CURRENT_FLOOR {
        Rectification::IdealWithinResolution
    } else {
        Rectification::Finite(-current_forward / current_reverse)
    }
}

/// Sample of the work rate during a bias flip.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WorkSample {
    /// Time since the flip.
    pub t: f64,
    pub work_over_domega: f64,
    /// ∫₀ᵗ 𝒲 dt′/δω.
    pub accumulated: f64,
}

/// Work done by the drive while the diode switches bias.
#[derive(Debug, Clone)]
pub struct TransitionWork {
    pub from: Bias,
    pub to: Bias,
    /// ∫₀^{t_turn} 𝒲(t) dt / δω.
    pub work: f64,
    /// P_ss,r(|0_T⟩) − P_ss,f(|0_T⟩).
    pub delta_p_dark: f64,
    pub steady_from: SteadyStateResult,
    pub steady_to: SteadyStateResult,
    pub series: Vec<WorkSample>,
}

impl TransitionWork {
    pub fn steady_states_converged(&self) -> bool {
        self.steady_from.converged && self.steady_to.converged
    }
}

/// Prepares the steady state of `from`, switches to the generator of `to`
/// and integrates the work over `t_turn`. Non-converged steady states are
/// reported through [`TransitionWork::steady_states_converged`].
pub fn transition_work_report(
    params: &ModelParams,
    from: Bias,
    to: Bias,
    t_turn: f64,
    config: &IntegratorConfig,
    policy: &TruncationPolicy,
) -> Result<TransitionWork> {
    if from == to {
        return Err(Error::DegenerateTransition);
    }
    let (space, prepared, target) = prepare_transition(params, from, t_turn, config, policy)?;
    flip(params, &space, &prepared, &target.result, to, t_turn, config)
}

/// Both flips, r→f then f→r, sharing one pair of steady-state evolutions.
pub fn transition_pair(
    params: &ModelParams,
    t_turn: f64,
    config: &IntegratorConfig,
    policy: &TruncationPolicy,
) -> Result<(TransitionWork, TransitionWork)> {
    let (space, reverse, forward) = prepare_transition(params, Bias::Reverse, t_turn, config, policy)?;
    let to_forward = flip(params, &space, &reverse, &forward.result, Bias::Forward, t_turn, config)?;
    let to_reverse = flip(params, &space, &forward, &reverse.result, Bias::Reverse, t_turn, config)?;
    Ok((to_forward, to_reverse))
}

/// Steady states of `from` and of the opposite bias in the space covering both.
fn prepare_transition(
    params: &ModelParams,
    from: Bias,
    t_turn: f64,
    config: &IntegratorConfig,
    policy: &TruncationPolicy,
) -> Result<(CompositeSpace, Evolution, Evolution)> {
    if !(t_turn > 0.0) || !t_turn.is_finite() {
        return Err(invalid("t_turn", "must be > 0"));
    }
    let space = build_space_both_biases(params, policy)?;
    let prepared = evolve_in(&params.with_bias(from), &space, config)?;
    let target = evolve_in(&params.with_bias(from.flipped()), &space, config)?;
    Ok((space, prepared, target))
}

fn flip(
    params: &ModelParams,
    space: &CompositeSpace,
    prepared: &Evolution,
    target: &SteadyStateResult,
    to: Bias,
    t_turn: f64,
    config: &IntegratorConfig,
) -> Result<TransitionWork> {
    let to_params = params.with_bias(to);
    let generator = Generator::with_seed(&to_params, space, Some(prepared.state.matrix()))?;
    let observables = Observables::new(&to_params, &generator);
    let diagonal = generator.diagonal_positions();
    let mut x = generator.vectorize(prepared.state.matrix())?;
    let mut rk = Rk4::new(x.len());

    // Keep the drive phase continuous across the flip.
    let t0 = prepared.result.t_end;
    let steps = (t_turn / config.dt).round().max(1.0) as usize;
    let dt = config.dt;
    let mut w_prev = observables.work_rate(&x, t0)? / params.delta_omega;
    let mut accumulated = 0.0;
    let mut series = vec![WorkSample {
        t: 0.0,
        work_over_domega: w_prev,
        accumulated,
    }];
    for k in 1..=steps {
        let t = t0 + (k - 1) as f64 * dt;
        rk.advance(|tt, y, out| generator.apply(tt, y, out), &mut x, t, dt);
        fix_trace(&generator, &diagonal, &mut x);
        let w = observables.work_rate(&x, t0 + k as f64 * dt)? / params.delta_omega;
        accumulated += 0.5 * dt * (w + w_prev);
        w_prev = w;
        if k % config.sample_stride == 0 || k == steps {
            series.push(WorkSample {
                t: k as f64 * dt,
                work_over_domega: w,
                accumulated,
            });
        }
    }
    let min_eigenvalue = generator.min_eigenvalue(&x);
    if min_eigenvalue < STEP_REJECT_EIGENVALUE {
        return Err(Error::StepRejected {
            t: t0 + steps as f64 * dt,
            min_eigenvalue,
        });
    }

    let from = to.flipped();
    let (reverse, forward) = match from {
        Bias::Reverse => (&prepared.result, target),
        Bias::Forward => (target, &prepared.result),
    };
    Ok(TransitionWork {
        from,
        to,
        work: accumulated,
        delta_p_dark: reverse.p_dark - forward.p_dark,
        steady_from: prepared.result,
        steady_to: *target,
        series,
    })
}

/// As [`transition_work_report`], failing when either steady state did not converge.
pub fn transition_work(
    params: &ModelParams,
    from: Bias,
    to: Bias,
    t_turn: f64,
    config: &IntegratorConfig,
    policy: &TruncationPolicy,
) -> Result<TransitionWork> {
    let report = transition_work_report(params, from, to, t_turn, config, policy)?;
    if !report.steady_from.converged {
        return Err(Error::NotConverged(from.name()));
    }
    if !report.steady_to.converged {
        return Err(Error::NotConverged(to.name()));
    }
    Ok(report)
}
