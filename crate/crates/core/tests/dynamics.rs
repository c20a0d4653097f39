use approx::assert_relative_eq;
use nalgebra::DMatrix;
use num_complex::Complex64 as C64;

use dark_diode::dynamics::{
    evolve, evolve_in, excitation_current, step, transition_pair, transition_work, work_rate,
    IntegratorConfig, Rk4,
};
use dark_diode::hilbert::{build_space, initial_state, CompositeSpace, DensityMatrix, Site};
use dark_diode::liouvillian::{liouvillian_apply, Generator};
use dark_diode::{Bias, Error, ModelParams, TruncationPolicy};

fn small() -> ModelParams {
    ModelParams {
        delta_omega: 30.0,
        gamma: 3.0,
        ..ModelParams::default()
    }
}

fn short(p: &ModelParams, t_final: f64) -> IntegratorConfig {
    IntegratorConfig {
        t_final,
        averaging_window: 10.0,
        ..IntegratorConfig::for_params(p)
    }
}

/// Dense RK4 on the full matrix, the reference for the compiled generator.
fn dense_rk4(rho: &DMatrix<C64>, p: &ModelParams, space: &CompositeSpace, t: f64, dt: f64) -> DMatrix<C64> {
    let f = |t: f64, r: &DMatrix<C64>| liouvillian_apply(r, p, space, t);
    let k1 = f(t, rho);
    let k2 = f(t + dt / 2.0, &(rho + &k1 * C64::from(dt / 2.0)));
    let k3 = f(t + dt / 2.0, &(rho + &k2 * C64::from(dt / 2.0)));
    let k4 = f(t + dt, &(rho + &k3 * C64::from(dt)));
    rho + (k1 + (k2 + k3) * C64::from(2.0) + k4) * C64::from(dt / 6.0)
}

#[test]
fn compiled_steps_match_dense_reference() {
    let p = ModelParams {
        omega_amp: 0.7,
        gamma_dec: 0.05,
        n_cold: 0.1,
        ..small()
    };
    let space = CompositeSpace::new(3, 3).unwrap();
    let gen = Generator::new(&p, &space).unwrap();
    let dt = p.drive_period() / 20.0;
    let mut dense = initial_state(&p, &space).unwrap();
    let mut compiled = dense.clone();
    for k in 0..60 {
        let t = k as f64 * dt;
        dense = DensityMatrix::new_unchecked(dense_rk4(dense.matrix(), &p, &space, t, dt));
        compiled = step(&compiled, t, dt, &gen).unwrap();
    }
    let diff = (dense.matrix() - compiled.matrix()).camax();
    assert!(diff < 1e-12, "{diff}");
    assert!(dense.matrix()[(1, 0)].norm() > 1e-6, "coherences should build up");
}

#[test]
fn oscillator_frequency_does_not_enter_the_dynamics() {
    let a = small();
    let b = ModelParams { omega: 2.5e3, ..a };
    let space = build_space(&a, &TruncationPolicy::default()).unwrap();
    let ra = evolve_in(&a, &space, &short(&a, 30.0)).unwrap().result;
    let rb = evolve_in(&b, &space, &short(&b, 30.0)).unwrap().result;
    assert_eq!(ra, rb);
}

#[test]
fn evolution_preserves_state_invariants() {
    let p = small().with_bias(Bias::Reverse);
    let space = build_space(&p, &TruncationPolicy::default()).unwrap();
    let e = evolve_in(&p, &space, &short(&p, 40.0)).unwrap();
    e.state.validate().unwrap();
    assert!(e.min_eigenvalue > -1e-8);
    assert!(e.max_hermiticity_error < 1e-12);
    for s in &e.series.samples {
        assert!(s.trace_error < 1e-9);
    }
    // Dense observables agree with the compiled functionals at the final time.
    let last = e.series.samples.last().unwrap();
    let jl = excitation_current(&e.state, &space, Site::Left, &p);
    assert_relative_eq!(jl, last.current_left, max_relative = 1e-9);
    let w = work_rate(&e.state, &space, last.t, &p).unwrap();
    assert_relative_eq!(w.rate, last.work_rate, epsilon = 1e-12);
}

#[test]
fn steady_currents_balance_and_rectify() {
    let p = small();
    let policy = TruncationPolicy::default();
    let mut currents = Vec::new();
    for bias in [Bias::Forward, Bias::Reverse] {
        let q = p.with_bias(bias);
        let space = build_space(&q, &policy).unwrap();
        let config = IntegratorConfig {
            early_stop: true,
            ..short(&q, 300.0)
        };
        let r = evolve_in(&q, &space, &config).unwrap().result;
        assert!(r.converged);
        let scale = r.current_left.abs().max(r.current_right.abs());
        assert!((r.current_left + r.current_right).abs() < 1e-2 * scale);
        currents.push(r.bias_current());
    }
    assert!(currents[0] > 0.0 && currents[1] < 0.0);
    assert!(-currents[0] / currents[1] > 2.0);
}

#[test]
fn continuing_from_a_state_matches_a_single_run() {
    let p = small();
    let space = build_space(&p, &TruncationPolicy::default()).unwrap();
    let rho = initial_state(&p, &space).unwrap();
    let whole = evolve(&p, &space, &short(&p, 40.0), &rho, 0.0).unwrap();
    let first = evolve(&p, &space, &short(&p, 20.0), &rho, 0.0).unwrap();
    let second = evolve(&p, &space, &short(&p, 20.0), &first.state, first.result.t_end).unwrap();
    let diff = (whole.state.matrix() - second.state.matrix()).camax();
    assert!(diff < 1e-12, "{diff}");
}

#[test]
fn rk4_is_fourth_order() {
    // ẋ = i x has the exact solution e^{it}.
    let error = |steps: usize| {
        let mut x = vec![C64::new(1.0, 0.0)];
        let mut rk = Rk4::new(1);
        let dt = 1.0 / steps as f64;
        for k in 0..steps {
            rk.advance(|_, y, out| out[0] = C64::i() * y[0], &mut x, k as f64 * dt, dt);
        }
        (x[0] - C64::from_polar(1.0, 1.0)).norm()
    };
    let ratio = error(10) / error(20);
    assert!((ratio - 16.0).abs() < 1.0, "{ratio}");
}

#[test]
fn bias_flip_work_is_finite_and_reported_both_ways() {
    let p = small();
    let config = IntegratorConfig {
        early_stop: true,
        ..short(&p, 200.0)
    };
    let policy = TruncationPolicy::default();
    let (rf, fr) = transition_pair(&p, 20.0, &config, &policy).unwrap();
    assert_eq!((rf.from, rf.to), (Bias::Reverse, Bias::Forward));
    assert_eq!((fr.from, fr.to), (Bias::Forward, Bias::Reverse));
    assert!(rf.work.is_finite() && fr.work.is_finite());
    assert_eq!(rf.delta_p_dark, fr.delta_p_dark);
    assert!(rf.delta_p_dark > 0.0);
    let last = rf.series.last().unwrap();
    // The flip lasts a whole number of steps, ending within half a step of t_turn.
    assert!((last.t - 20.0).abs() <= config.dt / 2.0);
    assert_eq!(last.accumulated, rf.work);

    let err = transition_work(&p, Bias::Reverse, Bias::Reverse, 20.0, &config, &policy);
    assert_eq!(err.unwrap_err(), Error::DegenerateTransition);
}
