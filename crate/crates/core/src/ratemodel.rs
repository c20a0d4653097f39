//! Classical three-state rate model of the qutrit.
//!
//! Level 0 is the dark state |D⟩ = |0_T⟩, level 1 is |g⟩ = |1_T⟩ and level 2
//! is |e⟩ = |2_T⟩. In the Markovian regime (ω, δω ≫ Γ ≫ J, J′) the two
//! oscillators act as Lorentzian baths and the qutrit populations obey
//! ∂ₜP = W P; the closed forms below serve as oracles for the full
//! Lindblad simulation.

use nalgebra::Matrix3;

use crate::error::{invalid, Error, Result};
use crate::params::{temperature_over_omega, Bias, ModelParams};

pub const DARK: usize = 0;
pub const GROUND: usize = 1;
pub const EXCITED: usize = 2;

/// Transition rates Γ_{a→b} between the three qutrit levels.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct RateSet {
    rates: [[f64; 3]; 3],
}

impl RateSet {
    /// Builds a rate set from `rates[from][to]`; diagonal entries are ignored.
    pub fn new(mut rates: [[f64; 3]; 3]) -> Result<Self> {
        for (a, row) in rates.iter_mut().enumerate() {
            row[a] = 0.0;
            for &r in row.iter() {
                if !(r >= 0.0) || !r.is_finite() {
                    return Err(invalid("rate", format!("rates must be finite and >= 0, got {r}")));
                }
            }
        }
        Ok(RateSet { rates })
    }

    /// Γ_{from→to}.
    pub fn get(&self, from: usize, to: usize) -> f64 {
        self.rates[from][to]
    }

    pub fn scaled(&self, factor: f64) -> RateSet {
        let mut rates = self.rates;
        rates.iter_mut().flatten().for_each(|r| *r *= factor);
        RateSet { rates }
    }
}

/// Rate matrix with W[b][a] = Γ_{a→b} and columns summing to zero.
pub fn rate_matrix(rates: &RateSet) -> Matrix3<f64> {
    let mut w = Matrix3::zeros();
    for a in 0..3 {
        let mut out = 0.0;
        for b in 0..3 {
            if a != b {
                w[(b, a)] = rates.get(a, b);
                out += rates.get(a, b);
            }
        }
        w[(a, a)] = -out;
    }
    w
}

/// Stationary populations of a rate matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StationaryDistribution {
    pub populations: [f64; 3],
    /// Set when several closed classes exist, i.e. the null space of W is
    /// more than one-dimensional. `populations` is then supported on the
    /// largest closed class (lowest level index breaks ties).
    pub degenerate: bool,
}

/// Normalized null vector of `w`.
///
/// Each closed communicating class carries its own stationary vector, given
/// by the matrix-tree theorem (sum over spanning in-trees rooted at each
/// state), which keeps every entry non-negative by construction.
pub fn rate_steady_state(w: &Matrix3<f64>) -> Result<StationaryDistribution> {
    let scale = w.amax().max(f64::MIN_POSITIVE);
    for a in 0..3 {
        let column_sum: f64 = w.column(a).iter().sum();
        if column_sum.abs() > 1e-12 * scale {
            return Err(invalid("W", format!("column {a} sums to {column_sum:e}")));
        }
        for b in 0..3 {
            if a != b && w[(b, a)] < 0.0 {
                return Err(invalid("W", format!("negative rate W[{b}][{a}]")));
            }
        }
    }
    let rate = |from: usize, to: usize| w[(to, from)];

    let mut reach = [[false; 3]; 3];
    for a in 0..3 {
        for b in 0..3 {
            reach[a][b] = a == b || rate(a, b) > 0.0;
        }
    }
    for k in 0..3 {
        for a in 0..3 {
            for b in 0..3 {
                reach[a][b] |= reach[a][k] && reach[k][b];
            }
        }
    }

    // Closed class of `a`: everything reachable from `a` reaches back.
    let mut closed: Vec<Vec<usize>> = Vec::new();
    for a in 0..3 {
        let class: Vec<usize> = (0..3).filter(|&b| reach[a][b]).collect();
        let is_closed = class.iter().all(|&b| reach[b][a]);
        if is_closed && !closed.contains(&class) {
            closed.push(class);
        }
    }
    let degenerate = closed.len() > 1;
    let class = closed
        .iter()
        .max_by(|x, y| x.len().cmp(&y.len()).then(y[0].cmp(&x[0])))
        .expect("a finite chain has at least one closed class");

    let mut weights = [0.0; 3];
    match class.as_slice() {
        [only] => weights[*only] = 1.0,
        [a, b] => {
            weights[*a] = rate(*b, *a);
            weights[*b] = rate(*a, *b);
        }
        _ => {
            for root in 0..3 {
                let (j, k) = ((root + 1) % 3, (root + 2) % 3);
                weights[root] = rate(j, root) * rate(k, root)
                    + rate(j, k) * rate(k, root)
                    + rate(k, j) * rate(j, root);
            }
        }
    }
    let total: f64 = weights.iter().sum();
    let populations = weights.map(|x| x / total);
    Ok(StationaryDistribution {
        populations,
        degenerate,
    })
}

/// Lorentzian denominator δω² + Γ²/2 used by the Markovian rates.
fn detuned_denominator(params: &ModelParams) -> f64 {
    params.delta_omega.powi(2) + params.gamma.powi(2) / 2.0
}

/// Markovian transition rates for the current bias.
pub fn markov_rates(params: &ModelParams) -> Result<RateSet> {
    params.validate()?;
    let (n_l, n_r) = params.occupations();
    let ModelParams {
        j, j_prime, gamma, ..
    } = *params;
    let leak = j * j * gamma / detuned_denominator(params);
    let resonant = 8.0 * j * j / gamma;

    let mut rates = [[0.0; 3]; 3];
    rates[GROUND][DARK] = (1.0 + n_l) * j_prime * j_prime / gamma + (1.0 + n_r) * leak;
    rates[DARK][GROUND] = n_l * j_prime * j_prime / gamma + n_r * leak;
    rates[EXCITED][GROUND] = (1.0 + n_l) * resonant + (1.0 + n_r) * resonant;
    rates[GROUND][EXCITED] = n_l * resonant + n_r * resonant;
    RateSet::new(rates)
}

/// Closed-form stationary qutrit populations of the Markovian model, using
/// the δω ≫ Γ simplification Γ²/δω² for the leakage terms.
pub fn markov_steady_state(params: &ModelParams) -> Result<[f64; 3]> {
    params.validate()?;
    let (n_l, n_r) = params.occupations();
    let leak = params.j.powi(2) * params.gamma.powi(2) / params.delta_omega.powi(2);
    let drive = params.j_prime.powi(2);
    let up = n_l * drive + n_r * leak;
    let down = (1.0 + n_l) * drive + (1.0 + n_r) * leak;
    let v = [
        (2.0 + n_r + n_l) * down,
        (2.0 + n_r + n_l) * up,
        (n_r + n_l) * up,
    ];
    let total: f64 = v.iter().sum();
    Ok(v.map(|x| x / total))
}

/// Analytic transport in the Markovian regime with a zero-temperature cold bath.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateModelResult {
    /// Forward-bias stationary populations.
    pub populations_forward: [f64; 3],
    /// Reverse-bias stationary populations.
    pub populations_reverse: [f64; 3],
    /// Forward-bias excitation current 𝒥_f = −𝒥_R.
    pub current_forward: f64,
    /// Reverse-bias excitation current 𝒥_r = 𝒥_L.
    pub current_reverse: f64,
    /// Forward-bias work in excitation units, 𝒲_f/δω.
    pub work_forward: f64,
    /// Reverse-bias work in excitation units, 𝒲_r/δω.
    pub work_reverse: f64,
    pub rectification: f64,
}

pub fn analytic_transport(params: &ModelParams) -> Result<RateModelResult> {
    params.validate()?;
    if params.n_cold != 0.0 {
        return Err(Error::UnsupportedRegime(format!(
            "closed forms assume a zero-temperature cold bath (n_C = {}); use the full simulation",
            params.n_cold
        )));
    }
    if params.j_prime == 0.0 {
        return Err(Error::UnsupportedRegime(
            "closed forms require J' > 0 (diode switched off)".into(),
        ));
    }
    let n = params.n_hot;
    let ModelParams {
        j,
        j_prime,
        gamma,
        delta_omega,
        ..
    } = *params;
    let (j2, jp2) = (j * j, j_prime * j_prime);
    let chain = 2.0 + 5.0 * n + 3.0 * n * n;
    let suppression = j2 * gamma / delta_omega.powi(2);
    let blocked = 8.0 * n * j2 + (2.0 + n) * jp2;

    let current_forward = 8.0 * n * n / chain * j2 / gamma;
    let current_reverse = -n / (2.0 + n) * blocked / jp2 * suppression;
    let work_forward = n * (2.0 + n) / chain * suppression;
    let work_reverse = -n * suppression;
    let rectification =
        8.0 * n * (2.0 + n) / chain * jp2 / blocked * delta_omega.powi(2) / gamma.powi(2);

    Ok(RateModelResult {
        populations_forward: markov_steady_state(&params.with_bias(Bias::Forward))?,
        populations_reverse: markov_steady_state(&params.with_bias(Bias::Reverse))?,
        current_forward,
        current_reverse,
        work_forward,
        work_reverse,
        rectification,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BathSide {
    /// Left oscillator including the two Lorentzians generated by the
    /// J′ cos(δω t) modulation.
    LeftDriven,
    Right,
}

fn lorentzian(detuning: f64, gamma: f64) -> f64 {
    gamma / (detuning * detuning + gamma * gamma / 4.0)
}

/// Spectral density of the oscillator-mediated bath seen by the qutrit, at
/// absolute frequency `omega_prime` (the oscillator sits at `params.omega`).
pub fn spectral_density(omega_prime: f64, params: &ModelParams, side: BathSide) -> f64 {
    let (n_l, n_r) = params.occupations();
    let ModelParams {
        omega,
        delta_omega,
        gamma,
        j,
        j_prime,
        ..
    } = *params;
    let static_part = |n: f64| {
        (1.0 + n) * j * j * lorentzian(omega - omega_prime, gamma)
            + n * j * j * lorentzian(omega + omega_prime, gamma)
    };
    match side {
        BathSide::Right => static_part(n_r),
        BathSide::LeftDriven => {
            let shifted = omega + delta_omega;
            static_part(n_l)
                + (1.0 + n_l) * j_prime * j_prime / 4.0 * lorentzian(shifted - omega_prime, gamma)
                + n_l * j_prime * j_prime / 4.0 * lorentzian(shifted + omega_prime, gamma)
        }
    }
}

/// Reverse-bias escape rate from the dark state with a warm cold bath.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RobustnessRate {
    /// Γ_{0→1} = J′² n_C/Γ + n_H J² Γ/δω².
    pub rate: f64,
    /// Occupation n_H (J²/J′²)(Γ²/δω²) below which n_C is negligible.
    pub n_cold_threshold: f64,
    /// n_C divided by the threshold; the zero-temperature picture holds for ≪ 1.
    pub ratio: f64,
    /// Cold-bath temperature equivalent to the threshold, in units of ω.
    pub threshold_temperature_over_omega: f64,
}

pub fn robustness_rate(params: &ModelParams) -> Result<RobustnessRate> {
    params.validate()?;
    let ModelParams {
        j,
        j_prime,
        gamma,
        delta_omega,
        n_hot,
        n_cold,
        ..
    } = *params;
    let rate = j_prime * j_prime * n_cold / gamma + n_hot * j * j * gamma / delta_omega.powi(2);
    let n_cold_threshold = if j_prime > 0.0 {
        n_hot * (j * j / (j_prime * j_prime)) * (gamma * gamma / delta_omega.powi(2))
    } else {
        f64::INFINITY
    };
    Ok(RobustnessRate {
        rate,
        n_cold_threshold,
        ratio: n_cold / n_cold_threshold,
        threshold_temperature_over_omega: temperature_over_omega(n_cold_threshold),
    })
}
