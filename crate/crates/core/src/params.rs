//! Physical parameters of the qutrit rectifier.
//!
//! Everything is expressed in units where ħ = k_B = 1 and the static hopping
//! `J` sets the energy scale.

use std::fmt;

use crate::error::{invalid, Result};

/// Which side carries the hot bath.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Bias {
    /// Hot bath on the left oscillator, cold bath on the right.
    Forward,
    /// Cold bath on the left oscillator, hot bath on the right.
    Reverse,
}

impl Bias {
    pub fn flipped(self) -> Bias {
        match self {
            Bias::Forward => Bias::Reverse,
            Bias::Reverse => Bias::Forward,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Bias::Forward => "forward",
            Bias::Reverse => "reverse",
        }
    }
}

impl fmt::Display for Bias {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Bias {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "forward" | "f" => Ok(Bias::Forward),
            "reverse" | "r" => Ok(Bias::Reverse),
            other => Err(format!("expected `forward` or `reverse`, got `{other}`")),
        }
    }
}

/// All physical parameters of one simulation instance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelParams {
    /// Qutrit anharmonicity δω.
    pub delta_omega: f64,
    /// Static hopping, the energy unit.
    pub j: f64,
    /// Modulation amplitude J′ of the left hopping, J_LT(t) = J + J′ cos(δω t).
    pub j_prime: f64,
    /// Bath–oscillator coupling Γ.
    pub gamma: f64,
    /// Mean occupation of the hot bath.
    pub n_hot: f64,
    /// Mean occupation of the cold bath.
    pub n_cold: f64,
    pub bias: Bias,
    /// Amplitude Ω of the resonant 1↔2 amplification drive.
    pub omega_amp: f64,
    /// Qutrit decay and dephasing rate.
    pub gamma_dec: f64,
    /// Oscillator frequency ω. Never enters the interaction-picture
    /// dynamics; only used for spectral densities and temperature reporting.
    pub omega: f64,
}

impl Default for ModelParams {
    fn default() -> Self {
        ModelParams {
            delta_omega: 300.0,
            j: 1.0,
            j_prime: 0.5,
            gamma: 10.0,
            n_hot: 0.5,
            n_cold: 0.0,
            bias: Bias::Forward,
            omega_amp: 0.0,
            gamma_dec: 0.0,
            omega: 1.0e4,
        }
    }
}

impl ModelParams {
    pub fn with_bias(mut self, bias: Bias) -> Self {
        self.bias = bias;
        self
    }

    /// Mean occupation (n_L, n_R) of the two baths for the current bias.
    pub fn occupations(&self) -> (f64, f64) {
        match self.bias {
            Bias::Forward => (self.n_hot, self.n_cold),
            Bias::Reverse => (self.n_cold, self.n_hot),
        }
    }

    pub fn n_left(&self) -> f64 {
        self.occupations().0
    }

    pub fn n_right(&self) -> f64 {
        self.occupations().1
    }

    /// Period of the hopping modulation, 2π/δω.
    pub fn drive_period(&self) -> f64 {
        2.0 * std::f64::consts::PI / self.delta_omega
    }

    /// Checks the physical invariants. `n_hot == n_cold` is accepted so that
    /// equilibrium configurations can be simulated; configuration files
    /// enforce a strict bias on top of this.
    pub fn validate(&self) -> Result<()> {
        fn finite(name: &'static str, v: f64) -> Result<()> {
            if v.is_finite() {
                Ok(())
            } else {
                Err(invalid(name, format!("must be finite, got {v}")))
            }
        }
        finite("delta_omega", self.delta_omega)?;
        finite("J", self.j)?;
        finite("J_prime", self.j_prime)?;
        finite("Gamma", self.gamma)?;
        finite("n_H", self.n_hot)?;
        finite("n_C", self.n_cold)?;
        finite("Omega", self.omega_amp)?;
        finite("gamma_dec", self.gamma_dec)?;
        finite("omega", self.omega)?;
        if self.delta_omega <= 0.0 {
            return Err(invalid("delta_omega", "must be > 0"));
        }
        if self.j <= 0.0 {
            return Err(invalid("J", "must be > 0"));
        }
        if self.gamma <= 0.0 {
            return Err(invalid("Gamma", "must be > 0"));
        }
        if self.j_prime < 0.0 {
            return Err(invalid("J_prime", "must be >= 0"));
        }
        if self.n_cold < 0.0 {
            return Err(invalid("n_C", "must be >= 0"));
        }
        if self.n_hot < self.n_cold {
            return Err(invalid(
                "n_H",
                format!("hot occupation {} below cold occupation {}", self.n_hot, self.n_cold),
            ));
        }
        if self.omega_amp < 0.0 {
            return Err(invalid("Omega", "must be >= 0"));
        }
        if self.gamma_dec < 0.0 {
            return Err(invalid("gamma_dec", "must be >= 0"));
        }
        if self.omega <= 0.0 {
            return Err(invalid("omega", "must be > 0"));
        }
        Ok(())
    }
}

/// Bose occupation n = 1/(e^{ω/T} − 1).
pub fn bose_occupation(omega_over_t: f64) -> f64 {
    1.0 / omega_over_t.exp_m1()
}

/// Inverse of [`bose_occupation`]: T/ω for a given mean occupation.
pub fn temperature_over_omega(n: f64) -> f64 {
    if n <= 0.0 {
        0.0
    } else {
        1.0 / (1.0 + 1.0 / n).ln()
    }
}
