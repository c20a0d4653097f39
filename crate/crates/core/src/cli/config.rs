//! Flat `key = value` run configuration.
//!
//! Lines hold one assignment each; `#` starts a comment. Keys are case
//! sensitive and may appear once. All quantities are in units of J.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use crate::dynamics::IntegratorConfig;
use crate::error::{Error, Result};
use crate::hilbert::TruncationPolicy;
use crate::params::ModelParams;

/// A parameter that a sweep can vary.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Param {
    DeltaOmega,
    J,
    JPrime,
    Gamma,
    NHot,
    NCold,
    OmegaAmp,
    GammaDec,
    Omega,
    Dt,
    TFinal,
}

impl Param {
    pub const ALL: [Param; 11] = [
        Param::DeltaOmega,
        Param::J,
        Param::JPrime,
        Param::Gamma,
        Param::NHot,
        Param::NCold,
        Param::OmegaAmp,
        Param::GammaDec,
        Param::Omega,
        Param::Dt,
        Param::TFinal,
    ];

    pub fn key(self) -> &'static str {
        match self {
            Param::DeltaOmega => "delta_omega",
            Param::J => "J",
            Param::JPrime => "J_prime",
            Param::Gamma => "Gamma",
            Param::NHot => "n_H",
            Param::NCold => "n_C",
            Param::OmegaAmp => "Omega",
            Param::GammaDec => "gamma_dec",
            Param::Omega => "omega",
            Param::Dt => "dt",
            Param::TFinal => "t_final",
        }
    }

    /// Writes `value` into the model or integrator settings.
    pub fn apply(self, value: f64, params: &mut ModelParams, integrator: &mut IntegratorOverrides) {
        match self {
            Param::DeltaOmega => params.delta_omega = value,
            Param::J => params.j = value,
            Param::JPrime => params.j_prime = value,
            Param::Gamma => params.gamma = value,
            Param::NHot => params.n_hot = value,
            Param::NCold => params.n_cold = value,
            Param::OmegaAmp => params.omega_amp = value,
            Param::GammaDec => params.gamma_dec = value,
            Param::Omega => params.omega = value,
            Param::Dt => integrator.dt = Some(value),
            Param::TFinal => integrator.t_final = Some(value),
        }
    }
}

impl fmt::Display for Param {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.key())
    }
}

impl FromStr for Param {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        Param::ALL
            .into_iter()
            .find(|p| p.key() == s)
            .ok_or_else(|| format!("`{s}` is not a sweepable parameter"))
    }
}

/// Integrator settings given explicitly; anything left `None` is derived
/// from the model parameters of each point.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct IntegratorOverrides {
    pub dt: Option<f64>,
    pub t_final: Option<f64>,
    pub averaging_window: Option<f64>,
    pub sample_stride: Option<usize>,
    pub convergence_tol: Option<f64>,
    pub early_stop: Option<bool>,
}

impl IntegratorOverrides {
    /// Integrator for `params`; `fast` caps the evolution at 1000/J.
    pub fn resolve(&self, params: &ModelParams, fast: bool) -> IntegratorConfig {
        let mut config = IntegratorConfig::for_params(params);
        if let Some(dt) = self.dt {
            config.dt = dt;
            config.sample_stride = ((1.0 / params.j) / dt).round().max(1.0) as usize;
        }
        if let Some(t) = self.t_final {
            config.t_final = t;
        }
        if fast {
            config.t_final = IntegratorConfig::fast(params).t_final;
        }
        if let Some(w) = self.averaging_window {
            config.averaging_window = w;
        }
        if let Some(s) = self.sample_stride {
            config.sample_stride = s;
        }
        if let Some(tol) = self.convergence_tol {
            config.convergence_tol = tol;
        }
        if let Some(e) = self.early_stop {
            config.early_stop = e;
        }
        config
    }
}

/// Fully parsed configuration file.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub params: ModelParams,
    pub integrator: IntegratorOverrides,
    pub policy: TruncationPolicy,
    /// Duration of a bias flip; defaults to 500/J.
    pub t_turn: Option<f64>,
    /// Replaces the scenario's swept parameter.
    pub sweep: Option<Param>,
    /// Replaces the scenario's grid.
    pub grid: Option<Vec<f64>>,
    /// Replaces the values of the scenario's series parameter.
    pub series: Option<Vec<f64>>,
    /// Line on which each key was set, for diagnostics raised after parsing.
    lines: BTreeMap<&'static str, usize>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            params: ModelParams::default(),
            integrator: IntegratorOverrides::default(),
            policy: TruncationPolicy::default(),
            t_turn: None,
            sweep: None,
            grid: None,
            series: None,
            lines: BTreeMap::new(),
        }
    }
}

const KEYS: [&str; 22] = [
    "delta_omega",
    "J",
    "J_prime",
    "Gamma",
    "n_H",
    "n_C",
    "Omega",
    "gamma_dec",
    "omega",
    "bias",
    "dt",
    "t_final",
    "averaging_window",
    "sample_stride",
    "convergence_tol",
    "early_stop",
    "threshold",
    "floor",
    "t_turn",
    "sweep",
    "grid",
    "series",
];

fn err(line: usize, message: impl Into<String>) -> Error {
    Error::Config {
        line,
        message: message.into(),
    }
}

fn number(line: usize, key: &str, raw: &str) -> Result<f64> {
    let v: f64 = raw
        .parse()
        .map_err(|_| err(line, format!("`{key}` expects a number, got `{raw}`")))?;
    if !v.is_finite() {
        return Err(err(line, format!("`{key}` must be finite")));
    }
    Ok(v)
}

fn positive(line: usize, key: &str, raw: &str) -> Result<f64> {
    let v = number(line, key, raw)?;
    if v <= 0.0 {
        return Err(err(line, format!("`{key}` must be > 0, got {v}")));
    }
    Ok(v)
}

fn count(line: usize, key: &str, raw: &str) -> Result<usize> {
    raw.parse()
        .map_err(|_| err(line, format!("`{key}` expects a non-negative integer, got `{raw}`")))
}

fn list(line: usize, key: &str, raw: &str) -> Result<Vec<f64>> {
    let values = raw
        .split(',')
        .map(|item| number(line, key, item.trim()))
        .collect::<Result<Vec<_>>>()?;
    check_grid(&values).map_err(|m| err(line, format!("`{key}`: {m}")))?;
    Ok(values)
}

/// A grid must be non-empty and strictly monotone.
pub fn check_grid(values: &[f64]) -> std::result::Result<(), String> {
    if values.is_empty() {
        return Err("grid is empty".into());
    }
    let increasing = values.windows(2).all(|w| w[1] > w[0]);
    let decreasing = values.windows(2).all(|w| w[1] < w[0]);
    if !(increasing || decreasing) {
        return Err("grid must be strictly monotone".into());
    }
    Ok(())
}

impl RunConfig {
    /// Parses and validates configuration text. Empty text gives the defaults.
    pub fn parse(text: &str) -> Result<Self> {
        let mut config = RunConfig::default();
        for (index, raw_line) in text.lines().enumerate() {
            let line = index + 1;
            let content = raw_line.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let (key, value) = content
                .split_once('=')
                .ok_or_else(|| err(line, format!("expected `key = value`, got `{content}`")))?;
            let (key, value) = (key.trim(), value.trim());
            let key = *KEYS
                .iter()
                .find(|k| **k == key)
                .ok_or_else(|| err(line, format!("unknown key `{key}`")))?;
            if let Some(first) = config.lines.insert(key, line) {
                return Err(err(line, format!("`{key}` already set on line {first}")));
            }
            if value.is_empty() {
                return Err(err(line, format!("`{key}` has no value")));
            }
            config.assign(line, key, value)?;
        }
        config.check()?;
        Ok(config)
    }

    fn assign(&mut self, line: usize, key: &'static str, value: &str) -> Result<()> {
        let p = &mut self.params;
        let it = &mut self.integrator;
        match key {
            "bias" => p.bias = value.parse().map_err(|m: String| err(line, m))?,
            "dt" => it.dt = Some(positive(line, key, value)?),
            "t_final" => it.t_final = Some(positive(line, key, value)?),
            "averaging_window" => it.averaging_window = Some(positive(line, key, value)?),
            "sample_stride" => {
                let s = count(line, key, value)?;
                if s == 0 {
                    return Err(err(line, "`sample_stride` must be >= 1"));
                }
                it.sample_stride = Some(s);
            }
            "convergence_tol" => it.convergence_tol = Some(positive(line, key, value)?),
            "early_stop" => {
                it.early_stop = Some(value.parse().map_err(|_| {
                    err(line, format!("`early_stop` expects true or false, got `{value}`"))
                })?)
            }
            "threshold" => self.policy.threshold = number(line, key, value)?,
            "floor" => {
                let floor = count(line, key, value)?;
                if floor == 0 {
                    return Err(err(line, "`floor` must keep at least one excited level"));
                }
                self.policy.floor = floor;
            }
            "t_turn" => self.t_turn = Some(positive(line, key, value)?),
            "sweep" => self.sweep = Some(value.parse().map_err(|m: String| err(line, m))?),
            "grid" => self.grid = Some(list(line, key, value)?),
            "series" => self.series = Some(list(line, key, value)?),
            _ => {
                let param: Param = key.parse().expect("model keys are sweepable");
                param.apply(number(line, key, value)?, p, it);
            }
        }
        Ok(())
    }

    /// Line on which `key` was set, or 0 when it kept its default.
    pub fn line_of(&self, key: &str) -> usize {
        self.lines.get(key).copied().unwrap_or(0)
    }

    /// Validates a fully resolved point, attributing failures to the line
    /// that set the offending key.
    pub fn check_point(&self, params: &ModelParams, integrator: &IntegratorConfig) -> Result<()> {
        let locate = |e: Error| match e {
            Error::InvalidParameter { name, reason } => {
                // The ordering check blames n_H but either key may be at fault.
                let line = match name {
                    "n_H" => self.line_of("n_H").max(self.line_of("n_C")),
                    _ => self.line_of(name),
                };
                err(line, format!("`{name}` {reason}"))
            }
            other => other,
        };
        params.validate().map_err(locate)?;
        if params.n_hot <= params.n_cold {
            let line = self.line_of("n_C").max(self.line_of("n_H"));
            return Err(err(
                line,
                format!(
                    "n_H = {} must exceed n_C = {} to define a bias",
                    params.n_hot, params.n_cold
                ),
            ));
        }
        integrator.validate().map_err(locate)?;
        Ok(())
    }

    fn check(&self) -> Result<()> {
        self.policy.validate().map_err(|e| match e {
            Error::InvalidParameter { reason, .. } => {
                err(self.line_of("threshold"), format!("`threshold` {reason}"))
            }
            other => other,
        })?;
        let integrator = self.integrator.resolve(&self.params, false);
        self.check_point(&self.params, &integrator)
    }

    /// Flip duration for transition runs.
    pub fn t_turn(&self) -> f64 {
        self.t_turn.unwrap_or(500.0 / self.params.j)
    }

    /// The resolved settings as `key = value` lines, in a fixed order.
    pub fn resolved_lines(&self, fast: bool) -> Vec<String> {
        let p = &self.params;
        let it = self.integrator.resolve(p, fast);
        let mut out = vec![
            format!("delta_omega = {}", p.delta_omega),
            format!("J = {}", p.j),
            format!("J_prime = {}", p.j_prime),
            format!("Gamma = {}", p.gamma),
            format!("n_H = {}", p.n_hot),
            format!("n_C = {}", p.n_cold),
            format!("Omega = {}", p.omega_amp),
            format!("gamma_dec = {}", p.gamma_dec),
            format!("omega = {}", p.omega),
            format!("bias = {}", p.bias),
            match self.integrator.dt {
                Some(dt) => format!("dt = {dt}"),
                None => "dt = 2*pi/(20*delta_omega)".to_string(),
            },
            format!("t_final = {}", it.t_final),
            format!("averaging_window = {}", it.averaging_window),
            format!("sample_stride = {}", it.sample_stride),
            format!("convergence_tol = {}", it.convergence_tol),
            format!("early_stop = {}", it.early_stop),
            format!("threshold = {}", self.policy.threshold),
            format!("floor = {}", self.policy.floor),
            format!("t_turn = {}", self.t_turn()),
        ];
        out.push(format!("fast = {fast}"));
        out
    }
}

/// Parses configuration text; see [`RunConfig::parse`].
pub fn validate_config(text: &str) -> Result<RunConfig> {
    RunConfig::parse(text)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::Bias;

    fn line_of(e: Error) -> usize {
        match e {
            Error::Config { line, .. } => line,
            other => panic!("expected a config error, got {other:?}"),
        }
    }

    #[test]
    fn empty_config_gives_defaults() {
        let c = validate_config("").unwrap();
        assert_eq!(c.params, ModelParams::default());
        let it = c.integrator.resolve(&c.params, false);
        assert_eq!(it.t_final, 5000.0);
        assert_eq!(it.averaging_window, 100.0);
        assert_eq!(c.t_turn(), 500.0);
        assert_eq!(c.policy, TruncationPolicy::default());
    }

    #[test]
    fn cold_above_hot_is_rejected() {
        let e = validate_config("n_C = 0.6\nn_H = 0.5\n").unwrap_err();
        assert_eq!(line_of(e), 2);
        let e = validate_config("n_C = 0.5").unwrap_err();
        assert_eq!(line_of(e), 1);
        let e = validate_config("\nn_C = 0.6").unwrap_err();
        assert_eq!(line_of(e), 2);
    }

    #[test]
    fn anharmonicity_rescales_step() {
        let c = validate_config("delta_omega = 1000").unwrap();
        let it = c.integrator.resolve(&c.params, false);
        assert!((it.dt - 2.0 * std::f64::consts::PI / 20000.0).abs() < 1e-15);
    }

    #[test]
    fn diagnostics_carry_line_numbers() {
        assert_eq!(line_of(validate_config("# c\n\nfoo = 1").unwrap_err()), 3);
        assert_eq!(line_of(validate_config("J_prime = abc").unwrap_err()), 1);
        assert_eq!(line_of(validate_config("J = 1\nJ = 2").unwrap_err()), 2);
        assert_eq!(line_of(validate_config("Gamma = 1\n\nGamma_x").unwrap_err()), 3);
        assert_eq!(line_of(validate_config("\nGamma = -1").unwrap_err()), 2);
        assert_eq!(line_of(validate_config("grid = 1, 3, 2").unwrap_err()), 1);
        assert_eq!(line_of(validate_config("\n\nfloor = 0").unwrap_err()), 3);
        assert_eq!(line_of(validate_config("sweep = bias").unwrap_err()), 1);
    }

    #[test]
    fn keys_are_case_sensitive() {
        assert!(validate_config("gamma = 10").is_err());
        assert!(validate_config("Gamma = 10").is_ok());
    }

    #[test]
    fn parses_every_kind_of_value() {
        let text = "bias = reverse\nearly_stop = true\nsample_stride = 7\n\
                    grid = 0.1, 0.2 ,0.4 # trailing comment\nsweep = n_C\nt_turn = 250";
        let c = validate_config(text).unwrap();
        assert_eq!(c.params.bias, Bias::Reverse);
        assert_eq!(c.integrator.early_stop, Some(true));
        assert_eq!(c.integrator.sample_stride, Some(7));
        assert_eq!(c.grid.as_deref(), Some(&[0.1, 0.2, 0.4][..]));
        assert_eq!(c.sweep, Some(Param::NCold));
        assert_eq!(c.t_turn(), 250.0);
    }

    #[test]
    fn fast_caps_evolution() {
        let c = validate_config("t_final = 3000").unwrap();
        assert_eq!(c.integrator.resolve(&c.params, true).t_final, 1000.0);
        assert_eq!(c.integrator.resolve(&c.params, false).t_final, 3000.0);
    }

    #[test]
    fn grids_must_be_monotone() {
        assert!(check_grid(&[]).is_err());
        assert!(check_grid(&[1.0, 1.0]).is_err());
        assert!(check_grid(&[3.0, 2.0, 1.0]).is_ok());
        assert!(check_grid(&[0.5]).is_ok());
    }
}
