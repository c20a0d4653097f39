//! Named parameter sweeps and their CSV output.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use super::config::{check_grid, IntegratorOverrides, Param, RunConfig};
use crate::dynamics::{
    evolve_in, format_sig, rectification, transition_pair, IntegratorConfig, ObservableSeries,
    Rectification, SteadyStateResult, TransitionWork,
};
use crate::error::{Error, Result};
use crate::hilbert::build_space;
use crate::params::{Bias, ModelParams};
use crate::ratemodel::{analytic_transport, markov_steady_state};

/// What a scenario computes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Kind {
    /// Steady state in both biases at every grid point.
    Sweep,
    /// Full observable history of one evolution per bias.
    TimeSeries,
    /// Work done while flipping the bias, in both directions.
    Transition,
}

/// Built-in scenario definition.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub name: &'static str,
    pub description: &'static str,
    pub kind: Kind,
    pub swept: Param,
    pub grid: Vec<f64>,
    pub series: Option<(Param, Vec<f64>)>,
}

pub const SCENARIO_NAMES: [&str; 11] = [
    "fig2a", "fig2b", "fig2c", "fig2d", "fig3a", "fig3b", "fig3c", "fig3d", "fig4", "fig5a",
    "fig5b",
];

fn modulation_grid() -> Vec<f64> {
    (0..=10).map(|k| k as f64 / 10.0).collect()
}

fn log_grid() -> Vec<f64> {
    vec![0.0, 1e-4, 3e-4, 1e-3, 3e-3, 1e-2, 3e-2, 1e-1]
}

pub fn scenario(name: &str) -> Result<Scenario> {
    let sweep = |description, swept, grid, series| Scenario {
        name: SCENARIO_NAMES.iter().find(|n| **n == name).copied().unwrap_or(""),
        description,
        kind: Kind::Sweep,
        swept,
        grid,
        series,
    };
    let amplification = || {
        (
            Param::OmegaAmp,
            vec![0.0, 0.25, 0.5, 1.0, 1.5, 2.0],
            Some((Param::NHot, vec![0.2, 0.5, 1.0])),
        )
    };
    let s = match name {
        "fig2a" => sweep("currents and work versus modulation", Param::JPrime, modulation_grid(), None),
        "fig2b" => sweep(
            "rectification versus modulation",
            Param::JPrime,
            modulation_grid(),
            Some((Param::DeltaOmega, vec![100.0, 300.0, 1000.0])),
        ),
        "fig2c" => sweep("dark-state population versus modulation", Param::JPrime, modulation_grid(), None),
        "fig2d" => sweep(
            "rectification versus anharmonicity",
            Param::DeltaOmega,
            vec![100.0, 150.0, 200.0, 300.0, 500.0, 700.0, 1000.0],
            Some((Param::Gamma, vec![5.0, 10.0, 20.0])),
        ),
        "fig3a" => {
            let (p, g, s) = amplification();
            sweep("currents versus amplification", p, g, s)
        }
        "fig3b" => {
            let (p, g, s) = amplification();
            sweep("rectification versus amplification", p, g, s)
        }
        "fig3c" => sweep("rectification versus cold-bath occupation", Param::NCold, log_grid(), None),
        "fig3d" => sweep("rectification versus qutrit decoherence", Param::GammaDec, log_grid(), None),
        "fig4" => Scenario {
            name: "fig4",
            description: "time series of currents and work",
            kind: Kind::TimeSeries,
            swept: Param::DeltaOmega,
            grid: vec![],
            series: None,
        },
        "fig5a" | "fig5b" => Scenario {
            name: if name == "fig5a" { "fig5a" } else { "fig5b" },
            description: "work to open and close the diode",
            kind: Kind::Transition,
            swept: Param::DeltaOmega,
            grid: if name == "fig5a" {
                vec![300.0]
            } else {
                vec![100.0, 300.0, 1000.0]
            },
            series: None,
        },
        other => return Err(Error::UnknownScenario(other.to_string())),
    };
    Ok(s)
}

/// One resolved grid point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Point {
    pub series_value: Option<f64>,
    pub value: f64,
    pub params: ModelParams,
    pub integrator: IntegratorConfig,
}

/// A scenario bound to a configuration and an output location.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub scenario: Scenario,
    pub config: RunConfig,
    pub out: PathBuf,
    pub fast: bool,
    pub points: Vec<Point>,
}

fn config_error(line: usize, message: impl Into<String>) -> Error {
    Error::Config {
        line,
        message: message.into(),
    }
}

impl SweepSpec {
    /// Applies configuration overrides to `scenario` and validates every point.
    pub fn new(mut scenario: Scenario, config: RunConfig, out: PathBuf, fast: bool) -> Result<Self> {
        if scenario.kind == Kind::TimeSeries {
            for key in ["sweep", "grid", "series"] {
                if config.line_of(key) > 0 {
                    return Err(config_error(
                        config.line_of(key),
                        format!("scenario {} takes no `{key}`", scenario.name),
                    ));
                }
            }
        }
        if let Some(param) = config.sweep {
            if config.grid.is_none() {
                return Err(config_error(config.line_of("sweep"), "`sweep` requires a `grid`"));
            }
            if scenario.series.as_ref().is_some_and(|(p, _)| *p == param) {
                scenario.series = None;
            }
            scenario.swept = param;
        }
        if let Some(grid) = &config.grid {
            scenario.grid = grid.clone();
        }
        if let Some(values) = &config.series {
            match &mut scenario.series {
                Some((_, v)) => *v = values.clone(),
                None => {
                    return Err(config_error(
                        config.line_of("series"),
                        format!("scenario {} has no series parameter", scenario.name),
                    ))
                }
            }
        }
        let points = resolve_points(&scenario, &config, fast)?;
        Ok(SweepSpec {
            scenario,
            config,
            out,
            fast,
            points,
        })
    }

    /// Sibling of the output file with `suffix` appended to its stem.
    pub fn companion(&self, suffix: &str) -> PathBuf {
        companion(&self.out, suffix)
    }

    fn header(&self) -> String {
        let s = &self.scenario;
        let mut out = format!(
            "# {} {} scenario {}: {}\n",
            env!("CARGO_PKG_NAME"),
            env!("CARGO_PKG_VERSION"),
            s.name,
            s.description
        );
        if s.kind != Kind::TimeSeries {
            let _ = writeln!(out, "# swept = {}", s.swept);
            let _ = writeln!(out, "# grid = {}", join(&s.grid));
        }
        if let Some((p, values)) = &s.series {
            let _ = writeln!(out, "# series {} = {}", p, join(values));
        }
        for line in self.config.resolved_lines(self.fast) {
            let _ = writeln!(out, "# {line}");
        }
        out
    }
}

pub(crate) fn companion(path: &Path, suffix: &str) -> PathBuf {
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    let name = match path.extension() {
        Some(ext) => format!("{stem}{suffix}.{}", ext.to_string_lossy()),
        None => format!("{stem}{suffix}"),
    };
    path.with_file_name(name)
}

fn join(values: &[f64]) -> String {
    values.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(", ")
}

fn resolve_points(scenario: &Scenario, config: &RunConfig, fast: bool) -> Result<Vec<Point>> {
    let resolve = |series_value: Option<f64>, value: Option<f64>| -> Result<Point> {
        let mut params = config.params;
        let mut overrides: IntegratorOverrides = config.integrator;
        if let (Some((p, _)), Some(v)) = (&scenario.series, series_value) {
            p.apply(v, &mut params, &mut overrides);
        }
        if let Some(v) = value {
            scenario.swept.apply(v, &mut params, &mut overrides);
        }
        let integrator = overrides.resolve(&params, fast);
        // The base configuration was validated when parsed, so a failure here
        // comes from a grid or series value.
        config.check_point(&params, &integrator).map_err(|e| match e {
            Error::Config { line, message } => {
                let line = [config.line_of("grid"), config.line_of("series"), line]
                    .into_iter()
                    .find(|l| *l > 0)
                    .unwrap_or(0);
                config_error(line, format!("{message} (at grid point {})", value.unwrap_or(f64::NAN)))
            }
            other => other,
        })?;
        Ok(Point {
            series_value,
            value: value.unwrap_or(f64::NAN),
            params,
            integrator,
        })
    };
    if scenario.kind == Kind::TimeSeries {
        return Ok(vec![resolve(None, None)?]);
    }
    check_grid(&scenario.grid).map_err(|m| config_error(config.line_of("grid"), m))?;
    let series: Vec<Option<f64>> = match &scenario.series {
        Some((_, values)) => values.iter().copied().map(Some).collect(),
        None => vec![None],
    };
    let mut points = Vec::new();
    for s in series {
        for &v in &scenario.grid {
            points.push(resolve(s, Some(v))?);
        }
    }
    Ok(points)
}

/// Files written by a run and how many points failed to converge.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RunReport {
    pub files: Vec<PathBuf>,
    pub points: usize,
    pub non_converged: usize,
}

fn pool(workers: Option<usize>) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers.unwrap_or(0))
        .build()
        .map_err(|e| Error::Io(format!("cannot start worker pool: {e}")))
}

/// Steady states of every point in both biases, in grid order.
pub fn sweep_results(
    spec: &SweepSpec,
    workers: Option<usize>,
) -> Result<Vec<(SteadyStateResult, SteadyStateResult)>> {
    let jobs: Vec<(usize, Bias)> = (0..spec.points.len())
        .flat_map(|i| [(i, Bias::Forward), (i, Bias::Reverse)])
        .collect();
    let policy = spec.config.policy;
    let results: Vec<SteadyStateResult> = pool(workers)?.install(|| {
        jobs.par_iter()
            .map(|&(i, bias)| {
                let point = &spec.points[i];
                let params = point.params.with_bias(bias);
                let space = build_space(&params, &policy)?;
                log::info!("{} {}={} {bias}", spec.scenario.name, spec.scenario.swept, point.value);
                Ok(evolve_in(&params, &space, &point.integrator)?.result)
            })
            .collect::<Result<Vec<_>>>()
    })?;
    Ok(results.chunks(2).map(|c| (c[0], c[1])).collect())
}

const NA: &str = "NA";

fn cell(v: f64) -> String {
    if v.is_finite() {
        format_sig(v)
    } else if v.is_infinite() {
        if v > 0.0 { "inf" } else { "-inf" }.to_string()
    } else {
        NA.to_string()
    }
}

/// CSV text for a steady-state sweep.
pub fn render_sweep(spec: &SweepSpec, results: &[(SteadyStateResult, SteadyStateResult)]) -> String {
    let mut out = spec.header();
    let mut columns: Vec<String> = Vec::new();
    if let Some((p, _)) = &spec.scenario.series {
        columns.push(p.key().to_string());
    }
    columns.push(spec.scenario.swept.key().to_string());
    for tag in ["f", "r"] {
        for name in ["J_L", "J_R", "W_over_domega", "P0", "P1", "P2"] {
            columns.push(format!("{name}_{tag}"));
        }
    }
    columns.extend(
        [
            "J_f",
            "J_r",
            "R",
            "J_f_markov",
            "J_r_markov",
            "R_markov",
            "W_over_domega_f_markov",
            "W_over_domega_r_markov",
            "P0_f_markov",
            "P0_r_markov",
            "fluctuation",
            "converged",
        ]
        .map(String::from),
    );
    let _ = writeln!(out, "{}", columns.join(","));

    for (point, (fwd, rev)) in spec.points.iter().zip(results) {
        let mut row: Vec<String> = Vec::new();
        if let Some(s) = point.series_value {
            row.push(cell(s));
        }
        row.push(cell(point.value));
        for r in [fwd, rev] {
            row.extend([r.current_left, r.current_right, r.work_over_domega].map(cell));
            row.extend(r.populations.map(cell));
        }
        let (jf, jr) = (fwd.bias_current(), rev.bias_current());
        let r = match rectification(jf, jr) {
            Rectification::Finite(r) => r,
            Rectification::IdealWithinResolution => f64::INFINITY,
        };
        row.extend([jf, jr, r].map(cell));
        match analytic_transport(&point.params) {
            Ok(a) => row.extend(
                [
                    a.current_forward,
                    a.current_reverse,
                    a.rectification,
                    a.work_forward,
                    a.work_reverse,
                ]
                .map(cell),
            ),
            Err(_) => row.extend(std::iter::repeat_n(NA.to_string(), 5)),
        }
        for bias in [Bias::Forward, Bias::Reverse] {
            row.push(match markov_steady_state(&point.params.with_bias(bias)) {
                Ok(p) => cell(p[0]),
                Err(_) => NA.to_string(),
            });
        }
        row.push(cell(fwd.fluctuation.max(rev.fluctuation)));
        row.push((fwd.converged && rev.converged).to_string());
        let _ = writeln!(out, "{}", row.join(","));
    }
    out
}

/// Runs a steady-state sweep and writes its CSV.
pub fn run_scenario(spec: &SweepSpec, workers: Option<usize>) -> Result<RunReport> {
    let results = sweep_results(spec, workers)?;
    std::fs::write(&spec.out, render_sweep(spec, &results))?;
    Ok(RunReport {
        files: vec![spec.out.clone()],
        points: results.len(),
        non_converged: results.iter().filter(|(f, r)| !(f.converged && r.converged)).count(),
    })
}

/// Runs one evolution per bias and writes each observable history.
pub fn run_time_series(spec: &SweepSpec, workers: Option<usize>) -> Result<RunReport> {
    let point = spec.points[0];
    let policy = spec.config.policy;
    let runs: Vec<(SteadyStateResult, ObservableSeries)> = pool(workers)?.install(|| {
        [Bias::Forward, Bias::Reverse]
            .par_iter()
            .map(|&bias| {
                let params = point.params.with_bias(bias);
                let space = build_space(&params, &policy)?;
                let evolution = evolve_in(&params, &space, &point.integrator)?;
                Ok((evolution.result, evolution.series))
            })
            .collect::<Result<Vec<_>>>()
    })?;
    let mut files = Vec::new();
    let mut non_converged = 0;
    for (result, series) in &runs {
        let path = spec.companion(&format!("_{}", result.bias));
        let mut header = spec.header();
        let _ = writeln!(
            header,
            "# bias = {}, converged = {}, fluctuation = {}",
            result.bias,
            result.converged,
            cell(result.fluctuation)
        );
        let mut text = header.into_bytes();
        series.write_csv(&mut text)?;
        std::fs::write(&path, text)?;
        files.push(path);
        non_converged += usize::from(!result.converged);
    }
    Ok(RunReport {
        files,
        points: 1,
        non_converged,
    })
}

/// Summary and work series of bias flips at every grid point.
pub fn render_transition(spec: &SweepSpec, results: &[(TransitionWork, TransitionWork)]) -> (String, String) {
    let swept = spec.scenario.swept.key();
    let mut summary = spec.header();
    let _ = writeln!(
        summary,
        "{swept},W_rf,W_fr,delta_P_dark,gap_rf,gap_fr,P0_f,P0_r,converged"
    );
    let mut series = spec.header();
    let _ = writeln!(series, "{swept},direction,t,W_over_domega,accumulated");
    for (point, (rf, fr)) in spec.points.iter().zip(results) {
        let dp = rf.delta_p_dark;
        let gap = |w: f64| (w.abs() - dp.abs()).abs() / dp.abs();
        let converged = rf.steady_states_converged() && fr.steady_states_converged();
        let p0_f = rf.steady_to.p_dark;
        let p0_r = rf.steady_from.p_dark;
        let _ = writeln!(
            summary,
            "{},{},{},{},{},{},{},{},{converged}",
            cell(point.value),
            cell(rf.work),
            cell(fr.work),
            cell(dp),
            cell(gap(rf.work)),
            cell(gap(fr.work)),
            cell(p0_f),
            cell(p0_r)
        );
        for (label, flip) in [("r->f", rf), ("f->r", fr)] {
            for s in &flip.series {
                let _ = writeln!(
                    series,
                    "{},{label},{},{},{}",
                    cell(point.value),
                    cell(s.t),
                    cell(s.work_over_domega),
                    cell(s.accumulated)
                );
            }
        }
    }
    (summary, series)
}

/// Runs both bias flips at each grid point; the summary goes to the output
/// file and the work series to its `_series` companion.
pub fn run_transition(spec: &SweepSpec, workers: Option<usize>) -> Result<RunReport> {
    let policy = spec.config.policy;
    let t_turn = spec.config.t_turn();
    let results: Vec<(TransitionWork, TransitionWork)> = pool(workers)?.install(|| {
        spec.points
            .par_iter()
            .map(|p| transition_pair(&p.params, t_turn, &p.integrator, &policy))
            .collect::<Result<Vec<_>>>()
    })?;
    let (summary, series) = render_transition(spec, &results);
    let series_path = spec.companion("_series");
    std::fs::write(&spec.out, summary)?;
    std::fs::write(&series_path, series)?;
    Ok(RunReport {
        files: vec![spec.out.clone(), series_path],
        points: results.len(),
        non_converged: results
            .iter()
            .filter(|(a, b)| !(a.steady_states_converged() && b.steady_states_converged()))
            .count(),
    })
}

/// Dispatches on the scenario kind.
pub fn run(spec: &SweepSpec, workers: Option<usize>) -> Result<RunReport> {
    match spec.scenario.kind {
        Kind::Sweep => run_scenario(spec, workers),
        Kind::TimeSeries => run_time_series(spec, workers),
        Kind::Transition => run_transition(spec, workers),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_name_resolves() {
        for name in SCENARIO_NAMES {
            let s = scenario(name).unwrap();
            assert_eq!(s.name, name);
            if s.kind != Kind::TimeSeries {
                check_grid(&s.grid).unwrap();
            }
        }
        assert!(matches!(scenario("fig9"), Err(Error::UnknownScenario(_))));
    }

    #[test]
    fn series_multiplies_grid() {
        let spec = SweepSpec::new(
            scenario("fig2b").unwrap(),
            RunConfig::default(),
            "x.csv".into(),
            false,
        )
        .unwrap();
        assert_eq!(spec.points.len(), 33);
        let last = spec.points.last().unwrap();
        assert_eq!(last.params.delta_omega, 1000.0);
        assert_eq!(last.params.j_prime, 1.0);
        assert!((last.integrator.dt - 2.0 * std::f64::consts::PI / 20000.0).abs() < 1e-15);
    }

    #[test]
    fn invalid_grid_point_is_a_config_error() {
        let config = RunConfig::parse("n_H = 0.05\ngrid = 0, 0.01, 0.1").unwrap();
        let err = SweepSpec::new(scenario("fig3c").unwrap(), config, "x.csv".into(), false).unwrap_err();
        assert!(matches!(err, Error::Config { line: 2, .. }), "{err:?}");
    }

    #[test]
    fn overrides_replace_sweep() {
        let config = RunConfig::parse("sweep = Gamma\ngrid = 5, 20").unwrap();
        let spec = SweepSpec::new(scenario("fig2a").unwrap(), config, "x.csv".into(), false).unwrap();
        assert_eq!(spec.points.iter().map(|p| p.params.gamma).collect::<Vec<_>>(), vec![5.0, 20.0]);
        let config = RunConfig::parse("sweep = Gamma").unwrap();
        assert!(SweepSpec::new(scenario("fig2a").unwrap(), config, "x.csv".into(), false).is_err());
    }

    #[test]
    fn companion_paths() {
        assert_eq!(companion(Path::new("out/a.csv"), "_series"), PathBuf::from("out/a_series.csv"));
        assert_eq!(companion(Path::new("a"), "_forward"), PathBuf::from("a_forward"));
    }

    #[test]
    fn cells_format_special_values() {
        assert_eq!(cell(f64::INFINITY), "inf");
        assert_eq!(cell(f64::NAN), "NA");
        assert_eq!(cell(92.664), "9.26640000000e1");
    }
}
