//! Command-line front end: `rectifier run <scenario>`.

pub mod config;
pub mod scenario;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Parser, Subcommand};

pub use config::{validate_config, IntegratorOverrides, Param, RunConfig};
pub use scenario::{
    run, run_scenario, run_transition, scenario, Kind, RunReport, Scenario, SweepSpec,
    SCENARIO_NAMES,
};

use crate::error::{Error, Result};

/// Exit status when every point converged.
pub const EXIT_OK: i32 = 0;
/// Exit status for configuration and runtime errors.
pub const EXIT_ERROR: i32 = 1;
/// Exit status when output was written but some points did not converge.
pub const EXIT_NOT_CONVERGED: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "rectifier", version, about = "Qutrit heat rectifier simulations")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run a named scenario and write its CSV output.
    Run {
        /// Scenario name, e.g. fig2b.
        scenario: String,
        /// Flat `key = value` configuration file.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Output CSV path; defaults to `<scenario>.csv`.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Worker threads; defaults to the number of cores.
        #[arg(long)]
        workers: Option<usize>,
        /// Evolve to 1000/J only and report convergence per point.
        #[arg(long)]
        fast: bool,
    },
    /// List the available scenarios.
    List,
}

/// Options of one `run` invocation.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunOptions {
    pub config: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub workers: Option<usize>,
    pub fast: bool,
}

/// Resolves the scenario, reads the configuration and runs it.
pub fn execute(name: &str, options: &RunOptions) -> Result<RunReport> {
    let scenario = scenario(name)?;
    let config = match &options.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
            RunConfig::parse(&text)?
        }
        None => RunConfig::default(),
    };
    if options.workers == Some(0) {
        return Err(Error::InvalidParameter {
            name: "workers",
            reason: "must be >= 1".into(),
        });
    }
    let out = options
        .out
        .clone()
        .unwrap_or_else(|| PathBuf::from(format!("{name}.csv")));
    let spec = SweepSpec::new(scenario, config, out, options.fast)?;
    run(&spec, options.workers)
}

/// Entry point of the `rectifier` binary; returns the process exit status.
pub fn main_from_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let _ = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn"))
        .try_init();
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_ERROR } else { EXIT_OK };
        }
    };
    match cli.command {
        Command::List => {
            for name in SCENARIO_NAMES {
                if let Ok(s) = scenario(name) {
                    println!("{name:6}  {}", s.description);
                }
            }
            EXIT_OK
        }
        Command::Run {
            scenario,
            config,
            out,
            workers,
            fast,
        } => {
            let options = RunOptions {
                config,
                out,
                workers,
                fast,
            };
            match execute(&scenario, &options) {
                Ok(report) => {
                    for f in &report.files {
                        println!("wrote {}", f.display());
                    }
                    if report.non_converged > 0 {
                        eprintln!(
                            "warning: {} of {} points did not converge",
                            report.non_converged, report.points
                        );
                        EXIT_NOT_CONVERGED
                    } else {
                        EXIT_OK
                    }
                }
                Err(e) => {
                    match &options.config {
                        Some(path) if matches!(e, Error::Config { .. }) => {
                            eprintln!("error: {}: {e}", path.display())
                        }
                        _ => eprintln!("error: {e}"),
                    }
                    EXIT_ERROR
                }
            }
        }
    }
}
