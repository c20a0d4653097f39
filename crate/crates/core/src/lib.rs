//! Simulation of a qutrit heat rectifier coupled to two damped oscillators.
//!
//! The crate builds the truncated composite Hilbert space, compiles the
//! Lindblad generator of the driven system, integrates it to its periodic
//! steady state and compares the resulting transport with a Markovian
//! three-level rate model.

pub mod cli;
pub mod dynamics;
pub mod error;
pub mod hilbert;
pub mod liouvillian;
pub mod params;
pub mod ratemodel;

pub use dynamics::{
    evolve, evolve_to_steady, rectification, transition_work, IntegratorConfig, ObservableSeries,
    Rectification, SteadyStateResult, TransitionWork,
};
pub use error::{Error, Result};
pub use hilbert::{CompositeSpace, DensityMatrix, Site, TruncationPolicy};
pub use liouvillian::Generator;
pub use params::{Bias, ModelParams};
pub use ratemodel::{analytic_transport, markov_steady_state, RateModelResult, RateSet};
