use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("unsupported regime: {0}")]
    UnsupportedRegime(String),

    #[error("step rejected at t = {t}: minimum eigenvalue {min_eigenvalue:.3e} below -1e-6 (dt too large?)")]
    StepRejected { t: f64, min_eigenvalue: f64 },

    #[error("imaginary residue {residue:.3e} in work rate exceeds tolerance")]
    ComplexWork { residue: f64 },

    #[error("transition requires two distinct biases")]
    DegenerateTransition,

    #[error("steady state did not converge for {0} bias")]
    NotConverged(&'static str),

    #[error("state is not a valid density matrix: {0}")]
    InvalidState(String),

    #[error("line {line}: {message}")]
    Config { line: usize, message: String },

    #[error("unknown scenario `{0}`")]
    UnknownScenario(String),

    #[error("io: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(err: std::io::Error) -> Self {
        Error::Io(err.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}
