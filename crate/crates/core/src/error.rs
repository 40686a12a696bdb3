use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid orbital elements: {0}")]
    InvalidElements(String),

    #[error("degenerate shape at s = {s}: {reason}")]
    DegenerateShape { s: f64, reason: &'static str },

    #[error("kepler solver did not converge (M = {mean_anomaly}, e = {ecc})")]
    KeplerNonConvergence { mean_anomaly: f64, ecc: f64 },

    #[error("lambert: {0}")]
    Lambert(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("no feasible revolution count in [{lo}, {hi}]")]
    NoFeasibleRevolution { lo: u32, hi: u32 },

    #[error("mission chaining violated: {0}")]
    Chaining(String),
}

pub type Result<T> = std::result::Result<T, Error>;
