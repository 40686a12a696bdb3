use std::fmt;

use splinetraj::error::Error;

pub const EXIT_INTERNAL: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_INFEASIBLE: i32 = 3;
pub const EXIT_OPTIMIZER_CAP: i32 = 4;

/// A failed run: the exit code plus a stable code string for scripts.
#[derive(Debug)]
pub struct Failure {
    pub code: &'static str,
    pub exit: i32,
    pub message: String,
}

impl Failure {
    pub fn config(code: &'static str, message: impl Into<String>) -> Self {
        Self { code, exit: EXIT_CONFIG, message: message.into() }
    }

    pub fn infeasible(message: impl Into<String>) -> Self {
        Self { code: "INFEASIBLE", exit: EXIT_INFEASIBLE, message: message.into() }
    }

    pub fn io(what: &str, err: std::io::Error) -> Self {
        Self { code: "IO_ERROR", exit: EXIT_INTERNAL, message: format!("{what}: {err}") }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "error[{}]: {}", self.code, self.message)
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            // Every argument reaching the library came from the config.
            Error::InvalidElements(_) | Error::InvalidArgument(_) | Error::Chaining(_) => {
                Failure::config("CONFIG_INVALID", e.to_string())
            }
            Error::DegenerateShape { .. } | Error::NoFeasibleRevolution { .. } | Error::Lambert(_) => {
                Failure::infeasible(e.to_string())
            }
            Error::KeplerNonConvergence { .. } => Failure { code: "INTERNAL", exit: EXIT_INTERNAL, message: e.to_string() },
        }
    }
}
