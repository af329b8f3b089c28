use std::fmt;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

/// Errors surfaced by the solver library.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("{0} is not supported: {1}")]
    Unsupported(&'static str, String),

    #[error("contract violation: {0}")]
    Contract(String),

    #[error(
        "line search failed: no step accepted within {max_backtracks} backtracks \
         (delta_t = {delta_t:e}); the direction does not certify descent"
    )]
    LineSearchFailure { max_backtracks: u32, delta_t: f64 },

    #[error("reference optimum not certified within {max_iter} iterations (gap {gap:e})")]
    OracleBudget { max_iter: usize, gap: f64 },
}

impl Error {
    pub(crate) fn parse(line: usize, msg: impl fmt::Display) -> Self {
        Error::Parse {
            line,
            msg: msg.to_string(),
        }
    }

    pub(crate) fn config(msg: impl fmt::Display) -> Self {
        Error::Config(msg.to_string())
    }

    pub(crate) fn contract(msg: impl fmt::Display) -> Self {
        Error::Contract(msg.to_string())
    }
}
