use thiserror::Error;

/// Errors raised by the problem oracles, the dynamics, and the integrator.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch in {context}: expected {expected}, got {got}")]
    Dimension {
        context: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("invalid input: {0}")]
    Invalid(String),

    #[error("oracle evaluation failed: {0}")]
    Evaluation(String),

    #[error("invariant violated: {0}")]
    Invariant(String),

    #[error("no KKT point found: problem is infeasible")]
    Infeasible,

    #[error("capability exceeded: {0}")]
    Capability(String),

    #[error("event isolation failed at t = {t}: {reason}")]
    EventIsolation { t: f64, reason: String },

    #[error("integration step too large at t = {t}: constraint {index} both enters and leaves the active set")]
    StepTooLarge { t: f64, index: usize },

    #[error("trajectory diverged at t = {t} (last valid sample at t = {last_valid_t})")]
    Divergence {
        t: f64,
        last_valid_t: f64,
        last_valid_state: Vec<f64>,
    },

    #[error("price interval {interval} did not settle: {detail}")]
    IntervalNotConverged { interval: usize, detail: String },

    #[error("i/o error: {0}")]
    Io(String),

    #[error("format error: {0}")]
    Format(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Format(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Format(e.to_string())
    }
}

pub(crate) fn check_dim(context: &'static str, expected: usize, got: usize) -> Result<()> {
    if expected != got {
        return Err(Error::Dimension {
            context,
            expected,
            got,
        });
    }
    Ok(())
}
