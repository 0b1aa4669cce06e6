use thiserror::Error;

/// Errors produced by the solvers, oracles and certificate engine.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {what} (expected {expected}, got {got})")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("power iteration did not converge in {iterations} iterations (last estimate {estimate})")]
    PowerIterationNotConverged { iterations: usize, estimate: f64 },

    #[error("conjugate gradient failed after {iterations} iterations: {reason} (residual {residual:e})")]
    CgFailed {
        iterations: usize,
        residual: f64,
        reason: &'static str,
    },

    #[error("inner subproblem solver reached {iterations} iterations with residual {residual:e}")]
    InnerNotConverged { iterations: usize, residual: f64 },

    #[error("reference solve did not reach tolerance within {iterations} iterations (change {change:e})")]
    ReferenceNotConverged {
        iterations: usize,
        change: f64,
        best: Vec<f64>,
    },

    #[error("schedule horizon exceeded: step {k} requested with horizon {horizon}")]
    HorizonExceeded { k: usize, horizon: usize },

    #[error("parameter schedule violates analytical constraints: {0}")]
    ScheduleViolation(String),

    #[error("non-finite value encountered in {0}")]
    NonFinite(&'static str),

    #[error("missing reference: {0}")]
    MissingReference(&'static str),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_dim(what: &'static str, expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { what, expected, got })
    }
}

pub(crate) fn check_finite(what: &'static str, v: &[f64]) -> Result<()> {
    if v.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite(what))
    }
}
