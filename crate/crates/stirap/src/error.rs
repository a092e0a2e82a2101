//! Crate-wide error type.
//!
//! Errors fall into three categories that the command-line driver maps to
//! distinct exit codes: configuration problems, numerical failures, and I/O.

use thiserror::Error;

/// Result alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;

/// Broad classification of an [`Error`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorCategory {
    /// The input scenario or arguments are invalid.
    Config,
    /// A numerical routine failed on otherwise valid input.
    Numerical,
    /// Reading or writing files failed.
    Io,
}

/// Every failure the library can report.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// A parameter violates a documented invariant.
    #[error("invalid parameter in {context}: {message}")]
    InvalidParameter {
        /// Operation or type that rejected the value.
        context: &'static str,
        /// Human-readable description.
        message: String,
    },
    /// Both Rabi envelopes vanish, so the mixing angle is undefined.
    #[error("mixing angle undefined: both envelopes vanish at t = {t}")]
    BothEnvelopesZero {
        /// Time of the evaluation.
        t: f64,
    },
    /// An iterative solver did not converge.
    #[error("{operation}: no convergence after {iterations} iterations")]
    NoConvergence {
        /// Name of the solver.
        operation: &'static str,
        /// Iterations performed.
        iterations: usize,
    },
    /// The total Rabi frequency vanishes and the adiabatic basis is undefined.
    #[error("degenerate field: Rabi frequency vanishes at t = {t}")]
    DegenerateField {
        /// Time of the evaluation.
        t: f64,
    },
    /// The adaptive integrator could not satisfy its tolerance.
    #[error("step size underflow at t = {t} (h = {h:e})")]
    StepSizeUnderflow {
        /// Time at which the step collapsed.
        t: f64,
        /// Rejected step size.
        h: f64,
    },
    /// A frame transformation was requested outside the tabulated phase data.
    #[error("missing phase data at t = {t}")]
    MissingPhaseData {
        /// Requested time.
        t: f64,
    },
    /// A step was applied to a packet in the wrong internal state.
    #[error("invalid role: {0}")]
    InvalidRole(String),
    /// A momentum that must be positive is not.
    #[error("non-positive momentum {momentum}")]
    NonPositiveMomentum {
        /// Offending momentum.
        momentum: f64,
    },
    /// The Rabi frequency vanishes inside a bound's evaluation interval.
    #[error("Rabi frequency vanishes at interior time t = {t}")]
    OmegaVanishes {
        /// Time of the evaluation.
        t: f64,
    },
    /// Malformed configuration content.
    #[error("config error: {0}")]
    Config(String),
    /// Filesystem or serialization failure.
    #[error("i/o error: {0}")]
    Io(String),
}

impl Error {
    /// Classifies the error for exit-code mapping.
    pub fn category(&self) -> ErrorCategory {
        match self {
            Error::InvalidParameter { .. } | Error::InvalidRole(_) | Error::Config(_) => {
                ErrorCategory::Config
            }
            Error::NonPositiveMomentum { .. } => ErrorCategory::Config,
            Error::Io(_) => ErrorCategory::Io,
            Error::BothEnvelopesZero { .. }
            | Error::NoConvergence { .. }
            | Error::DegenerateField { .. }
            | Error::StepSizeUnderflow { .. }
            | Error::MissingPhaseData { .. }
            | Error::OmegaVanishes { .. } => ErrorCategory::Numerical,
        }
    }

    pub(crate) fn invalid(context: &'static str, message: impl Into<String>) -> Self {
        Error::InvalidParameter {
            context,
            message: message.into(),
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
