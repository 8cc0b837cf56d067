use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// A parameter violated one of its documented constraints.
    #[error("invalid `{name}`: {constraint}")]
    InvalidParameter {
        name: &'static str,
        constraint: String,
    },

    #[error("time {value} lies outside [0, 1]")]
    TimeOutOfRange { value: String },

    #[error("times out of order: {0}")]
    Ordering(String),

    /// The requested tolerance cannot be met within the truncation cap.
    #[error(
        "tolerance unreachable: requested {requested:e}, best tail bound {reachable:e} at N = {cap}"
    )]
    ToleranceUnreachable {
        requested: f64,
        reachable: f64,
        cap: usize,
    },

    #[error("fit failed: {0}")]
    Fit(String),

    /// The time step does not resolve the fastest driver mode.
    #[error("step {step:e} does not resolve the driver (angular frequency {frequency:e}); use step <= {max_step:e}")]
    StepTooLarge {
        step: f64,
        frequency: f64,
        max_step: f64,
    },

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("parse error: {0}")]
    Parse(String),
}

impl Error {
    /// Shorthand for [`Error::InvalidParameter`].
    pub fn param(name: &'static str, constraint: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            constraint: constraint.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
