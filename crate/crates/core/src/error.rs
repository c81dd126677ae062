use thiserror::Error;

/// Errors raised by the simulator.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("Bessel argument {0} outside the supported range |x| <= 12")]
    BesselDomain(f64),

    #[error("numerical invariant violated at t = {time:e}: {what} (dt = {dt:e}; reduce the step)")]
    Invariant { what: String, time: f64, dt: f64 },

    #[error(
        "step {dt:e} exceeds the bound {bound:e} set by the fastest frequency {fastest:e} rad/s"
    )]
    StepTooLarge { dt: f64, bound: f64, fastest: f64 },

    #[error("steady state not reached: window drift {drift:e} exceeds {threshold:e}")]
    NotConverged { drift: f64, threshold: f64 },

    #[error("Fock truncation breached: population {population:e} in |n = {n_max}>")]
    FockTruncation { population: f64, n_max: usize },

    #[error("configuration error at `{path}`: {message}")]
    Config { path: String, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }

    /// Process exit status used by the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config { .. } | Error::InvalidParameter { .. } | Error::Io(_) => 1,
            Error::NotConverged { .. } => 3,
            _ => 2,
        }
    }

    /// Short machine-readable category.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidParameter { .. } => "invalid_parameter",
            Error::DimensionMismatch { .. } => "dimension_mismatch",
            Error::BesselDomain(_) => "bessel_domain",
            Error::Invariant { .. } => "invariant_violation",
            Error::StepTooLarge { .. } => "step_too_large",
            Error::NotConverged { .. } => "not_converged",
            Error::FockTruncation { .. } => "fock_truncation",
            Error::Config { .. } => "config",
            Error::Io(_) => "io",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
