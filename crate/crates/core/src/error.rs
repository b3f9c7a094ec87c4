use thiserror::Error;

/// Errors raised anywhere in the simulation pipeline.
///
/// The CLI maps each variant onto a process exit code through
/// [`Error::exit_code`].
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid layout: fock_cutoff must be >= 2, got {0}")]
    InvalidLayout(usize),

    #[error("layout mismatch: {left} vs {right} Fock levels")]
    LayoutMismatch { left: usize, right: usize },

    #[error("non-finite entry encountered in {0}")]
    NonFinite(&'static str),

    #[error("operator is not Hermitian (max deviation {deviation:e})")]
    NonHermitian { deviation: f64 },

    #[error("truncation overflow: |alpha|^2 = {alpha_sq:e} exceeds fock_cutoff/4 = {limit}")]
    TruncationOverflow { alpha_sq: f64, limit: f64 },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: String, reason: String },

    #[error("negative magnetic field {0:e} T")]
    NegativeField(f64),

    #[error("first-order expansion invalid: |omega_g * t_star| = {0:e} >= 1e-2")]
    FirstOrderGuard(f64),

    #[error("off resonance: lambda * t_star = {0} is not pi")]
    OffResonance(f64),

    #[error("weak regime violated: margin {margin:e} >= 0.1")]
    WeakRegimeViolation { margin: f64 },

    #[error("post-selection probability {0:e} is numerically zero")]
    ZeroProbability(f64),

    #[error("degenerate distribution: outcome {index} has probability {probability:e}")]
    DegenerateDistribution { index: usize, probability: f64 },

    #[error("{what} did not converge (change {change:e} > tolerance {tolerance:e})")]
    NonConverged {
        what: &'static str,
        change: f64,
        tolerance: f64,
    },

    #[error("non-physical state at t = {time:e} s: trace error {trace_error:e}, min eigenvalue {min_eigenvalue:e}")]
    NonPhysicalState {
        time: f64,
        trace_error: f64,
        min_eigenvalue: f64,
    },

    #[error("damping calibration failed for target fidelity {target}: {reason}")]
    CalibrationFailed { target: f64, reason: String },

    #[error("config error at `{key}`: {message}")]
    Config { key: String, message: String },

    #[error("i/o error on {path}: {message}")]
    Io { path: String, message: String },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn param(name: &str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name: name.to_string(),
            reason: reason.into(),
        }
    }

    pub(crate) fn config(key: &str, message: impl Into<String>) -> Self {
        Error::Config {
            key: key.to_string(),
            message: message.into(),
        }
    }

    /// 1 = config, 2 = physics regime, 3 = numerical failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config { .. }
            | Error::InvalidParameter { .. }
            | Error::InvalidLayout(_)
            | Error::NegativeField(_)
            | Error::Io { .. } => 1,
            Error::WeakRegimeViolation { .. }
            | Error::TruncationOverflow { .. }
            | Error::FirstOrderGuard(_)
            | Error::OffResonance(_)
            | Error::ZeroProbability(_) => 2,
            Error::NonConverged { .. }
            | Error::NonPhysicalState { .. }
            | Error::CalibrationFailed { .. }
            | Error::NonFinite(_)
            | Error::NonHermitian { .. }
            | Error::LayoutMismatch { .. }
            | Error::DegenerateDistribution { .. } => 3,
        }
    }
}
