use thiserror::Error;

/// Every failure the library can report.
///
/// Variants carry plain data (no boxed sources) so results can be cloned into
/// per-row sweep output and compared in tests.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum KellyError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("calibration infeasible: implied center variance {variance:.6e} is not positive")]
    CalibrationInfeasible { variance: f64 },

    #[error("leverage {leverage} leaves a non-positive wealth factor {factor:.6e} for outcome {outcome}")]
    DomainViolation { leverage: f64, outcome: f64, factor: f64 },

    #[error("growth is monotone on the feasible domain; no interior maximum exists")]
    NoInteriorMaximum,

    #[error("covariance matrix is not positive-definite")]
    SingularCovariance,

    #[error("tangency normalization 1'C^-1 M is zero")]
    DegenerateNormalization,

    #[error("invalid joint model: {0}")]
    InvalidJoint(String),

    #[error("Newton ascent stalled after {iterations} iterations (gradient norm {gradient_norm:.3e})")]
    NewtonStall { iterations: usize, gradient_norm: f64 },

    #[error("leverage {0} is infeasible for the model")]
    InfeasibleLeverage(f64),

    #[error("series has {len} observations, at least {min} are required")]
    SeriesTooShort { len: usize, min: usize },

    #[error("parse error on line {line}: {message}")]
    Parse { line: u64, message: String },

    #[error("file contains no data")]
    EmptyFile,

    #[error("i/o error: {0}")]
    Io(String),
}

impl KellyError {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        KellyError::InvalidParameter(msg.into())
    }
}

impl From<std::io::Error> for KellyError {
    fn from(e: std::io::Error) -> Self {
        KellyError::Io(e.to_string())
    }
}

pub type Result<T, E = KellyError> = std::result::Result<T, E>;
