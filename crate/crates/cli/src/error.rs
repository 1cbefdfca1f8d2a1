use std::fmt;

use kelly_tails::KellyError;

/// CLI failure classes and their process exit codes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CliError {
    /// Bad flags, config or input data (exit 2).
    Invalid(String),
    /// Valid input describing an infeasible model or allocation (exit 3).
    Infeasible(String),
    /// File system failure (exit 4).
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Invalid(_) => 2,
            CliError::Infeasible(_) => 3,
            CliError::Io(_) => 4,
        }
    }

    pub fn invalid(msg: impl Into<String>) -> Self {
        CliError::Invalid(msg.into())
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Invalid(m) => write!(f, "invalid input: {m}"),
            CliError::Infeasible(m) => write!(f, "infeasible: {m}"),
            CliError::Io(m) => write!(f, "i/o error: {m}"),
        }
    }
}

impl From<KellyError> for CliError {
    fn from(e: KellyError) -> Self {
        let msg = e.to_string();
        match e {
            KellyError::InvalidParameter(_)
            | KellyError::InvalidJoint(_)
            | KellyError::SeriesTooShort { .. }
            | KellyError::Parse { .. }
            | KellyError::EmptyFile => CliError::Invalid(msg),
            KellyError::CalibrationInfeasible { .. }
            | KellyError::DomainViolation { .. }
            | KellyError::NoInteriorMaximum
            | KellyError::SingularCovariance
            | KellyError::DegenerateNormalization
            | KellyError::NewtonStall { .. }
            | KellyError::InfeasibleLeverage(_) => CliError::Infeasible(msg),
            KellyError::Io(_) => CliError::Io(msg),
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;
