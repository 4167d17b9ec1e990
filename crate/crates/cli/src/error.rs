use plap_core::Error as CoreError;

/// Failures, grouped by exit code.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    /// Bad flags, config or input files.
    #[error("{0}")]
    Usage(String),
    /// The mathematics did not cooperate: divergence, instability, a failed check.
    #[error("{message}")]
    Outcome { message: String, report: Option<serde_json::Value> },
    #[error("internal error: {0}")]
    Internal(String),
}

pub type CliResult<T> = std::result::Result<T, CliError>;

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Outcome { .. } => 3,
            CliError::Internal(_) => 4,
        }
    }

    pub fn outcome(message: impl Into<String>) -> Self {
        CliError::Outcome { message: message.into(), report: None }
    }
}

impl From<CoreError> for CliError {
    fn from(e: CoreError) -> Self {
        match e {
            CoreError::InvalidArgument(_) | CoreError::RegimeMismatch(_) | CoreError::BadWindow { .. } | CoreError::OutsideTable { .. } => {
                CliError::Usage(e.to_string())
            }
            CoreError::NonFinite { .. }
            | CoreError::SingularMass
            | CoreError::NonFiniteCoefficient { .. }
            | CoreError::MissingAntiderivative => CliError::Internal(e.to_string()),
            _ => CliError::outcome(e.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Usage(format!("i/o: {e}"))
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Internal(format!("json: {e}"))
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Usage(format!("csv: {e}"))
    }
}
