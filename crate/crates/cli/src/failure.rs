use drawdown_core::Error;
use serde_json::json;

/// Everything that ends a run with a nonzero status.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] Error),
    #[error("cannot read {path}: {message}")]
    Input { path: String, message: String },
    #[error("{0}")]
    Usage(String),
    /// At least one check of a report failed.
    #[error("{failed} of {total} checks failed")]
    ChecksFailed { failed: usize, total: usize },
    #[error("internal error: {0}")]
    Internal(String),
}

impl CliError {
    /// 1 numerical failure, 2 invalid input, 3 internal error.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Core(e) if e.is_numerical() => 1,
            CliError::ChecksFailed { .. } => 1,
            CliError::Core(_) | CliError::Input { .. } | CliError::Usage(_) => 2,
            CliError::Internal(_) => 3,
        }
    }

    pub fn code(&self) -> &'static str {
        match self {
            CliError::Core(e) => e.code(),
            CliError::Input { .. } => "input",
            CliError::Usage(_) => "usage",
            CliError::ChecksFailed { .. } => "checks-failed",
            CliError::Internal(_) => "internal",
        }
    }

    pub fn to_json(&self) -> String {
        json!({
            "error": {
                "code": self.code(),
                "message": self.to_string(),
                "exit_status": self.exit_code(),
            }
        })
        .to_string()
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
