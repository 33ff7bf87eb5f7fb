use std::path::Path;

use gdtune_core::Error as CoreError;
use serde_json::json;

pub type Result<T, E = CliError> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    /// Malformed input text; `at` is a field path or `line L, column C`.
    #[error("parse error at {at}: {message}")]
    Parse { at: String, message: String },

    #[error("config error: {0}")]
    Config(String),

    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },

    /// A verification command found disagreements.
    #[error("check failed: {0}")]
    Check(String),

    #[error(transparent)]
    Core(#[from] CoreError),
}

impl CliError {
    pub fn parse(at: impl Into<String>, message: impl Into<String>) -> Self {
        CliError::Parse {
            at: at.into(),
            message: message.into(),
        }
    }

    pub fn io(path: &Path, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.display().to_string(),
            source,
        }
    }

    pub fn code(&self) -> &'static str {
        match self {
            CliError::Parse { .. } => "parse_error",
            CliError::Config(_) => "config_error",
            CliError::Io { .. } => "io_error",
            CliError::Check(_) => "check_failed",
            CliError::Core(e) => e.code(),
        }
    }

    /// 2 for configuration and input problems, 3 for budget or degenerate
    /// trajectories, 1 for anything else.
    pub fn exit_status(&self) -> i32 {
        match self {
            CliError::Parse { .. } | CliError::Config(_) | CliError::Io { .. } => 2,
            CliError::Check(_) => 1,
            CliError::Core(e) => match e.root() {
                CoreError::SymbolicBudgetExceeded { .. }
                | CoreError::BudgetExceeded { .. }
                | CoreError::DegenerateTrajectory { .. }
                | CoreError::NonFiniteIterate { .. } => 3,
                CoreError::InvalidConfig(_)
                | CoreError::Dimension { .. }
                | CoreError::DomainMismatch
                | CoreError::CapExceeded { .. }
                | CoreError::MissingPiece(_)
                | CoreError::Empty(_) => 2,
                _ => 1,
            },
        }
    }

    pub fn instance(&self) -> Option<&str> {
        match self {
            CliError::Core(e) => e.instance(),
            _ => None,
        }
    }

    /// One-line JSON record written to standard error.
    pub fn record(&self) -> String {
        json!({
            "error": self.code(),
            "exit": self.exit_status(),
            "instance": self.instance(),
            "message": self.to_string(),
        })
        .to_string()
    }
}
