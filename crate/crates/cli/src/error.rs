use std::path::PathBuf;

use serde::Serialize;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Solver(#[from] mfpmp_core::Error),
}

/// Process exit status of a finished run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExitStatus {
    Success,
    ConfigError,
    Divergence,
    LineSearchFailure,
    ValidationFailure,
    IoError,
    InternalError,
}

impl ExitStatus {
    pub fn code(self) -> i32 {
        match self {
            ExitStatus::Success => 0,
            ExitStatus::IoError | ExitStatus::InternalError => 1,
            ExitStatus::ConfigError => 2,
            ExitStatus::Divergence => 3,
            ExitStatus::LineSearchFailure => 4,
            ExitStatus::ValidationFailure => 5,
        }
    }
}

impl CliError {
    pub fn status(&self) -> ExitStatus {
        match self {
            CliError::Config(_) => ExitStatus::ConfigError,
            CliError::Io { .. } => ExitStatus::IoError,
            CliError::Solver(mfpmp_core::Error::Divergence { .. }) => ExitStatus::Divergence,
            CliError::Solver(_) => ExitStatus::InternalError,
        }
    }

    /// One-line JSON for stderr.
    pub fn report(&self) -> String {
        let category = match self.status() {
            ExitStatus::ConfigError => "config",
            ExitStatus::Divergence => "divergence",
            ExitStatus::IoError => "io",
            _ => "internal",
        };
        serde_json::json!({ "category": category, "message": self.to_string() }).to_string()
    }
}
