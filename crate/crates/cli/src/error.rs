use std::process::ExitCode;

use privspi_core::Error as CoreError;

/// Failure classes, each with its own process exit status.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Failure {
    Other,
    Config,
    Io,
    NonConvergence,
    BundleFormat,
}

impl Failure {
    pub fn exit_code(self) -> u8 {
        match self {
            Failure::Other => 1,
            Failure::Config => 2,
            Failure::Io => 3,
            Failure::NonConvergence => 4,
            Failure::BundleFormat => 5,
        }
    }
}

#[derive(Debug, thiserror::Error)]
#[error("{message}")]
pub struct CliError {
    pub kind: Failure,
    pub message: String,
}

impl CliError {
    pub fn new(kind: Failure, message: impl Into<String>) -> Self {
        Self {
            kind,
            message: message.into(),
        }
    }

    pub fn config(message: impl Into<String>) -> Self {
        Self::new(Failure::Config, message)
    }

    pub fn io(path: &std::path::Path, err: impl std::fmt::Display) -> Self {
        Self::new(Failure::Io, format!("{}: {err}", path.display()))
    }

    pub fn exit_code(&self) -> ExitCode {
        ExitCode::from(self.kind.exit_code())
    }

    /// Prefixes the message with where the error came from.
    pub fn context(mut self, what: impl std::fmt::Display) -> Self {
        self.message = format!("{what}: {}", self.message);
        self
    }
}

impl From<CoreError> for CliError {
    fn from(err: CoreError) -> Self {
        let kind = match &err {
            CoreError::Config(_)
            | CoreError::Dimension { .. }
            | CoreError::InvalidArgument(_)
            | CoreError::Parse { .. } => Failure::Config,
            CoreError::Io(_) => Failure::Io,
            CoreError::VersionMismatch { .. }
            | CoreError::Truncated(_)
            | CoreError::Checksum
            | CoreError::Malformed(_) => Failure::BundleFormat,
        };
        CliError::new(kind, err.to_string())
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
