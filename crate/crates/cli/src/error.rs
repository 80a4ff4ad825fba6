use std::path::PathBuf;

use ktc_core::KineticError;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("`{key}`: {message}")]
    Range { key: &'static str, message: String },

    #[error("missing required key `{0}`")]
    Missing(&'static str),

    #[error("{path}: {message}")]
    File { path: PathBuf, message: String },

    #[error(transparent)]
    Kinetic(#[from] KineticError),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl CliError {
    pub(crate) fn range(key: &'static str, message: impl Into<String>) -> Self {
        CliError::Range {
            key,
            message: message.into(),
        }
    }

    pub(crate) fn file(path: impl Into<PathBuf>, message: impl Into<String>) -> Self {
        CliError::File {
            path: path.into(),
            message: message.into(),
        }
    }

    /// Process exit code: 2 for runtime invariant violations, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Kinetic(e) if e.is_invariant_violation() => 2,
            _ => 1,
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;
