use std::path::{Path, PathBuf};

use imtrans_core::Error as CoreError;

/// Failure of a command, grouped by exit code.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Validation(String),
    #[error("{0}")]
    Numeric(String),
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{}: {detail}", path.display())]
    Format { path: PathBuf, detail: String },
    #[error(transparent)]
    Core(#[from] CoreError),
}

pub type Result<T, E = CliError> = std::result::Result<T, E>;

impl CliError {
    pub fn io(path: impl AsRef<Path>, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.as_ref().to_path_buf(),
            source,
        }
    }

    pub fn format(path: impl AsRef<Path>, detail: impl Into<String>) -> Self {
        CliError::Format {
            path: path.as_ref().to_path_buf(),
            detail: detail.into(),
        }
    }

    /// 0 success, 1 validation, 2 numeric failure, 3 I/O or file format.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) => 1,
            CliError::Numeric(_) | CliError::Core(CoreError::NonFinite { .. }) => 2,
            CliError::Io { .. } | CliError::Format { .. } => 3,
            CliError::Core(_) => 1,
        }
    }
}
