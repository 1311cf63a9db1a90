use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    /// A flag or argument failed validation.
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Core(#[from] manivar::Error),
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{}: {msg}", path.display())]
    Format { path: PathBuf, msg: String },
    #[error("{}: {source}", path.display())]
    Png {
        path: PathBuf,
        source: image::ImageError,
    },
}

impl CliError {
    pub fn usage(msg: impl Into<String>) -> Self {
        CliError::Usage(msg.into())
    }

    /// 2 for invalid input, 3 for geometry failures, 1 for everything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) | CliError::Format { .. } => 2,
            CliError::Core(e) if e.is_geometric() => 3,
            CliError::Core(e) if matches!(e.root(), manivar::Error::InvalidArgument(_)) => 2,
            _ => 1,
        }
    }
}
