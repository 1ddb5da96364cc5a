use std::io;
use std::path::PathBuf;

/// Failures of the experiment runner.
#[derive(Debug, thiserror::Error)]
pub enum LabError {
    /// Every problem found in a configuration, in file order.
    #[error("invalid configuration:\n  {}", .0.join("\n  "))]
    Config(Vec<String>),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    /// A data file that does not follow its schema.
    #[error("{path}: {message}")]
    Format { path: PathBuf, message: String },
    #[error(transparent)]
    Core(#[from] viscoplate::Error),
}

impl LabError {
    pub fn config(message: impl Into<String>) -> Self {
        LabError::Config(vec![message.into()])
    }

    pub fn io(path: impl Into<PathBuf>, source: io::Error) -> Self {
        LabError::Io {
            path: path.into(),
            source,
        }
    }

    pub fn format(path: impl Into<PathBuf>, message: impl Into<String>) -> Self {
        LabError::Format {
            path: path.into(),
            message: message.into(),
        }
    }

    /// Process exit status: configuration problems are `1`, as are run failures.
    pub fn exit_code(&self) -> u8 {
        1
    }
}

pub type Result<T> = std::result::Result<T, LabError>;
