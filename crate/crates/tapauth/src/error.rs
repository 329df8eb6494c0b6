use std::io;
use std::path::{Path, PathBuf};

/// Harness errors, grouped by the exit code they map to.
#[derive(Debug, thiserror::Error)]
pub enum HarnessError {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("experiment failed: {0}")]
    Experiment(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },

    #[error("{path}: {msg}")]
    Format { path: PathBuf, msg: String },
}

pub type Result<T> = std::result::Result<T, HarnessError>;

impl HarnessError {
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Config(_) => 2,
            HarnessError::Experiment(_) => 3,
            HarnessError::Io { .. } | HarnessError::Format { .. } => 4,
        }
    }

    pub fn io(path: &Path, source: io::Error) -> Self {
        HarnessError::Io {
            path: path.to_path_buf(),
            source,
        }
    }

    pub fn format(path: &Path, msg: impl ToString) -> Self {
        HarnessError::Format {
            path: path.to_path_buf(),
            msg: msg.to_string(),
        }
    }

    pub fn config(msg: impl ToString) -> Self {
        HarnessError::Config(msg.to_string())
    }
}

impl From<tapauth_core::Error> for HarnessError {
    fn from(e: tapauth_core::Error) -> Self {
        match e {
            tapauth_core::Error::InvalidInput(_) | tapauth_core::Error::Domain { .. } => {
                HarnessError::Config(e.to_string())
            }
            _ => HarnessError::Experiment(e.to_string()),
        }
    }
}
