use std::path::PathBuf;

#[derive(Debug, thiserror::Error)]
pub enum HarnessError {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("config key `{key}`: {message}")]
    Config { key: String, message: String },
    #[error(transparent)]
    Core(#[from] bo_core::Error),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {message}")]
    Format { path: PathBuf, message: String },
    #[error("{0} already exists (pass --force to overwrite)")]
    Exists(PathBuf),
    #[error("{failed} of {total} sweep cells failed")]
    CellsFailed { failed: usize, total: usize },
}

impl HarnessError {
    pub(crate) fn config(key: &str, message: impl Into<String>) -> Self {
        HarnessError::Config {
            key: key.to_string(),
            message: message.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        HarnessError::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn format(path: impl Into<PathBuf>, message: impl ToString) -> Self {
        HarnessError::Format {
            path: path.into(),
            message: message.to_string(),
        }
    }

    /// Process exit code: 2 for bad input, 1 for failed work.
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Syntax { .. } | HarnessError::Config { .. } | HarnessError::Exists(_) => 2,
            HarnessError::Core(bo_core::Error::Config { .. }) => 2,
            _ => 1,
        }
    }
}

pub type Result<T> = std::result::Result<T, HarnessError>;
