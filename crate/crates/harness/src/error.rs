use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum HarnessError {
    /// Unreadable or schema-invalid configuration. The message names the key.
    #[error("config error: {0}")]
    Config(String),
    #[error("simulation rejected input: {0}")]
    Simulation(#[from] cstream_core::Error),
    #[error("validation failed: {0}")]
    Validation(String),
    #[error("cannot {action} {}: {source}", path.display())]
    Io {
        action: &'static str,
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl HarnessError {
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Validation(_) => 1,
            HarnessError::Config(_) | HarnessError::Io { .. } => 2,
            HarnessError::Simulation(_) => 3,
        }
    }

    pub(crate) fn config(msg: impl Into<String>) -> Self {
        HarnessError::Config(msg.into())
    }
}

pub type Result<T> = std::result::Result<T, HarnessError>;
