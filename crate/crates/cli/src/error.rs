use std::path::PathBuf;

use kdv_core::KdvError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum LabError {
    #[error("{field}: {message}")]
    Config { field: String, message: String },

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{context}: {source}")]
    Core {
        context: String,
        #[source]
        source: KdvError,
    },
}

impl LabError {
    /// Stable kebab-case name printed in front of the message.
    pub fn name(&self) -> &'static str {
        match self {
            LabError::Config { .. } => "config-error",
            LabError::Io { .. } => "io-error",
            LabError::Core { source, .. } => source.name(),
        }
    }
}

/// Attaches a context string to core errors.
pub trait Context<T> {
    fn context(self, what: &str) -> Result<T, LabError>;
}

impl<T> Context<T> for kdv_core::Result<T> {
    fn context(self, what: &str) -> Result<T, LabError> {
        self.map_err(|source| LabError::Core {
            context: what.to_string(),
            source,
        })
    }
}
