use std::path::Path;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("invalid configuration at `{path}`: {message}")]
    Schema { path: String, message: String },
    #[error("{failed} cell(s) failed:\n{messages}")]
    Lab { failed: usize, messages: String },
    #[error("missing outputs for cell(s): {}", .0.join(", "))]
    MissingOutputs(Vec<String>),
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("{0}")]
    Data(String),
}

impl CliError {
    pub fn schema(path: &str, message: impl Into<String>) -> Self {
        Self::Schema { path: path.to_string(), message: message.into() }
    }

    pub fn io(path: &Path, source: std::io::Error) -> Self {
        Self::Io { path: path.display().to_string(), source }
    }

    /// Prefixes a schema path with the location of the payload it was found in.
    pub(crate) fn within(self, prefix: &str) -> Self {
        match self {
            Self::Schema { path, message } if path == "<root>" => Self::Schema { path: prefix.to_string(), message },
            Self::Schema { path, message } => Self::Schema { path: format!("{prefix}.{path}"), message },
            other => other,
        }
    }

    /// Process exit status for this error.
    pub fn exit_code(&self) -> u8 {
        match self {
            Self::Schema { .. } => 2,
            Self::Lab { .. } => 3,
            Self::MissingOutputs(_) => 4,
            Self::Io { .. } | Self::Data(_) => 1,
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;
