use std::path::PathBuf;

use serde_json::json;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{message}")]
    Config {
        key: Option<String>,
        message: String,
    },
    #[error("{path}: {message}")]
    Io { path: PathBuf, message: String },
    #[error(transparent)]
    Core(#[from] twinfront::Error),
    #[error(transparent)]
    Artifact(#[from] twinfront::io::IoError),
}

impl CliError {
    pub fn key(name: &str, message: impl Into<String>) -> Self {
        Self::Config {
            key: Some(name.to_string()),
            message: message.into(),
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Self::Config { .. } => "config",
            Self::Io { .. } => "io",
            Self::Core(twinfront::Error::InvalidParameter { .. }) => "config",
            Self::Core(_) => "numerics",
            Self::Artifact(_) => "artifact",
        }
    }

    /// The configuration key at fault, if any.
    pub fn key_name(&self) -> Option<&str> {
        match self {
            Self::Config { key, .. } => key.as_deref(),
            Self::Core(twinfront::Error::InvalidParameter { name, .. }) => Some(name),
            _ => None,
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self.kind() {
            "config" => 2,
            _ => 1,
        }
    }

    /// Single-line JSON diagnostic.
    pub fn to_line(&self) -> String {
        json!({
            "error": self.kind(),
            "key": self.key_name(),
            "message": self.to_string(),
        })
        .to_string()
    }
}
