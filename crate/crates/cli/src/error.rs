use std::fmt;

use kd_core::KdError;
use thiserror::Error;

/// A configuration problem, with the offending line when there is one.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub line: Option<usize>,
    pub text: Option<String>,
    pub message: String,
}

impl ConfigError {
    pub(crate) fn at(line: usize, text: &str, message: String) -> Self {
        Self {
            line: Some(line),
            text: Some(text.trim().to_string()),
            message,
        }
    }

    pub(crate) fn missing(key: &str, experiment: &str) -> Self {
        Self::general(format!("missing required key `{key}` for {experiment}"))
    }

    pub(crate) fn general(message: String) -> Self {
        Self {
            line: None,
            text: None,
            message,
        }
    }
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (self.line, &self.text) {
            (Some(line), Some(text)) => write!(f, "config line {line} (`{text}`): {}", self.message),
            _ => write!(f, "config: {}", self.message),
        }
    }
}

impl std::error::Error for ConfigError {}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Config(#[from] ConfigError),

    #[error("{0}")]
    Physics(KdError),

    #[error("{0}")]
    Numeric(KdError),

    #[error("oracle mismatch: {0}")]
    Oracle(String),

    #[error("{context}: {source}")]
    Io { context: String, source: std::io::Error },
}

impl From<KdError> for CliError {
    fn from(e: KdError) -> Self {
        if e.is_numeric() {
            CliError::Numeric(e)
        } else {
            CliError::Physics(e)
        }
    }
}

impl CliError {
    pub fn io(context: impl Into<String>, source: std::io::Error) -> Self {
        CliError::Io {
            context: context.into(),
            source,
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Io { .. } => 1,
            CliError::Config(_) => 2,
            CliError::Physics(_) => 3,
            CliError::Numeric(_) | CliError::Oracle(_) => 4,
        }
    }
}
