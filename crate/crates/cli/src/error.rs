use std::fmt;

use serde::Serialize;
use serde_json::{json, Value};

/// Error reported on stderr as `{code, message, context}`.
#[derive(Debug, Serialize)]
pub struct CliError {
    pub code: String,
    pub message: String,
    pub context: Value,
}

impl CliError {
    pub fn new(code: &str, message: impl Into<String>) -> CliError {
        CliError { code: code.to_string(), message: message.into(), context: Value::Null }
    }

    pub fn with(mut self, key: &str, value: impl Serialize) -> CliError {
        if !self.context.is_object() {
            self.context = json!({});
        }
        self.context[key] = serde_json::to_value(value).unwrap_or(Value::Null);
        self
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.code, self.message)
    }
}

impl From<markov_noise::Error> for CliError {
    fn from(e: markov_noise::Error) -> CliError {
        CliError::new(e.code(), e.to_string())
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> CliError {
        CliError::new("Io", e.to_string())
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> CliError {
        CliError::new("Csv", e.to_string())
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> CliError {
        CliError::new("Json", e.to_string())
    }
}

pub type CliResult<T> = Result<T, CliError>;
