use serde_json::json;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{field}: {message}")]
    Validation { field: String, message: String },

    #[error("{0}")]
    Io(String),

    /// A study could not run at all, as opposed to per-path failures.
    #[error("{0}")]
    Numerical(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation { .. } | CliError::Io(_) => 1,
            CliError::Numerical(_) => 2,
        }
    }

    /// One-line JSON record for stderr.
    pub fn record(&self) -> String {
        let v = match self {
            CliError::Validation { field, message } => {
                json!({"error": "validation", "field": field, "message": message})
            }
            CliError::Io(m) => json!({"error": "io", "message": m}),
            CliError::Numerical(m) => json!({"error": "numerical", "message": m}),
        };
        v.to_string()
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}
