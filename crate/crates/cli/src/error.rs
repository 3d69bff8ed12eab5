use std::path::PathBuf;

use serde_json::json;

use crate::config::Violation;

#[derive(Debug, thiserror::Error)]
pub enum AppError {
    #[error("config violates schema ({} violation(s))", .0.len())]
    Schema(Vec<Violation>),
    #[error("malformed input: {0}")]
    Input(String),
    #[error(transparent)]
    Numerical(#[from] clockphase_core::Error),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl AppError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        AppError::Io { path: path.into(), source }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            AppError::Schema(_) | AppError::Input(_) => 2,
            AppError::Numerical(_) => 3,
            AppError::Io { .. } => 4,
        }
    }

    /// Machine-readable form printed on standard error.
    pub fn to_json(&self) -> serde_json::Value {
        let kind = match self {
            AppError::Schema(_) | AppError::Input(_) => "schema",
            AppError::Numerical(_) => "numerical",
            AppError::Io { .. } => "io",
        };
        let mut v = json!({ "error": kind, "code": self.exit_code(), "message": self.to_string() });
        if let AppError::Schema(violations) = self {
            v["violations"] = json!(violations);
        }
        v
    }
}

pub type AppResult<T> = Result<T, AppError>;
