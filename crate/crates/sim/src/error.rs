//! Harness-level errors.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum SimError {
    #[error("config error: {0}")]
    Config(String),

    #[error("protocol error: {0}")]
    Core(#[from] epimpc_core::Error),

    #[error("oracle mismatch in {context}: protocol output diverged from plaintext ground truth")]
    OracleMismatch { context: String },

    #[error("wire format error: {0}")]
    Wire(String),

    #[error("snapshot error: {0}")]
    Snapshot(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, SimError>;
