//! Toolkit error type and its mapping onto process exit codes.
//!
//! Two failure families matter to callers: problems reaching or decoding
//! bytes (exit code 1) and problems with the meaning of otherwise readable
//! input — bad flags, inconsistent manifests, degenerate fits (exit code 2).

use std::path::Path;

/// Any failure a toolkit command can report.
#[derive(Debug, thiserror::Error)]
pub enum ToolError {
    /// Filesystem-level failure: missing paths, permission problems,
    /// truncated streams.
    #[error("i/o error: {0}")]
    Io(String),
    /// The bytes were readable but not decodable as the claimed format.
    #[error("format error: {0}")]
    Format(String),
    /// Input was well-formed but semantically unusable.
    #[error("validation error: {0}")]
    Validation(String),
}

impl ToolError {
    /// Process exit code for this failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            ToolError::Io(_) | ToolError::Format(_) => 1,
            ToolError::Validation(_) => 2,
        }
    }

    /// Annotates an I/O error with the path it concerned.
    pub fn io(path: &Path, err: std::io::Error) -> Self {
        ToolError::Io(format!("{}: {err}", path.display()))
    }
}

impl From<driqa_core::Error> for ToolError {
    fn from(err: driqa_core::Error) -> Self {
        ToolError::Validation(err.to_string())
    }
}

impl From<std::io::Error> for ToolError {
    fn from(err: std::io::Error) -> Self {
        ToolError::Io(err.to_string())
    }
}

/// Toolkit-wide result alias.
pub type Result<T> = std::result::Result<T, ToolError>;
