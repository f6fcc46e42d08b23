//! JSON model and solution documents and DOT export.

mod document;
mod dot;
mod solution;

use std::path::Path;

use thiserror::Error;

use crate::model::ModelError;

pub use document::{model_from_json, model_to_json, read_model, write_model, SCHEMA_VERSION};
pub use dot::{export_dot, DotOptions, PALETTE};
pub use solution::{read_solution, solution_from_json, solution_to_json, write_solution, SolutionDocument};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum IoError {
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse { line: usize, column: usize, message: String },
    #[error("unsupported schema version {found} (this build reads version {supported})")]
    Schema { found: u64, supported: u64 },
    #[error("unresolved reference `{0}`")]
    Reference(String),
    #[error("invalid document: {0}")]
    Invalid(String),
    #[error("{path}: {message}")]
    File { path: String, message: String },
    #[error(transparent)]
    Model(#[from] ModelError),
}

impl From<serde_json::Error> for IoError {
    fn from(e: serde_json::Error) -> Self {
        IoError::Parse { line: e.line(), column: e.column(), message: e.to_string() }
    }
}

pub(crate) fn read_text(path: &Path) -> Result<String, IoError> {
    std::fs::read_to_string(path).map_err(|e| IoError::File { path: path.display().to_string(), message: e.to_string() })
}

pub(crate) fn write_text(path: &Path, text: &str) -> Result<(), IoError> {
    std::fs::write(path, text).map_err(|e| IoError::File { path: path.display().to_string(), message: e.to_string() })
}

/// Pretty JSON with sorted keys and a trailing newline.
pub(crate) fn canonical<S: serde::Serialize>(doc: &S) -> String {
    let value = serde_json::to_value(doc).expect("documents serialize to JSON");
    let mut text = serde_json::to_string_pretty(&value).expect("JSON values render");
    text.push('\n');
    text
}
