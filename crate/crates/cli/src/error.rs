use std::path::Path;

use flowmap_core::error::{FieldError, FlowMapError, ReconstructError, SurrogateError};

/// Everything that ends a run, grouped by exit code.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),
    #[error("{0}")]
    Io(String),
    #[error("{0}")]
    Numeric(String),
}

impl CliError {
    pub fn io(path: &Path, e: impl std::fmt::Display) -> Self {
        CliError::Io(format!("{}: {e}", path.display()))
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Io(_) => 3,
            CliError::Numeric(_) => 4,
        }
    }
}

impl From<FieldError> for CliError {
    fn from(e: FieldError) -> Self {
        match e {
            FieldError::Io { .. } | FieldError::SizeMismatch { .. } => CliError::Io(e.to_string()),
            FieldError::NonFinite { .. } => CliError::Numeric(e.to_string()),
            _ => CliError::Config(e.to_string()),
        }
    }
}

impl From<FlowMapError> for CliError {
    fn from(e: FlowMapError) -> Self {
        match e {
            FlowMapError::Field(inner) => inner.into(),
            FlowMapError::Io { .. } | FlowMapError::Format(_) | FlowMapError::Shape(_) => CliError::Io(e.to_string()),
            _ => CliError::Config(e.to_string()),
        }
    }
}

impl From<SurrogateError> for CliError {
    fn from(e: SurrogateError) -> Self {
        match e {
            SurrogateError::NonFiniteLoss { .. } => CliError::Numeric(e.to_string()),
            SurrogateError::Io { .. } | SurrogateError::Format(_) | SurrogateError::Checksum { .. } => {
                CliError::Io(e.to_string())
            }
            _ => CliError::Config(e.to_string()),
        }
    }
}

impl From<ReconstructError> for CliError {
    fn from(e: ReconstructError) -> Self {
        match e {
            ReconstructError::Field(inner) => inner.into(),
            ReconstructError::FlowMap(inner) => inner.into(),
            ReconstructError::Surrogate(inner) => inner.into(),
            ReconstructError::Io { .. } => CliError::Io(e.to_string()),
            ReconstructError::Degenerate(..) | ReconstructError::InvalidError(_) => CliError::Numeric(e.to_string()),
            _ => CliError::Config(e.to_string()),
        }
    }
}
