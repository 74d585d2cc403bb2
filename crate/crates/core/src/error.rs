use std::io;
use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DomainError {
    #[error("degenerate domain [{x_min}, {x_max}] x [{y_min}, {y_max}]")]
    Degenerate { x_min: f64, x_max: f64, y_min: f64, y_max: f64 },
}

#[derive(Debug, Error)]
pub enum FieldError {
    #[error("position ({x}, {y}) lies outside the field domain")]
    OutOfDomain { x: f64, y: f64 },
    #[error("time {t} outside the stored range [0, {max}]")]
    TimeOutOfRange { t: f64, max: f64 },
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("invalid field descriptor: {0}")]
    Descriptor(String),
    #[error("velocity blob holds {actual} bytes, expected {expected}")]
    SizeMismatch { expected: u64, actual: u64 },
    #[error("non-finite velocity value at element {index}")]
    NonFinite { index: usize },
    #[error(transparent)]
    Domain(#[from] DomainError),
}

#[derive(Debug, Error)]
pub enum FlowMapError {
    #[error("invalid extraction config: {0}")]
    Config(String),
    #[error("advection failed: {0}")]
    Field(#[from] FieldError),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("malformed npy file: {0}")]
    Format(String),
    #[error("dataset shape {0:?} is not [rows, seeds, 3]")]
    Shape(Vec<usize>),
    #[error("invalid dataset metadata: {0}")]
    Metadata(String),
}

#[derive(Debug, Error)]
pub enum SurrogateError {
    #[error("invalid architecture: {0}")]
    Architecture(String),
    #[error("invalid training config: {0}")]
    Config(String),
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("non-finite loss at epoch {epoch}, batch {batch} (lr = {lr:e})")]
    NonFiniteLoss { epoch: usize, batch: usize, lr: f64 },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("malformed model file: {0}")]
    Format(String),
    #[error("model checksum mismatch (stored {stored:#010x}, computed {computed:#010x})")]
    Checksum { stored: u32, computed: u32 },
}

#[derive(Debug, Error)]
pub enum ReconstructError {
    #[error("file cycle {cycle} is not a multiple of {interval} within [{interval}, {max}]")]
    BadCycle { cycle: u32, interval: u32, max: u32 },
    #[error("stitched inference needs the cycle prefix C, 2C, ..., kC; got {0:?}")]
    NonPrefixCycles(Vec<u32>),
    #[error("model was trained with the {model} strategy, {requested} requested")]
    StrategyMismatch { model: String, requested: String },
    #[error("trajectories cover different file cycles")]
    MismatchedCycles,
    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("no errors to summarize")]
    Empty,
    #[error("invalid FTLE request: {0}")]
    InvalidGrid(String),
    #[error("degenerate deformation at grid node ({0}, {1})")]
    Degenerate(usize, usize),
    #[error("trajectory error {0} is negative or non-finite")]
    InvalidError(f64),
    #[error(transparent)]
    Surrogate(#[from] SurrogateError),
    #[error(transparent)]
    Domain(#[from] DomainError),
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error(transparent)]
    FlowMap(#[from] FlowMapError),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
}
