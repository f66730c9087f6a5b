use thiserror::Error;

use crate::autodiff::AutodiffError;

/// Errors from model configuration, graph validation, and tape assembly.
#[derive(Debug, Error)]
pub enum ModelError {
    #[error("invalid model config: {0}")]
    Config(String),

    #[error("invalid graph: {0}")]
    Graph(String),

    #[error("invalid batch: {0}")]
    Batch(String),

    #[error("batch is empty")]
    EmptyBatch,

    #[error("batch does not match model: {0}")]
    BatchMismatch(String),

    #[error(transparent)]
    Autodiff(#[from] AutodiffError),
}
