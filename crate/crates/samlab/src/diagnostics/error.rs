use crate::autodiff::AutodiffError;

/// Errors from diagnostic measurements and their CSV persistence.
#[derive(Debug, thiserror::Error)]
pub enum DiagnosticsError {
    /// A direction or similarity was requested for an all-zero vector.
    #[error("zero vector has no direction for {context}")]
    ZeroVector { context: &'static str },

    /// A precondition on diagnostic inputs was violated.
    #[error("invalid diagnostics input: {0}")]
    Input(String),

    /// A CSV file could not be parsed; points at the offending line.
    #[error("{path}:{line}: {detail}")]
    Parse {
        path: String,
        line: usize,
        detail: String,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Autodiff(#[from] AutodiffError),
}
