use crate::autodiff::AutodiffError;

/// Failures raised by optimizer construction or stepping.
#[derive(Debug, thiserror::Error)]
pub enum OptimError {
    /// A hyperparameter is outside its documented range.
    #[error("invalid optimizer config: {0}")]
    Config(String),

    /// The optimizer was driven in an unsupported order.
    #[error("optimizer state error: {0}")]
    State(String),

    /// The objective failed to evaluate.
    #[error(transparent)]
    Autodiff(#[from] AutodiffError),
}
