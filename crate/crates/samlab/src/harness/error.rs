use std::path::PathBuf;

use crate::autodiff::AutodiffError;
use crate::diagnostics::DiagnosticsError;
use crate::models::ModelError;
use crate::optim::OptimError;

/// Errors from experiment configuration, data handling, and run orchestration.
#[derive(Debug, thiserror::Error)]
pub enum HarnessError {
    /// A configuration key, value, or combination is invalid.
    #[error("invalid config: {0}")]
    Config(String),

    /// A text file could not be parsed; points at the offending line.
    #[error("{path}:{line}: {detail}")]
    Parse {
        path: String,
        line: usize,
        detail: String,
    },

    /// A metric or aggregation was requested on unusable inputs.
    #[error("invalid metric input: {0}")]
    Metric(String),

    /// A member run of a comparison aborted with non-finite loss.
    #[error("run {run} diverged at epoch {epoch}, step {step}")]
    Diverged {
        run: PathBuf,
        epoch: u32,
        step: u64,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Model(#[from] ModelError),

    #[error(transparent)]
    Optim(#[from] OptimError),

    #[error(transparent)]
    Autodiff(#[from] AutodiffError),

    #[error(transparent)]
    Diagnostics(#[from] DiagnosticsError),
}
