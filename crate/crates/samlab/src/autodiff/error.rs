use thiserror::Error;

/// Errors raised by tensor construction, tape building, and evaluation.
#[derive(Debug, Error)]
pub enum AutodiffError {
    #[error("shape mismatch in {op}: {detail}")]
    ShapeMismatch { op: &'static str, detail: String },

    #[error("non-finite value produced by {op} at node {node}")]
    NonFinite { op: &'static str, node: usize },

    #[error("non-finite value in external input: {what}")]
    NonFiniteInput { what: String },

    #[error("segment maps differ: {detail}")]
    SegmentMismatch { detail: String },

    #[error("unknown parameter segment '{name}'")]
    UnknownSegment { name: String },

    #[error("duplicate parameter segment '{name}'")]
    DuplicateSegment { name: String },

    #[error("backward called before forward")]
    BackwardBeforeForward,

    #[error("tape has no loss node; call set_loss before forward")]
    MissingLoss,

    #[error("loss node must be a 1x1 scalar, got {rows}x{cols}")]
    NonScalarLoss { rows: usize, cols: usize },

    #[error("invalid operand for {op}: {detail}")]
    InvalidOperand { op: &'static str, detail: String },

    #[error("no value for node {node}; run forward first")]
    ValueUnavailable { node: usize },
}
