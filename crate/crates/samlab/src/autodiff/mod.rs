//! Reverse-mode automatic differentiation over dense-matrix primitives.
//!
//! The building blocks are deliberately small: a [`Tensor`] is a row-major
//! matrix, a [`ParamVector`] is a flat array with named segments, and a
//! [`Tape`] records a computation once per batch and replays it at arbitrary
//! parameter values. Everything is `f64` with fixed sequential accumulation
//! order, so losses and gradients are bit-identical across repeated runs.

mod error;
mod gradcheck;
mod tape;
mod tensor;
mod vector;

pub use error::AutodiffError;
pub use gradcheck::{finite_difference_gradient, max_relative_error};
pub use tape::{NodeId, Tape};
pub use tensor::Tensor;
pub use vector::{GradVector, ParamVector, SegmentMap, SegmentSpec};
