//! Gradient-direction comparisons.
//!
//! The central question for a reused perturbation is whether it still points
//! the same way as the gradients the optimizer actually applies. We answer it
//! with cosine similarity and a sign-based consistency classification.

use crate::autodiff::{GradVector, ParamVector, Tape};

use super::DiagnosticsError;

/// Whether two directions agree in sign.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Consistency {
    Consistent,
    Inconsistent,
}

impl Consistency {
    pub fn is_consistent(self) -> bool {
        matches!(self, Consistency::Consistent)
    }
}

/// Cosine similarity between two vectors, clamped to `[-1, 1]` so that
/// rounding in the norms can never push it outside the geometric range.
///
/// Errors if either vector is all zeros: a zero vector has no direction, and
/// silently mapping it to 0 would count as "orthogonal" in rate statistics.
pub fn cosine_similarity(a: &GradVector, b: &GradVector) -> Result<f64, DiagnosticsError> {
    let (na, nb) = (a.norm2(), b.norm2());
    if na == 0.0 || nb == 0.0 {
        return Err(DiagnosticsError::ZeroVector {
            context: "cosine similarity",
        });
    }
    Ok((a.dot(b)? / (na * nb)).clamp(-1.0, 1.0))
}

/// Classifies a cosine value: non-negative counts as consistent, including
/// exactly zero (an orthogonal pair does not oppose the update direction).
pub fn classify_consistency(cosine: f64) -> Consistency {
    if cosine >= 0.0 {
        Consistency::Consistent
    } else {
        Consistency::Inconsistent
    }
}

/// The exact perturbation direction at `params`: a fresh gradient of the loss.
///
/// Runs on a private clone of the tape so the caller's loss evaluator is left
/// untouched. This costs one forward and one backward pass; callers that
/// track optimizer cost should tally these under a separate diagnostics
/// counter so measurement never inflates a variant's reported cost.
pub fn ground_truth_epsilon(
    tape: &Tape,
    params: &ParamVector,
) -> Result<GradVector, DiagnosticsError> {
    let mut probe = tape.clone();
    probe.forward(params)?;
    Ok(probe.backward()?)
}
