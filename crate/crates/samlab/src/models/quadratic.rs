use std::sync::Arc;

use crate::autodiff::{GradVector, ParamVector, SegmentMap, Tape, Tensor};

use super::error::ModelError;

/// The mean squared distance to a fixed center: `L(p) = mean((p - c)^2)`.
///
/// A deliberately transparent objective. Its gradient `(2/n)(p - c)` and
/// constant Hessian `(2/n) I` are known in closed form, which makes it the
/// reference surface for optimizer and curvature tests: every tape result can
/// be checked against arithmetic done by hand.
#[derive(Debug, Clone)]
pub struct QuadraticBowl {
    center: ParamVector,
}

impl QuadraticBowl {
    pub fn new(center: ParamVector) -> Self {
        Self { center }
    }

    /// A bowl over a single `theta` row vector centered at the origin.
    pub fn standard(dim: usize) -> Result<Self, ModelError> {
        let map = SegmentMap::new(&[("theta", 1, dim)])
            .map_err(|e| ModelError::Config(e.to_string()))?;
        Ok(Self { center: ParamVector::zeros(&map) })
    }

    pub fn map(&self) -> &Arc<SegmentMap> {
        self.center.map()
    }

    /// Records the loss so the same tape machinery used by the real models
    /// evaluates the bowl. Each segment contributes its squared error scaled
    /// by its share of the coordinates, so the total is the global mean.
    pub fn build_tape(&self) -> Result<Tape, ModelError> {
        let mut tape = Tape::new();
        let total = self.center.len() as f64;
        let mut acc = None;
        for seg in self.center.map().segments() {
            let p = tape.param(&seg.name, seg.rows, seg.cols)?;
            let c = Tensor::new(seg.rows, seg.cols, self.center.segment(&seg.name)?.to_vec())?;
            let se = tape.squared_error_mean(p, c)?;
            let weighted = tape.scale(se, (seg.rows * seg.cols) as f64 / total)?;
            acc = Some(match acc {
                None => weighted,
                Some(prev) => tape.add(prev, weighted)?,
            });
        }
        let loss = acc.ok_or_else(|| ModelError::Config("empty segment map".to_string()))?;
        tape.set_loss(loss)?;
        Ok(tape)
    }

    pub fn loss_analytic(&self, params: &ParamVector) -> Result<f64, ModelError> {
        let diff = params.axpy(-1.0, &self.center).map_err(|e| ModelError::Config(e.to_string()))?;
        let n = diff.len() as f64;
        Ok(diff.as_slice().iter().map(|d| d * d).sum::<f64>() / n)
    }

    pub fn gradient_analytic(&self, params: &ParamVector) -> Result<GradVector, ModelError> {
        let diff = params.axpy(-1.0, &self.center).map_err(|e| ModelError::Config(e.to_string()))?;
        Ok(diff.scale(2.0 / diff.len() as f64))
    }

    /// Largest eigenvalue of the (constant) Hessian `(2/n) I`.
    pub fn curvature(&self) -> f64 {
        2.0 / self.center.len() as f64
    }
}
