use std::sync::Arc;

use super::error::AutodiffError;
use super::tensor::Tensor;

/// Location and shape of one named parameter block inside a flat vector.
#[derive(Debug, Clone, PartialEq)]
pub struct SegmentSpec {
    pub name: String,
    pub rows: usize,
    pub cols: usize,
    pub offset: usize,
}

impl SegmentSpec {
    pub fn len(&self) -> usize {
        self.rows * self.cols
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Ordered, disjoint layout of named segments over one flat array.
#[derive(Debug, PartialEq)]
pub struct SegmentMap {
    segments: Vec<SegmentSpec>,
    total_len: usize,
}

impl SegmentMap {
    /// Lays segments out back-to-back in the given order.
    pub fn new(shapes: &[(&str, usize, usize)]) -> Result<Arc<Self>, AutodiffError> {
        let mut segments = Vec::with_capacity(shapes.len());
        let mut offset = 0;
        for (name, rows, cols) in shapes {
            if segments.iter().any(|s: &SegmentSpec| s.name == *name) {
                return Err(AutodiffError::DuplicateSegment { name: (*name).to_string() });
            }
            segments.push(SegmentSpec { name: (*name).to_string(), rows: *rows, cols: *cols, offset });
            offset += rows * cols;
        }
        Ok(Arc::new(Self { segments, total_len: offset }))
    }

    pub fn segments(&self) -> &[SegmentSpec] {
        &self.segments
    }

    pub fn total_len(&self) -> usize {
        self.total_len
    }

    pub fn get(&self, name: &str) -> Option<&SegmentSpec> {
        self.segments.iter().find(|s| s.name == name)
    }
}

/// Flat `f64` vector with a shared segment map.
///
/// Gradients share this representation: [`GradVector`] is an alias, and any
/// two vectors with identical maps are element-wise combinable. Reductions
/// (`dot`, `norm2`) accumulate left to right for determinism.
#[derive(Debug, Clone)]
pub struct ParamVector {
    map: Arc<SegmentMap>,
    data: Vec<f64>,
}

/// Gradient with the same segment layout as the parameters it differentiates.
pub type GradVector = ParamVector;

impl ParamVector {
    pub fn zeros(map: &Arc<SegmentMap>) -> Self {
        Self { map: Arc::clone(map), data: vec![0.0; map.total_len()] }
    }

    pub fn from_data(map: &Arc<SegmentMap>, data: Vec<f64>) -> Result<Self, AutodiffError> {
        if data.len() != map.total_len() {
            return Err(AutodiffError::SegmentMismatch {
                detail: format!("map holds {} values, data holds {}", map.total_len(), data.len()),
            });
        }
        Ok(Self { map: Arc::clone(map), data })
    }

    pub fn map(&self) -> &Arc<SegmentMap> {
        &self.map
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn segment(&self, name: &str) -> Result<&[f64], AutodiffError> {
        let spec = self
            .map
            .get(name)
            .ok_or_else(|| AutodiffError::UnknownSegment { name: name.to_string() })?;
        Ok(&self.data[spec.offset..spec.offset + spec.len()])
    }

    /// Copy of one segment as a tensor with the segment's shape.
    pub fn segment_tensor(&self, name: &str) -> Result<Tensor, AutodiffError> {
        let spec = self
            .map
            .get(name)
            .ok_or_else(|| AutodiffError::UnknownSegment { name: name.to_string() })?;
        Ok(Tensor::new_unchecked(
            spec.rows,
            spec.cols,
            self.data[spec.offset..spec.offset + spec.len()].to_vec(),
        ))
    }

    pub fn set_segment(&mut self, name: &str, values: &[f64]) -> Result<(), AutodiffError> {
        let spec = self
            .map
            .get(name)
            .ok_or_else(|| AutodiffError::UnknownSegment { name: name.to_string() })?
            .clone();
        if values.len() != spec.len() {
            return Err(AutodiffError::SegmentMismatch {
                detail: format!("segment '{}' holds {} values, got {}", name, spec.len(), values.len()),
            });
        }
        self.data[spec.offset..spec.offset + spec.len()].copy_from_slice(values);
        Ok(())
    }

    fn check_same_map(&self, other: &Self, op: &str) -> Result<(), AutodiffError> {
        if Arc::ptr_eq(&self.map, &other.map) || self.map == other.map {
            Ok(())
        } else {
            Err(AutodiffError::SegmentMismatch { detail: format!("operands of {} use different segment maps", op) })
        }
    }

    /// Left-to-right inner product.
    pub fn dot(&self, other: &Self) -> Result<f64, AutodiffError> {
        self.check_same_map(other, "dot")?;
        let mut acc = 0.0;
        for (a, b) in self.data.iter().zip(&other.data) {
            acc += a * b;
        }
        Ok(acc)
    }

    /// Euclidean norm, `sqrt(dot(self, self))`.
    pub fn norm2(&self) -> f64 {
        let mut acc = 0.0;
        for v in &self.data {
            acc += v * v;
        }
        acc.sqrt()
    }

    /// `self + alpha * x` as a new vector.
    pub fn axpy(&self, alpha: f64, x: &Self) -> Result<Self, AutodiffError> {
        let mut out = self.clone();
        out.axpy_in_place(alpha, x)?;
        Ok(out)
    }

    /// `self += alpha * x`.
    pub fn axpy_in_place(&mut self, alpha: f64, x: &Self) -> Result<(), AutodiffError> {
        self.check_same_map(x, "axpy")?;
        for (y, v) in self.data.iter_mut().zip(&x.data) {
            *y += alpha * v;
        }
        Ok(())
    }

    /// `alpha * self` as a new vector.
    pub fn scale(&self, alpha: f64) -> Self {
        let mut out = self.clone();
        for v in &mut out.data {
            *v *= alpha;
        }
        out
    }

    pub fn all_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }
}
