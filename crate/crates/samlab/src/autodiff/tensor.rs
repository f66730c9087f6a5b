use super::error::AutodiffError;

/// Dense `rows x cols` matrix of `f64` in row-major storage.
///
/// All reductions over a tensor accumulate sequentially in storage order, so
/// evaluating the same expression twice is bit-identical. Row vectors are
/// `1 x n`, column vectors `n x 1`, scalars `1 x 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Tensor {
    /// Builds a tensor from row-major data, rejecting non-finite entries.
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self, AutodiffError> {
        if data.len() != rows * cols {
            return Err(AutodiffError::ShapeMismatch {
                op: "tensor",
                detail: format!("{}x{} needs {} values, got {}", rows, cols, rows * cols, data.len()),
            });
        }
        if let Some(i) = data.iter().position(|v| !v.is_finite()) {
            return Err(AutodiffError::NonFiniteInput {
                what: format!("tensor entry {} of {}x{}", i, rows, cols),
            });
        }
        Ok(Self { rows, cols, data })
    }

    /// Internal constructor for values produced by tape kernels; finiteness
    /// is checked once per node by the forward pass instead.
    pub(crate) fn new_unchecked(rows: usize, cols: usize, data: Vec<f64>) -> Self {
        debug_assert_eq!(data.len(), rows * cols);
        Self { rows, cols, data }
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![0.0; rows * cols] }
    }

    pub fn scalar(value: f64) -> Result<Self, AutodiffError> {
        Self::new(1, 1, vec![value])
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn is_scalar(&self) -> bool {
        self.rows == 1 && self.cols == 1
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.data[row * self.cols + col]
    }

    pub fn set(&mut self, row: usize, col: usize, value: f64) {
        self.data[row * self.cols + col] = value;
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub(crate) fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    /// Scalar payload of a `1 x 1` tensor.
    pub fn scalar_value(&self) -> Result<f64, AutodiffError> {
        if !self.is_scalar() {
            return Err(AutodiffError::ShapeMismatch {
                op: "scalar_value",
                detail: format!("expected 1x1, got {}x{}", self.rows, self.cols),
            });
        }
        Ok(self.data[0])
    }

    pub fn all_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }
}
