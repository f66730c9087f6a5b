use std::sync::Arc;

use super::error::AutodiffError;
use super::tensor::Tensor;
use super::vector::{GradVector, ParamVector, SegmentMap};

/// Index of a node on a [`Tape`].
pub type NodeId = usize;

#[derive(Debug, Clone)]
enum Op {
    /// Leaf bound to a named parameter segment; gradients flow into it.
    Param { segment: String },
    /// Leaf holding fixed data (inputs, targets, masks-as-selectors).
    Constant,
    MatMul { a: NodeId, b: NodeId },
    Transpose { a: NodeId },
    Add { a: NodeId, b: NodeId },
    /// `a[m x n] + b[1 x n]`, broadcasting the row vector over every row.
    AddRowBroadcast { a: NodeId, b: NodeId },
    Scale { a: NodeId, factor: f64 },
    Relu { a: NodeId },
    Tanh { a: NodeId },
    /// Row-wise softmax; `mask = None` means every entry participates. An
    /// all-masked row yields an all-zero output row.
    SoftmaxRows { a: NodeId, mask: Option<Vec<bool>> },
    MeanAll { a: NodeId },
    /// Column means: `[m x n] -> [1 x n]`.
    MeanOverRows { a: NodeId },
    ConcatRows { parts: Vec<NodeId> },
    /// Scatter a `[k x 1]` column into a zero `[rows x cols]` matrix,
    /// accumulating entries that land on the same position.
    ScatterToMatrix { a: NodeId, positions: Vec<(usize, usize)> },
    /// Mean over all entries of `(a - targets)^2`.
    SquaredErrorMean { a: NodeId, targets: Tensor },
    /// Mean binary cross-entropy of logits `a` against labels in {0, 1}.
    LogisticCrossEntropyMean { a: NodeId, labels: Tensor },
}

impl Op {
    fn name(&self) -> &'static str {
        match self {
            Op::Param { .. } => "param",
            Op::Constant => "constant",
            Op::MatMul { .. } => "matmul",
            Op::Transpose { .. } => "transpose",
            Op::Add { .. } => "add",
            Op::AddRowBroadcast { .. } => "add_row_broadcast",
            Op::Scale { .. } => "scale",
            Op::Relu { .. } => "relu",
            Op::Tanh { .. } => "tanh",
            Op::SoftmaxRows { .. } => "softmax_rows",
            Op::MeanAll { .. } => "mean_all",
            Op::MeanOverRows { .. } => "mean_over_rows",
            Op::ConcatRows { .. } => "concat_rows",
            Op::ScatterToMatrix { .. } => "scatter_to_matrix",
            Op::SquaredErrorMean { .. } => "squared_error_mean",
            Op::LogisticCrossEntropyMean { .. } => "logistic_cross_entropy_mean",
        }
    }
}

#[derive(Debug, Clone)]
struct Node {
    op: Op,
    rows: usize,
    cols: usize,
}

/// Recorded computation ending in a scalar loss.
///
/// A tape is built once per batch: structure and shapes are fixed at build
/// time, data constants are embedded, and parameter leaves reference named
/// segments. [`Tape::forward`] then (re-)evaluates every node for a given
/// [`ParamVector`] — the same tape can be replayed at perturbed parameters —
/// and [`Tape::backward`] walks the nodes once in reverse, returning a
/// gradient with the same segment map as the parameters.
///
/// Evaluation order, and every reduction inside each kernel, is fixed and
/// sequential, so identical inputs give bit-identical losses and gradients.
#[derive(Debug, Clone)]
pub struct Tape {
    nodes: Vec<Node>,
    values: Vec<Tensor>,
    param_nodes: Vec<(NodeId, String)>,
    marks: Vec<(String, NodeId)>,
    loss: Option<NodeId>,
    forward_done: bool,
    map: Option<Arc<SegmentMap>>,
}

impl Default for Tape {
    fn default() -> Self {
        Self::new()
    }
}

impl Tape {
    pub fn new() -> Self {
        Self {
            nodes: Vec::new(),
            values: Vec::new(),
            param_nodes: Vec::new(),
            marks: Vec::new(),
            loss: None,
            forward_done: false,
            map: None,
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    fn push(&mut self, op: Op, rows: usize, cols: usize) -> NodeId {
        let id = self.nodes.len();
        self.nodes.push(Node { op, rows, cols });
        self.values.push(Tensor::zeros(rows, cols));
        self.forward_done = false;
        id
    }

    fn shape_of(&self, id: NodeId) -> (usize, usize) {
        (self.nodes[id].rows, self.nodes[id].cols)
    }

    /// Leaf bound to parameter segment `name`. Repeated calls with the same
    /// name return the same node, so adjoints accumulate in one place.
    pub fn param(&mut self, name: &str, rows: usize, cols: usize) -> Result<NodeId, AutodiffError> {
        if let Some((id, _)) = self.param_nodes.iter().find(|(_, n)| n == name) {
            let (r, c) = self.shape_of(*id);
            if (r, c) != (rows, cols) {
                return Err(AutodiffError::ShapeMismatch {
                    op: "param",
                    detail: format!("segment '{}' first used as {}x{}, now {}x{}", name, r, c, rows, cols),
                });
            }
            return Ok(*id);
        }
        let id = self.push(Op::Param { segment: name.to_string() }, rows, cols);
        self.param_nodes.push((id, name.to_string()));
        Ok(id)
    }

    pub fn constant(&mut self, value: Tensor) -> NodeId {
        let (rows, cols) = value.shape();
        let id = self.push(Op::Constant, rows, cols);
        self.values[id] = value;
        id
    }

    pub fn matmul(&mut self, a: NodeId, b: NodeId) -> Result<NodeId, AutodiffError> {
        let (ar, ac) = self.shape_of(a);
        let (br, bc) = self.shape_of(b);
        if ac != br {
            return Err(AutodiffError::ShapeMismatch {
                op: "matmul",
                detail: format!("{}x{} * {}x{}", ar, ac, br, bc),
            });
        }
        Ok(self.push(Op::MatMul { a, b }, ar, bc))
    }

    pub fn transpose(&mut self, a: NodeId) -> NodeId {
        let (r, c) = self.shape_of(a);
        self.push(Op::Transpose { a }, c, r)
    }

    pub fn add(&mut self, a: NodeId, b: NodeId) -> Result<NodeId, AutodiffError> {
        let sa = self.shape_of(a);
        let sb = self.shape_of(b);
        if sa != sb {
            return Err(AutodiffError::ShapeMismatch {
                op: "add",
                detail: format!("{}x{} + {}x{}", sa.0, sa.1, sb.0, sb.1),
            });
        }
        Ok(self.push(Op::Add { a, b }, sa.0, sa.1))
    }

    pub fn add_row_broadcast(&mut self, a: NodeId, b: NodeId) -> Result<NodeId, AutodiffError> {
        let (ar, ac) = self.shape_of(a);
        let (br, bc) = self.shape_of(b);
        if br != 1 || bc != ac {
            return Err(AutodiffError::ShapeMismatch {
                op: "add_row_broadcast",
                detail: format!("{}x{} + row {}x{}", ar, ac, br, bc),
            });
        }
        Ok(self.push(Op::AddRowBroadcast { a, b }, ar, ac))
    }

    pub fn scale(&mut self, a: NodeId, factor: f64) -> Result<NodeId, AutodiffError> {
        if !factor.is_finite() {
            return Err(AutodiffError::InvalidOperand {
                op: "scale",
                detail: format!("factor {} is not finite", factor),
            });
        }
        let (r, c) = self.shape_of(a);
        Ok(self.push(Op::Scale { a, factor }, r, c))
    }

    pub fn relu(&mut self, a: NodeId) -> NodeId {
        let (r, c) = self.shape_of(a);
        self.push(Op::Relu { a }, r, c)
    }

    pub fn tanh(&mut self, a: NodeId) -> NodeId {
        let (r, c) = self.shape_of(a);
        self.push(Op::Tanh { a }, r, c)
    }

    pub fn softmax_rows(&mut self, a: NodeId) -> NodeId {
        let (r, c) = self.shape_of(a);
        self.push(Op::SoftmaxRows { a, mask: None }, r, c)
    }

    /// Row-wise softmax restricted to entries whose mask bit is set
    /// (row-major mask). Rows with no set bit produce all-zero output.
    pub fn masked_softmax_rows(&mut self, a: NodeId, mask: Vec<bool>) -> Result<NodeId, AutodiffError> {
        let (r, c) = self.shape_of(a);
        if mask.len() != r * c {
            return Err(AutodiffError::ShapeMismatch {
                op: "softmax_rows",
                detail: format!("mask holds {} bits for a {}x{} input", mask.len(), r, c),
            });
        }
        Ok(self.push(Op::SoftmaxRows { a, mask: Some(mask) }, r, c))
    }

    pub fn mean_all(&mut self, a: NodeId) -> NodeId {
        self.push(Op::MeanAll { a }, 1, 1)
    }

    pub fn mean_over_rows(&mut self, a: NodeId) -> NodeId {
        let (_, c) = self.shape_of(a);
        self.push(Op::MeanOverRows { a }, 1, c)
    }

    pub fn concat_rows(&mut self, parts: &[NodeId]) -> Result<NodeId, AutodiffError> {
        if parts.is_empty() {
            return Err(AutodiffError::InvalidOperand { op: "concat_rows", detail: "no parts".to_string() });
        }
        let cols = self.shape_of(parts[0]).1;
        let mut rows = 0;
        for &p in parts {
            let (r, c) = self.shape_of(p);
            if c != cols {
                return Err(AutodiffError::ShapeMismatch {
                    op: "concat_rows",
                    detail: format!("part widths differ: {} vs {}", cols, c),
                });
            }
            rows += r;
        }
        Ok(self.push(Op::ConcatRows { parts: parts.to_vec() }, rows, cols))
    }

    pub fn scatter_to_matrix(
        &mut self,
        a: NodeId,
        positions: Vec<(usize, usize)>,
        rows: usize,
        cols: usize,
    ) -> Result<NodeId, AutodiffError> {
        let (ar, ac) = self.shape_of(a);
        if ac != 1 || ar != positions.len() {
            return Err(AutodiffError::ShapeMismatch {
                op: "scatter_to_matrix",
                detail: format!("input {}x{} with {} positions (need k x 1 and k positions)", ar, ac, positions.len()),
            });
        }
        if let Some(&(r, c)) = positions.iter().find(|&&(r, c)| r >= rows || c >= cols) {
            return Err(AutodiffError::InvalidOperand {
                op: "scatter_to_matrix",
                detail: format!("position ({}, {}) outside {}x{}", r, c, rows, cols),
            });
        }
        Ok(self.push(Op::ScatterToMatrix { a, positions }, rows, cols))
    }

    pub fn squared_error_mean(&mut self, a: NodeId, targets: Tensor) -> Result<NodeId, AutodiffError> {
        let sa = self.shape_of(a);
        if sa != targets.shape() {
            return Err(AutodiffError::ShapeMismatch {
                op: "squared_error_mean",
                detail: format!("prediction {}x{}, targets {}x{}", sa.0, sa.1, targets.rows(), targets.cols()),
            });
        }
        Ok(self.push(Op::SquaredErrorMean { a, targets }, 1, 1))
    }

    pub fn logistic_cross_entropy_mean(&mut self, a: NodeId, labels: Tensor) -> Result<NodeId, AutodiffError> {
        let sa = self.shape_of(a);
        if sa != labels.shape() {
            return Err(AutodiffError::ShapeMismatch {
                op: "logistic_cross_entropy_mean",
                detail: format!("logits {}x{}, labels {}x{}", sa.0, sa.1, labels.rows(), labels.cols()),
            });
        }
        if let Some(i) = labels.data().iter().position(|&y| y != 0.0 && y != 1.0) {
            return Err(AutodiffError::InvalidOperand {
                op: "logistic_cross_entropy_mean",
                detail: format!("label entry {} is {}, expected 0 or 1", i, labels.data()[i]),
            });
        }
        Ok(self.push(Op::LogisticCrossEntropyMean { a, labels }, 1, 1))
    }

    /// Declares the scalar node whose value `forward` returns and which
    /// `backward` seeds with adjoint 1.
    pub fn set_loss(&mut self, node: NodeId) -> Result<(), AutodiffError> {
        let (r, c) = self.shape_of(node);
        if (r, c) != (1, 1) {
            return Err(AutodiffError::NonScalarLoss { rows: r, cols: c });
        }
        self.loss = Some(node);
        Ok(())
    }

    /// Attaches a label to a node so callers can probe intermediates
    /// (attention weights, logits) after a forward pass.
    pub fn mark(&mut self, label: &str, node: NodeId) {
        self.marks.push((label.to_string(), node));
    }

    pub fn marked(&self, label: &str) -> Option<NodeId> {
        self.marks.iter().find(|(l, _)| l == label).map(|(_, id)| *id)
    }

    /// Cached value of a node from the most recent forward pass.
    pub fn value(&self, node: NodeId) -> Result<&Tensor, AutodiffError> {
        if !self.forward_done {
            return Err(AutodiffError::ValueUnavailable { node });
        }
        Ok(&self.values[node])
    }

    /// Evaluates every node in recording order and returns the loss.
    ///
    /// Parameter leaves are refreshed from `params`; constants keep their
    /// embedded data. Any non-finite node output aborts with a
    /// [`AutodiffError::NonFinite`] naming the op.
    pub fn forward(&mut self, params: &ParamVector) -> Result<f64, AutodiffError> {
        let loss_node = self.loss.ok_or(AutodiffError::MissingLoss)?;
        for (id, name) in &self.param_nodes {
            let spec = params
                .map()
                .get(name)
                .ok_or_else(|| AutodiffError::UnknownSegment { name: name.clone() })?;
            let (r, c) = self.shape_of(*id);
            if (spec.rows, spec.cols) != (r, c) {
                return Err(AutodiffError::ShapeMismatch {
                    op: "forward",
                    detail: format!("segment '{}' is {}x{} in params, {}x{} on tape", name, spec.rows, spec.cols, r, c),
                });
            }
        }
        for id in 0..self.nodes.len() {
            let value = match &self.nodes[id].op {
                Op::Param { segment } => params.segment_tensor(segment)?,
                Op::Constant => continue,
                Op::MatMul { a, b } => matmul(&self.values[*a], &self.values[*b]),
                Op::Transpose { a } => transpose(&self.values[*a]),
                Op::Add { a, b } => add(&self.values[*a], &self.values[*b]),
                Op::AddRowBroadcast { a, b } => add_row_broadcast(&self.values[*a], &self.values[*b]),
                Op::Scale { a, factor } => scale(&self.values[*a], *factor),
                Op::Relu { a } => map_unary(&self.values[*a], |x| x.max(0.0)),
                Op::Tanh { a } => map_unary(&self.values[*a], f64::tanh),
                Op::SoftmaxRows { a, mask } => softmax_rows(&self.values[*a], mask.as_deref()),
                Op::MeanAll { a } => mean_all(&self.values[*a]),
                Op::MeanOverRows { a } => mean_over_rows(&self.values[*a]),
                Op::ConcatRows { parts } => concat_rows(&self.values, parts),
                Op::ScatterToMatrix { a, positions } => {
                    scatter_to_matrix(&self.values[*a], positions, self.nodes[id].rows, self.nodes[id].cols)
                }
                Op::SquaredErrorMean { a, targets } => squared_error_mean(&self.values[*a], targets),
                Op::LogisticCrossEntropyMean { a, labels } => {
                    logistic_cross_entropy_mean(&self.values[*a], labels)
                }
            };
            if !value.all_finite() {
                return Err(AutodiffError::NonFinite { op: self.nodes[id].op.name(), node: id });
            }
            self.values[id] = value;
        }
        self.forward_done = true;
        self.map = Some(Arc::clone(params.map()));
        self.values[loss_node].scalar_value()
    }

    /// Reverse pass over the values cached by the last `forward`.
    ///
    /// Visits each node exactly once in reverse recording order and returns
    /// the gradient of the loss with respect to every parameter segment.
    pub fn backward(&self) -> Result<GradVector, AutodiffError> {
        if !self.forward_done {
            return Err(AutodiffError::BackwardBeforeForward);
        }
        let loss_node = self.loss.ok_or(AutodiffError::MissingLoss)?;
        let map = self.map.as_ref().ok_or(AutodiffError::BackwardBeforeForward)?;

        let mut adjoints: Vec<Tensor> = self
            .nodes
            .iter()
            .map(|n| Tensor::zeros(n.rows, n.cols))
            .collect();
        adjoints[loss_node].data_mut()[0] = 1.0;

        for id in (0..self.nodes.len()).rev() {
            // Split off this node's adjoint so input adjoints can be borrowed mutably.
            let adj = std::mem::replace(&mut adjoints[id], Tensor::zeros(0, 0));
            match &self.nodes[id].op {
                Op::Param { .. } | Op::Constant => {}
                Op::MatMul { a, b } => {
                    matmul_backward_a(&adj, &self.values[*b], &mut adjoints[*a]);
                    matmul_backward_b(&adj, &self.values[*a], &mut adjoints[*b]);
                }
                Op::Transpose { a } => transpose_backward(&adj, &mut adjoints[*a]),
                Op::Add { a, b } => {
                    accumulate(&mut adjoints[*a], adj.data());
                    accumulate(&mut adjoints[*b], adj.data());
                }
                Op::AddRowBroadcast { a, b } => {
                    accumulate(&mut adjoints[*a], adj.data());
                    row_broadcast_backward(&adj, &mut adjoints[*b]);
                }
                Op::Scale { a, factor } => {
                    let da = adjoints[*a].data_mut();
                    for (d, g) in da.iter_mut().zip(adj.data()) {
                        *d += factor * g;
                    }
                }
                Op::Relu { a } => {
                    let input = self.values[*a].data();
                    let da = adjoints[*a].data_mut();
                    // Subgradient 0 at the kink x == 0.
                    for i in 0..da.len() {
                        if input[i] > 0.0 {
                            da[i] += adj.data()[i];
                        }
                    }
                }
                Op::Tanh { a } => {
                    let out = self.values[id].data();
                    let da = adjoints[*a].data_mut();
                    for i in 0..da.len() {
                        da[i] += adj.data()[i] * (1.0 - out[i] * out[i]);
                    }
                }
                Op::SoftmaxRows { a, mask } => {
                    softmax_rows_backward(&adj, &self.values[id], mask.as_deref(), &mut adjoints[*a]);
                }
                Op::MeanAll { a } => {
                    let g = adj.data()[0] / self.values[*a].len() as f64;
                    for d in adjoints[*a].data_mut() {
                        *d += g;
                    }
                }
                Op::MeanOverRows { a } => {
                    let (m, n) = self.values[*a].shape();
                    let da = adjoints[*a].data_mut();
                    for i in 0..m {
                        for j in 0..n {
                            da[i * n + j] += adj.data()[j] / m as f64;
                        }
                    }
                }
                Op::ConcatRows { parts } => {
                    let mut row = 0;
                    for &p in parts {
                        let (pr, pc) = self.values[p].shape();
                        let chunk = &adj.data()[row * pc..(row + pr) * pc];
                        accumulate(&mut adjoints[p], chunk);
                        row += pr;
                    }
                }
                Op::ScatterToMatrix { a, positions } => {
                    let cols = self.nodes[id].cols;
                    let da = adjoints[*a].data_mut();
                    for (k, &(r, c)) in positions.iter().enumerate() {
                        da[k] += adj.data()[r * cols + c];
                    }
                }
                Op::SquaredErrorMean { a, targets } => {
                    let x = self.values[*a].data();
                    let scale = 2.0 * adj.data()[0] / x.len() as f64;
                    let da = adjoints[*a].data_mut();
                    for i in 0..da.len() {
                        da[i] += scale * (x[i] - targets.data()[i]);
                    }
                }
                Op::LogisticCrossEntropyMean { a, labels } => {
                    let z = self.values[*a].data();
                    let scale = adj.data()[0] / z.len() as f64;
                    let da = adjoints[*a].data_mut();
                    for i in 0..da.len() {
                        let sig = 1.0 / (1.0 + (-z[i]).exp());
                        da[i] += scale * (sig - labels.data()[i]);
                    }
                }
            }
            adjoints[id] = adj;
        }

        let mut grad = GradVector::zeros(map);
        for (id, name) in &self.param_nodes {
            grad.set_segment(name, adjoints[*id].data())?;
        }
        if !grad.all_finite() {
            return Err(AutodiffError::NonFinite { op: "backward", node: loss_node });
        }
        Ok(grad)
    }
}

// ---- forward kernels (fixed sequential, row-major accumulation) ----

fn matmul(a: &Tensor, b: &Tensor) -> Tensor {
    let (m, k) = a.shape();
    let n = b.cols();
    let mut out = vec![0.0; m * n];
    for i in 0..m {
        for j in 0..n {
            let mut acc = 0.0;
            for p in 0..k {
                acc += a.data()[i * k + p] * b.data()[p * n + j];
            }
            out[i * n + j] = acc;
        }
    }
    Tensor::new_unchecked(m, n, out)
}

fn transpose(a: &Tensor) -> Tensor {
    let (m, n) = a.shape();
    let mut out = vec![0.0; m * n];
    for i in 0..m {
        for j in 0..n {
            out[j * m + i] = a.data()[i * n + j];
        }
    }
    Tensor::new_unchecked(n, m, out)
}

fn add(a: &Tensor, b: &Tensor) -> Tensor {
    let mut out = a.data().to_vec();
    for (o, v) in out.iter_mut().zip(b.data()) {
        *o += v;
    }
    Tensor::new_unchecked(a.rows(), a.cols(), out)
}

fn add_row_broadcast(a: &Tensor, b: &Tensor) -> Tensor {
    let (m, n) = a.shape();
    let mut out = a.data().to_vec();
    for i in 0..m {
        for j in 0..n {
            out[i * n + j] += b.data()[j];
        }
    }
    Tensor::new_unchecked(m, n, out)
}

fn scale(a: &Tensor, factor: f64) -> Tensor {
    let mut out = a.data().to_vec();
    for v in &mut out {
        *v *= factor;
    }
    Tensor::new_unchecked(a.rows(), a.cols(), out)
}

fn map_unary(a: &Tensor, f: impl Fn(f64) -> f64) -> Tensor {
    let mut out = a.data().to_vec();
    for v in &mut out {
        *v = f(*v);
    }
    Tensor::new_unchecked(a.rows(), a.cols(), out)
}

fn softmax_rows(a: &Tensor, mask: Option<&[bool]>) -> Tensor {
    let (m, n) = a.shape();
    let mut out = vec![0.0; m * n];
    for i in 0..m {
        let row = &a.data()[i * n..(i + 1) * n];
        let live = |j: usize| mask.map_or(true, |bits| bits[i * n + j]);
        let mut max = f64::NEG_INFINITY;
        for (j, &x) in row.iter().enumerate() {
            if live(j) && x > max {
                max = x;
            }
        }
        if max == f64::NEG_INFINITY {
            continue; // fully masked row stays zero
        }
        let mut sum = 0.0;
        for (j, &x) in row.iter().enumerate() {
            if live(j) {
                let e = (x - max).exp();
                out[i * n + j] = e;
                sum += e;
            }
        }
        for j in 0..n {
            out[i * n + j] /= sum;
        }
    }
    Tensor::new_unchecked(m, n, out)
}

fn mean_all(a: &Tensor) -> Tensor {
    let mut acc = 0.0;
    for v in a.data() {
        acc += v;
    }
    Tensor::new_unchecked(1, 1, vec![acc / a.len() as f64])
}

fn mean_over_rows(a: &Tensor) -> Tensor {
    let (m, n) = a.shape();
    let mut out = vec![0.0; n];
    for i in 0..m {
        for j in 0..n {
            out[j] += a.data()[i * n + j];
        }
    }
    for v in &mut out {
        *v /= m as f64;
    }
    Tensor::new_unchecked(1, n, out)
}

fn concat_rows(values: &[Tensor], parts: &[NodeId]) -> Tensor {
    let cols = values[parts[0]].cols();
    let rows = parts.iter().map(|&p| values[p].rows()).sum();
    let mut out = Vec::with_capacity(rows * cols);
    for &p in parts {
        out.extend_from_slice(values[p].data());
    }
    Tensor::new_unchecked(rows, cols, out)
}

fn scatter_to_matrix(a: &Tensor, positions: &[(usize, usize)], rows: usize, cols: usize) -> Tensor {
    let mut out = vec![0.0; rows * cols];
    for (k, &(r, c)) in positions.iter().enumerate() {
        out[r * cols + c] += a.data()[k];
    }
    Tensor::new_unchecked(rows, cols, out)
}

fn squared_error_mean(a: &Tensor, targets: &Tensor) -> Tensor {
    let mut acc = 0.0;
    for (x, t) in a.data().iter().zip(targets.data()) {
        let d = x - t;
        acc += d * d;
    }
    Tensor::new_unchecked(1, 1, vec![acc / a.len() as f64])
}

fn logistic_cross_entropy_mean(a: &Tensor, labels: &Tensor) -> Tensor {
    let mut acc = 0.0;
    for (z, y) in a.data().iter().zip(labels.data()) {
        // Stable softplus form of -[y ln sigma(z) + (1-y) ln(1 - sigma(z))].
        acc += z.max(0.0) - z * y + (-z.abs()).exp().ln_1p();
    }
    Tensor::new_unchecked(1, 1, vec![acc / a.len() as f64])
}

// ---- backward kernels ----

fn accumulate(target: &mut Tensor, source: &[f64]) {
    for (d, g) in target.data_mut().iter_mut().zip(source) {
        *d += g;
    }
}

/// dA += dC * B^T
fn matmul_backward_a(adj: &Tensor, b: &Tensor, da: &mut Tensor) {
    let (m, n) = adj.shape();
    let k = b.rows();
    for i in 0..m {
        for p in 0..k {
            let mut acc = 0.0;
            for j in 0..n {
                acc += adj.data()[i * n + j] * b.data()[p * n + j];
            }
            da.data_mut()[i * k + p] += acc;
        }
    }
}

/// dB += A^T * dC
fn matmul_backward_b(adj: &Tensor, a: &Tensor, db: &mut Tensor) {
    let (m, n) = adj.shape();
    let k = a.cols();
    for p in 0..k {
        for j in 0..n {
            let mut acc = 0.0;
            for i in 0..m {
                acc += a.data()[i * k + p] * adj.data()[i * n + j];
            }
            db.data_mut()[p * n + j] += acc;
        }
    }
}

fn transpose_backward(adj: &Tensor, da: &mut Tensor) {
    let (n, m) = adj.shape(); // adj has the transposed shape
    for j in 0..n {
        for i in 0..m {
            da.data_mut()[i * n + j] += adj.data()[j * m + i];
        }
    }
}

fn row_broadcast_backward(adj: &Tensor, db: &mut Tensor) {
    let (m, n) = adj.shape();
    for i in 0..m {
        for j in 0..n {
            db.data_mut()[j] += adj.data()[i * n + j];
        }
    }
}

fn softmax_rows_backward(adj: &Tensor, out: &Tensor, mask: Option<&[bool]>, da: &mut Tensor) {
    let (m, n) = adj.shape();
    for i in 0..m {
        let live = |j: usize| mask.map_or(true, |bits| bits[i * n + j]);
        let mut dot = 0.0;
        for j in 0..n {
            dot += adj.data()[i * n + j] * out.data()[i * n + j];
        }
        for j in 0..n {
            if live(j) {
                let y = out.data()[i * n + j];
                da.data_mut()[i * n + j] += y * (adj.data()[i * n + j] - dot);
            }
        }
    }
}
