use std::sync::Arc;

use crate::autodiff::{AutodiffError, SegmentMap};

use super::error::ModelError;

/// Which toy model to build.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelKind {
    /// Fully connected net for vector tasks.
    Mlp,
    /// Single-head scaled dot-product attention over graph neighborhoods.
    GraphAttention,
}

/// What the scalar model output means.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TaskKind {
    /// Output is a logit for binary cross-entropy.
    Classification,
    /// Output is a prediction for squared error.
    Regression,
}

/// How one parameter segment is initialized.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SegmentInit {
    /// Uniform in `[-1/sqrt(fan_in), 1/sqrt(fan_in)]`.
    UniformFanIn { fan_in: usize },
    Zero,
}

/// Name, shape, and initialization of one parameter segment.
#[derive(Debug, Clone)]
pub struct SegmentLayout {
    pub name: String,
    pub rows: usize,
    pub cols: usize,
    pub init: SegmentInit,
}

/// Structural description of a toy model.
#[derive(Debug, Clone)]
pub struct ModelConfig {
    pub kind: ModelKind,
    /// Feature dimension: input width for the MLP, node-feature width for
    /// the attention model.
    pub input_dim: usize,
    /// Edge-feature width; only used by the attention model.
    pub edge_dim: usize,
    pub hidden_dim: usize,
    /// Hidden layers for the MLP, attention layers for the graph model.
    pub num_layers: usize,
    pub task: TaskKind,
    pub init_seed: u64,
    /// Whether every node attends to itself in addition to its in-neighbors.
    pub self_loops: bool,
}

impl ModelConfig {
    pub fn validate(&self) -> Result<(), ModelError> {
        if self.input_dim == 0 {
            return Err(ModelError::Config("input_dim must be at least 1".to_string()));
        }
        if self.hidden_dim == 0 {
            return Err(ModelError::Config("hidden_dim must be at least 1".to_string()));
        }
        if !(1..=4).contains(&self.num_layers) {
            return Err(ModelError::Config(format!(
                "num_layers must be in 1..=4, got {}",
                self.num_layers
            )));
        }
        if self.kind == ModelKind::GraphAttention && self.edge_dim == 0 {
            return Err(ModelError::Config("edge_dim must be at least 1 for graph-attention".to_string()));
        }
        Ok(())
    }

    /// Ordered parameter segments for this architecture.
    pub fn segment_layout(&self) -> Result<Vec<SegmentLayout>, ModelError> {
        self.validate()?;
        let h = self.hidden_dim;
        let mut out = Vec::new();
        let weight = |name: &str, rows: usize, cols: usize| SegmentLayout {
            name: name.to_string(),
            rows,
            cols,
            init: SegmentInit::UniformFanIn { fan_in: rows },
        };
        let bias = |name: &str, cols: usize| SegmentLayout {
            name: name.to_string(),
            rows: 1,
            cols,
            init: SegmentInit::Zero,
        };
        match self.kind {
            ModelKind::Mlp => {
                for l in 0..self.num_layers {
                    let fan_in = if l == 0 { self.input_dim } else { h };
                    out.push(weight(&format!("l{}.w", l), fan_in, h));
                    out.push(bias(&format!("l{}.b", l), h));
                }
            }
            ModelKind::GraphAttention => {
                out.push(weight("in.w", self.input_dim, h));
                out.push(bias("in.b", h));
                for l in 0..self.num_layers {
                    out.push(weight(&format!("attn{}.wq", l), h, h));
                    out.push(weight(&format!("attn{}.wk", l), h, h));
                    out.push(weight(&format!("attn{}.wv", l), h, h));
                    out.push(weight(&format!("attn{}.we", l), self.edge_dim, 1));
                }
            }
        }
        out.push(weight("head.w", h, 1));
        out.push(bias("head.b", 1));
        Ok(out)
    }

    pub fn segment_map(&self) -> Result<Arc<SegmentMap>, ModelError> {
        let layout = self.segment_layout()?;
        let shapes: Vec<(&str, usize, usize)> =
            layout.iter().map(|s| (s.name.as_str(), s.rows, s.cols)).collect();
        SegmentMap::new(&shapes).map_err(|e: AutodiffError| ModelError::Autodiff(e))
    }
}
