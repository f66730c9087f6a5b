use crate::autodiff::Tensor;

use super::error::ModelError;

/// One graph with node features, a directed edge list, per-edge features,
/// and a scalar label (class 0/1 or regression target).
///
/// Undirected graphs are stored with both directions present. Self-loops are
/// rejected unless explicitly allowed at construction.
#[derive(Debug, Clone, PartialEq)]
pub struct GraphSample {
    pub num_nodes: usize,
    /// `[num_nodes x d_node]`
    pub node_features: Tensor,
    /// Directed edges `(u, v)`, read as `u -> v`.
    pub edges: Vec<(usize, usize)>,
    /// `[num_edges x d_edge]`, row `i` belongs to `edges[i]`.
    pub edge_features: Tensor,
    pub label: f64,
}

impl GraphSample {
    pub fn new(
        num_nodes: usize,
        node_features: Tensor,
        edges: Vec<(usize, usize)>,
        edge_features: Tensor,
        label: f64,
        allow_self_loops: bool,
    ) -> Result<Self, ModelError> {
        if num_nodes == 0 {
            return Err(ModelError::Graph("graph has no nodes".to_string()));
        }
        if node_features.rows() != num_nodes {
            return Err(ModelError::Graph(format!(
                "{} nodes but {} node-feature rows",
                num_nodes,
                node_features.rows()
            )));
        }
        if edge_features.rows() != edges.len() {
            return Err(ModelError::Graph(format!(
                "{} edges but {} edge-feature rows",
                edges.len(),
                edge_features.rows()
            )));
        }
        for (i, &(u, v)) in edges.iter().enumerate() {
            if u >= num_nodes || v >= num_nodes {
                return Err(ModelError::Graph(format!(
                    "edge {} = ({}, {}) references a node outside 0..{}",
                    i, u, v, num_nodes
                )));
            }
            if u == v && !allow_self_loops {
                return Err(ModelError::Graph(format!("edge {} is a self-loop ({}, {})", i, u, v)));
            }
        }
        if !label.is_finite() {
            return Err(ModelError::Graph(format!("label {} is not finite", label)));
        }
        Ok(Self { num_nodes, node_features, edges, edge_features, label })
    }

    pub fn node_dim(&self) -> usize {
        self.node_features.cols()
    }

    pub fn edge_dim(&self) -> usize {
        self.edge_features.cols()
    }
}

/// A training batch: either a set of graphs with packed node offsets, or a
/// dense feature matrix for vector tasks.
#[derive(Debug, Clone)]
pub enum Batch {
    Graphs {
        samples: Vec<GraphSample>,
        /// `node_offsets[i]` is the first packed node index of sample `i`;
        /// the final entry equals the total node count. Strictly increasing.
        node_offsets: Vec<usize>,
    },
    Vectors {
        /// `[batch x d]`
        features: Tensor,
        labels: Vec<f64>,
    },
}

impl Batch {
    pub fn from_graphs(samples: Vec<GraphSample>) -> Result<Self, ModelError> {
        if samples.is_empty() {
            return Err(ModelError::EmptyBatch);
        }
        let mut node_offsets = Vec::with_capacity(samples.len() + 1);
        let mut total = 0;
        node_offsets.push(0);
        for s in &samples {
            total += s.num_nodes;
            node_offsets.push(total);
        }
        debug_assert!(node_offsets.windows(2).all(|w| w[0] < w[1]));
        Ok(Self::Graphs { samples, node_offsets })
    }

    pub fn from_vectors(features: Tensor, labels: Vec<f64>) -> Result<Self, ModelError> {
        if features.rows() == 0 {
            return Err(ModelError::EmptyBatch);
        }
        if features.rows() != labels.len() {
            return Err(ModelError::Batch(format!(
                "{} feature rows but {} labels",
                features.rows(),
                labels.len()
            )));
        }
        Ok(Self::Vectors { features, labels })
    }

    /// Number of training samples (graphs or feature rows).
    pub fn len(&self) -> usize {
        match self {
            Batch::Graphs { samples, .. } => samples.len(),
            Batch::Vectors { features, .. } => features.rows(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn labels(&self) -> Vec<f64> {
        match self {
            Batch::Graphs { samples, .. } => samples.iter().map(|s| s.label).collect(),
            Batch::Vectors { labels, .. } => labels.clone(),
        }
    }
}
