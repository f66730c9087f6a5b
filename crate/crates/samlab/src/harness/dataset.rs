//! Dataset loading and batch assembly for the three task sources.

use crate::autodiff::Tensor;
use crate::models::{Batch, GraphSample, TaskKind};
use crate::seeds::component_seed;

use super::config::{RunConfig, TaskSpec};
use super::graph_csv::load_graph_csv;
use super::moons::generate_moons;
use super::motif::{generate_motif_graphs, relabel_for_regression};
use super::HarnessError;

enum DataStore {
    Graphs(Vec<GraphSample>),
    Vectors { features: Tensor, labels: Vec<f64> },
}

/// An in-memory dataset with uniform batch assembly over sample indices.
pub struct Dataset {
    store: DataStore,
    input_dim: usize,
    edge_dim: usize,
}

impl Dataset {
    /// Materializes the dataset a config asks for. Synthetic data is seeded
    /// from the master seed under the `data` label, so the same config always
    /// sees the same samples regardless of any other seeded component.
    pub fn load(config: &RunConfig) -> Result<Self, HarnessError> {
        let data_seed = component_seed(config.seed, "data");
        match config.task {
            TaskSpec::SyntheticMoons => {
                let (features, labels) =
                    generate_moons(config.n_samples, data_seed, config.noise)?;
                if config.task_kind == TaskKind::Regression {
                    return Err(HarnessError::Config(
                        "synthetic-moons is a classification task".to_string(),
                    ));
                }
                Ok(Self {
                    store: DataStore::Vectors { features, labels },
                    input_dim: 2,
                    edge_dim: 0,
                })
            }
            TaskSpec::SyntheticMotifGraphs => {
                let mut samples = generate_motif_graphs(config.n_samples, data_seed)?;
                if config.task_kind == TaskKind::Regression {
                    samples = relabel_for_regression(&samples);
                }
                let input_dim = samples[0].node_dim();
                let edge_dim = samples[0].edge_dim();
                Ok(Self {
                    store: DataStore::Graphs(samples),
                    input_dim,
                    edge_dim,
                })
            }
            TaskSpec::GraphCsv => {
                let path = config.data_path.as_ref().ok_or_else(|| {
                    HarnessError::Config("task graph-csv requires task.path".to_string())
                })?;
                let samples = load_graph_csv(path)?;
                let input_dim = samples[0].node_dim();
                let edge_dim = samples[0].edge_dim();
                for (i, s) in samples.iter().enumerate() {
                    if s.node_dim() != input_dim || s.edge_dim() != edge_dim {
                        return Err(HarnessError::Config(format!(
                            "graph {i} has feature dims ({}, {}) but the first graph has \
                             ({input_dim}, {edge_dim})",
                            s.node_dim(),
                            s.edge_dim()
                        )));
                    }
                    if config.task_kind == TaskKind::Classification
                        && s.label != 0.0
                        && s.label != 1.0
                    {
                        return Err(HarnessError::Config(format!(
                            "graph {i} has label {} but model.task is classification",
                            s.label
                        )));
                    }
                }
                Ok(Self {
                    store: DataStore::Graphs(samples),
                    input_dim,
                    edge_dim,
                })
            }
        }
    }

    pub fn len(&self) -> usize {
        match &self.store {
            DataStore::Graphs(samples) => samples.len(),
            DataStore::Vectors { labels, .. } => labels.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Node/input feature dimension the model must accept.
    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    pub fn edge_dim(&self) -> usize {
        self.edge_dim
    }

    /// Assembles the samples at `indices` (in that order) into a batch.
    pub fn batch(&self, indices: &[usize]) -> Result<Batch, HarnessError> {
        if let Some(&bad) = indices.iter().find(|&&i| i >= self.len()) {
            return Err(HarnessError::Config(format!(
                "sample index {bad} outside dataset of {}",
                self.len()
            )));
        }
        match &self.store {
            DataStore::Graphs(samples) => Ok(Batch::from_graphs(
                indices.iter().map(|&i| samples[i].clone()).collect(),
            )?),
            DataStore::Vectors { features, labels } => {
                let d = features.cols();
                let mut data = Vec::with_capacity(indices.len() * d);
                let mut picked = Vec::with_capacity(indices.len());
                for &i in indices {
                    for c in 0..d {
                        data.push(features.get(i, c));
                    }
                    picked.push(labels[i]);
                }
                Ok(Batch::from_vectors(
                    Tensor::new(indices.len(), d, data)?,
                    picked,
                )?)
            }
        }
    }

    /// Labels of the samples at `indices`, in order.
    pub fn labels(&self, indices: &[usize]) -> Vec<f64> {
        match &self.store {
            DataStore::Graphs(samples) => indices.iter().map(|&i| samples[i].label).collect(),
            DataStore::Vectors { labels, .. } => indices.iter().map(|&i| labels[i]).collect(),
        }
    }
}
