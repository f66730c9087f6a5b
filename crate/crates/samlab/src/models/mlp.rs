use crate::autodiff::{Tape, Tensor};

use super::config::{ModelConfig, ModelKind, TaskKind};
use super::error::ModelError;
use super::graph::Batch;

/// Records the MLP loss for one vector batch.
///
/// Architecture: `num_layers` hidden layers of `matmul + bias + tanh`, then a
/// linear head to one output per row. The node labeled `"outputs"` holds the
/// `[batch x 1]` logits/predictions after a forward pass.
pub fn build_mlp_loss(config: &ModelConfig, batch: &Batch) -> Result<Tape, ModelError> {
    config.validate()?;
    if config.kind != ModelKind::Mlp {
        return Err(ModelError::Config("build_mlp_loss needs a ModelKind::Mlp config".to_string()));
    }
    let (features, labels) = match batch {
        Batch::Vectors { features, labels } => (features, labels),
        Batch::Graphs { .. } => {
            return Err(ModelError::BatchMismatch("MLP expects a vector batch, got graphs".to_string()))
        }
    };
    if features.rows() == 0 {
        return Err(ModelError::EmptyBatch);
    }
    if features.cols() != config.input_dim {
        return Err(ModelError::BatchMismatch(format!(
            "model expects {} input features, batch has {}",
            config.input_dim,
            features.cols()
        )));
    }

    let mut tape = Tape::new();
    let mut h = tape.constant(features.clone());
    for l in 0..config.num_layers {
        let fan_in = if l == 0 { config.input_dim } else { config.hidden_dim };
        let w = tape.param(&format!("l{}.w", l), fan_in, config.hidden_dim)?;
        let b = tape.param(&format!("l{}.b", l), 1, config.hidden_dim)?;
        let z = tape.matmul(h, w)?;
        let z = tape.add_row_broadcast(z, b)?;
        h = tape.tanh(z);
    }
    let w = tape.param("head.w", config.hidden_dim, 1)?;
    let b = tape.param("head.b", 1, 1)?;
    let out = tape.matmul(h, w)?;
    let out = tape.add_row_broadcast(out, b)?;
    tape.mark("outputs", out);

    let target = Tensor::new(labels.len(), 1, labels.clone())?;
    let loss = match config.task {
        TaskKind::Classification => tape.logistic_cross_entropy_mean(out, target)?,
        TaskKind::Regression => tape.squared_error_mean(out, target)?,
    };
    tape.set_loss(loss)?;
    Ok(tape)
}
