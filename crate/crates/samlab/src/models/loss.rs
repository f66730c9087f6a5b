use crate::autodiff::{AutodiffError, ParamVector, Tape};

use super::attention::build_attention_loss;
use super::config::{ModelConfig, ModelKind};
use super::error::ModelError;
use super::graph::Batch;
use super::mlp::build_mlp_loss;

/// Records the loss for `batch` under whichever model `config` describes.
///
/// The returned tape is positional: it can be re-evaluated at any parameter
/// vector with the same segment map, but only for this batch.
pub fn build_loss_tape(config: &ModelConfig, batch: &Batch) -> Result<Tape, ModelError> {
    match config.kind {
        ModelKind::Mlp => build_mlp_loss(config, batch),
        ModelKind::GraphAttention => build_attention_loss(config, batch),
    }
}

/// Builds the tape, runs the forward pass, and returns the loss alongside the
/// evaluated tape so callers can read probes or run `backward`.
pub fn model_loss(
    config: &ModelConfig,
    params: &ParamVector,
    batch: &Batch,
) -> Result<(f64, Tape), ModelError> {
    let mut tape = build_loss_tape(config, batch)?;
    let loss = tape.forward(params)?;
    Ok((loss, tape))
}

/// Reads the `[batch x 1]` model outputs from an evaluated tape.
pub fn batch_outputs(tape: &Tape) -> Result<Vec<f64>, ModelError> {
    let node = tape
        .marked("outputs")
        .ok_or_else(|| ModelError::Config("tape has no outputs probe".to_string()))?;
    let value = tape.value(node).map_err(AutodiffError::from)?;
    Ok(value.data().to_vec())
}
