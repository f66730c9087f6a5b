//! Model zoo: the flat and graph-structured objectives the optimizers train.
//!
//! Every model here compiles down to a [`crate::autodiff::Tape`] over a named
//! parameter vector, so optimizers and diagnostics never see model internals,
//! only `loss(params) -> f64` and its gradient. The zoo covers three tiers:
//!
//! * [`QuadraticBowl`] — closed-form loss/gradient/curvature for oracle tests.
//! * [`build_mlp_loss`] — a tanh MLP over fixed-length feature vectors.
//! * [`build_attention_loss`] — a graph attention network with edge-feature
//!   score biases, the workload the perturbation-reuse optimizers target.

mod attention;
mod config;
mod error;
mod graph;
mod init;
mod loss;
mod mlp;
mod quadratic;

pub use attention::build_attention_loss;
pub use config::{ModelConfig, ModelKind, SegmentInit, SegmentLayout, TaskKind};
pub use error::ModelError;
pub use graph::{Batch, GraphSample};
pub use init::init_model;
pub use loss::{batch_outputs, build_loss_tape, model_loss};
pub use mlp::build_mlp_loss;
pub use quadratic::QuadraticBowl;
