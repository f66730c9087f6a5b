//! The optimizer family: base Adam/SGD plus seven sharpness-aware step rules
//! under one step-function interface with exact forward/backward accounting.
//!
//! The family shares a single mechanical core — project a perturbation
//! gradient ε onto the ρ-sphere, take the updating gradient ω at the
//! perturbed point, apply the base update at the unperturbed parameters — and
//! differs only in how ε is obtained: recomputed each step, frozen, refreshed
//! periodically, kept as a moving average of past ω directions, or gated by a
//! decision rule. Sharing the core is what makes the degenerate
//! configurations (re-anchor every step, ρ = 0, k = 1, p = 1) collapse to
//! each other bit for bit, which the tests rely on.

mod adam;
mod error;
mod objective;
mod perturb;
mod sam;

pub use adam::{adam_step, AdamState, BaseOptimizer};
pub use error::OptimError;
pub use objective::{Objective, TapeObjective};
pub use perturb::{closed_form_epsilon, project_perturbation, rho_schedule, ReanchorPolicy};
pub use sam::{PerturbState, SamConfig, SamOptimizer, StepOutcome, VariantConfig};
