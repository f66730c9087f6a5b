//! samlab — a desk-scale laboratory for sharpness-aware minimization.
//!
//! The crate stacks five layers:
//!
//! * [`autodiff`] — reverse-mode tape over dense `f64` matrices, built for
//!   bit-reproducibility rather than speed.
//! * [`models`] — small trainable models (an MLP, a single-head graph
//!   attention network, and an analytic quadratic bowl) that emit tapes.
//! * [`optim`] — a family of sharpness-aware optimizers sharing one step
//!   interface: SAM, a moving-average variant that reuses perturbation
//!   gradients across steps, and several cheaper baselines.
//! * [`diagnostics`] — per-step records, gradient-direction similarity,
//!   loss-landscape slices, sharpness estimates, and throughput reports.
//! * [`harness`] — datasets, config handling, the training loop, and
//!   multi-run comparisons.

pub mod autodiff;
pub mod diagnostics;
pub mod harness;
pub mod models;
pub mod optim;
pub mod parallel;
pub mod seeds;
