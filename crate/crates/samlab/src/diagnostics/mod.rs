//! Measurement tools for watching an optimizer work.
//!
//! Everything here is an observer: the probes evaluate cloned tapes at
//! shifted parameter copies, record what they saw, and leave both the model
//! and the optimizer state untouched. The pieces are
//!
//! * per-step [`StepRecord`]s with a fixed CSV schema, plus consistency-rate
//!   statistics over them;
//! * direction comparisons ([`cosine_similarity`], [`ground_truth_epsilon`])
//!   that ask whether a reused perturbation still points where a fresh
//!   gradient would;
//! * landscape probes ([`landscape_slice`], [`sharpness_estimate`]) that
//!   measure the loss surface itself;
//! * gap analysis ([`taylor_gap`], [`chord_and_arc`]) comparing two
//!   perturbations of the same point;
//! * the [`throughput_report`] table anchored to the two-pass baseline.

mod error;
mod landscape;
mod record;
mod similarity;
mod taylor;
mod throughput;

pub use error::DiagnosticsError;
pub use landscape::{
    landscape_slice, sample_direction, sharpness_estimate, write_landscape_csv, LandscapeSlice,
};
pub use record::{
    consistency_rate, read_step_records_csv, step_records_to_csv, step_records_to_metrics_csv,
    write_step_records_csv, CosineField, StepRecord, METRICS_HEADER, STEP_RECORD_HEADER,
};
pub use similarity::{
    classify_consistency, cosine_similarity, ground_truth_epsilon, Consistency,
};
pub use taylor::{chord_and_arc, taylor_gap};
pub use throughput::{throughput_report, ThroughputReport, ThroughputRow};
