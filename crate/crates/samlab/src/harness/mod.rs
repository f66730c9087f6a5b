//! Experiment harness: datasets, configuration, training runs, and
//! comparisons.
//!
//! The harness turns the optimizer and diagnostics layers into reproducible
//! experiments. A [`RunConfig`] describes one run as flat `key = value`
//! pairs (defaults < config file < explicit overrides); [`run_training`]
//! executes it and persists per-step records, a deterministic metrics CSV,
//! the resolved config, and a manifest that can reproduce the run;
//! [`compare_optimizers`] replicates several configs across seeds and
//! aggregates them into one report.
//!
//! Three data sources are supported: a two-moons point cloud, synthetic
//! random graphs labeled by triangle counts, and graphs loaded from a plain
//! CSV block format (see [`load_graph_csv`]).

mod compare;
mod config;
mod dataset;
mod error;
mod graph_csv;
mod metrics;
mod moons;
mod motif;
mod split;
mod train;

pub use compare::{
    compare_optimizers, report_from_disk, CompareReport, CompareRow, COMPARE_CSV_HEADER,
};
pub use config::{
    resolve_out_dir, BaseKind, RunConfig, TaskSpec, DEFAULT_OUT_DIR, OUT_DIR_ENV,
};
pub use dataset::Dataset;
pub use error::HarnessError;
pub use graph_csv::{load_graph_csv, save_graph_csv};
pub use metrics::{accuracy, rmse, roc_auc};
pub use moons::generate_moons;
pub use motif::{
    count_triangles, generate_motif_graphs, relabel_for_regression, MOTIF_EDGE_DIM,
    MOTIF_NODE_DIM,
};
pub use split::{split_indices, SplitIndices};
pub use train::{run_training, RunManifest, RunOutput, RunStatus, ARTIFACT_VERSION};
