//! Experiment configuration.
//!
//! A run is described by a flat `key = value` text file (dotted keys group
//! related settings) plus command-line overrides; precedence is overrides >
//! file > defaults. Unknown keys and unparsable values are hard errors —
//! nothing is ever silently ignored or clamped, because a typo in a sweep
//! script would otherwise produce a plausible-looking wrong experiment.

use std::fmt;
use std::path::{Path, PathBuf};

use crate::models::{ModelConfig, ModelKind, TaskKind};
use crate::optim::{BaseOptimizer, ReanchorPolicy, SamConfig, VariantConfig};
use crate::seeds::component_seed;

use super::HarnessError;

/// Environment variable that overrides the output directory (below the
/// `--out` flag but above the config file).
pub const OUT_DIR_ENV: &str = "SAMLAB_OUT_DIR";
/// Output directory used when nothing else specifies one.
pub const DEFAULT_OUT_DIR: &str = "runs";

/// Which dataset the run trains on.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TaskSpec {
    SyntheticMoons,
    SyntheticMotifGraphs,
    GraphCsv,
}

impl fmt::Display for TaskSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TaskSpec::SyntheticMoons => "synthetic-moons",
            TaskSpec::SyntheticMotifGraphs => "synthetic-motif-graphs",
            TaskSpec::GraphCsv => "graph-csv",
        })
    }
}

/// Which first-order rule applies the updating gradient.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BaseKind {
    Adam,
    Sgd,
}

impl fmt::Display for BaseKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BaseKind::Adam => "adam",
            BaseKind::Sgd => "sgd",
        })
    }
}

/// Fully resolved description of one training run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub task: TaskSpec,
    /// Sample count for the synthetic tasks.
    pub n_samples: usize,
    /// Noise standard deviation (two-moons only).
    pub noise: f64,
    /// Dataset file (graph-csv only).
    pub data_path: Option<PathBuf>,

    pub hidden_dim: usize,
    pub num_layers: usize,
    pub task_kind: TaskKind,
    pub self_loops: bool,

    /// Optimizer variant name as accepted by [`VariantConfig`].
    pub variant: String,
    pub base: BaseKind,
    pub eta: f64,
    pub rho: f64,
    pub gamma: f64,
    pub lambda: u32,
    pub beta: f64,
    pub reanchor: ReanchorPolicy,
    /// Full-step period for the periodic and selective variants.
    pub k: u32,
    pub alpha_look: f64,
    pub quantile: f64,
    pub p_rst: f64,

    pub epochs: u32,
    pub batch_size: usize,
    pub split: (f64, f64, f64),
    pub seed: u64,

    /// Record the cosine against a fresh gradient every step (extra
    /// diagnostic passes, tallied separately from optimizer cost).
    pub ground_truth_eps: bool,
    /// Epochs after which to emit a landscape-slice CSV.
    pub landscape_epochs: Vec<u32>,

    pub out_dir: Option<PathBuf>,
    pub run_name: Option<String>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            task: TaskSpec::SyntheticMotifGraphs,
            n_samples: 200,
            noise: 0.2,
            data_path: None,
            hidden_dim: 8,
            num_layers: 2,
            task_kind: TaskKind::Classification,
            self_loops: true,
            variant: "sam".to_string(),
            base: BaseKind::Adam,
            eta: 0.01,
            rho: 0.05,
            gamma: 0.5,
            lambda: 1,
            beta: 0.99,
            reanchor: ReanchorPolicy::EveryKEpochs(1),
            k: 8,
            alpha_look: 0.2,
            quantile: 0.9,
            p_rst: 0.5,
            epochs: 10,
            batch_size: 32,
            split: (0.8, 0.1, 0.1),
            seed: 0,
            ground_truth_eps: false,
            landscape_epochs: Vec::new(),
            out_dir: None,
            run_name: None,
        }
    }
}

fn parse<T: std::str::FromStr>(key: &str, value: &str) -> Result<T, HarnessError> {
    value
        .trim()
        .parse()
        .map_err(|_| HarnessError::Config(format!("cannot parse {key} from {value:?}")))
}

fn parse_bool(key: &str, value: &str) -> Result<bool, HarnessError> {
    match value.trim() {
        "true" => Ok(true),
        "false" => Ok(false),
        other => Err(HarnessError::Config(format!(
            "{key} must be true or false, got {other:?}"
        ))),
    }
}

impl RunConfig {
    /// Applies one `key = value` assignment. Unknown keys are errors.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), HarnessError> {
        let value = value.trim();
        match key {
            "task" => {
                self.task = match value {
                    "synthetic-moons" => TaskSpec::SyntheticMoons,
                    "synthetic-motif-graphs" => TaskSpec::SyntheticMotifGraphs,
                    "graph-csv" => TaskSpec::GraphCsv,
                    other => {
                        return Err(HarnessError::Config(format!(
                            "unknown task {other:?} (expected synthetic-moons, \
                             synthetic-motif-graphs, or graph-csv)"
                        )))
                    }
                }
            }
            "task.n_samples" => self.n_samples = parse(key, value)?,
            "task.noise" => self.noise = parse(key, value)?,
            "task.path" => self.data_path = Some(PathBuf::from(value)),
            "model.hidden_dim" => self.hidden_dim = parse(key, value)?,
            "model.num_layers" => self.num_layers = parse(key, value)?,
            "model.task" => {
                self.task_kind = match value {
                    "classification" => TaskKind::Classification,
                    "regression" => TaskKind::Regression,
                    other => {
                        return Err(HarnessError::Config(format!(
                            "model.task must be classification or regression, got {other:?}"
                        )))
                    }
                }
            }
            "model.self_loops" => self.self_loops = parse_bool(key, value)?,
            "optimizer.variant" => self.variant = value.to_string(),
            "optimizer.base" => {
                self.base = match value {
                    "adam" => BaseKind::Adam,
                    "sgd" => BaseKind::Sgd,
                    other => {
                        return Err(HarnessError::Config(format!(
                            "optimizer.base must be adam or sgd, got {other:?}"
                        )))
                    }
                }
            }
            "optimizer.eta" => self.eta = parse(key, value)?,
            "optimizer.rho" => self.rho = parse(key, value)?,
            "optimizer.gamma" => self.gamma = parse(key, value)?,
            "optimizer.lambda" => self.lambda = parse(key, value)?,
            "optimizer.beta" => self.beta = parse(key, value)?,
            "optimizer.reanchor" => {
                self.reanchor = match value {
                    "every-step" => ReanchorPolicy::EveryStep,
                    "never" => ReanchorPolicy::Never,
                    k => ReanchorPolicy::EveryKEpochs(parse(key, k)?),
                }
            }
            "optimizer.k" => self.k = parse(key, value)?,
            "optimizer.alpha_look" => self.alpha_look = parse(key, value)?,
            "optimizer.quantile" => self.quantile = parse(key, value)?,
            "optimizer.p_rst" => self.p_rst = parse(key, value)?,
            "epochs" => self.epochs = parse(key, value)?,
            "batch_size" => self.batch_size = parse(key, value)?,
            "split.train" => self.split.0 = parse(key, value)?,
            "split.val" => self.split.1 = parse(key, value)?,
            "split.test" => self.split.2 = parse(key, value)?,
            "seed" => self.seed = parse(key, value)?,
            "diagnostics.ground_truth_eps" => self.ground_truth_eps = parse_bool(key, value)?,
            "diagnostics.landscape_epochs" => {
                self.landscape_epochs = if value.is_empty() {
                    Vec::new()
                } else {
                    value
                        .split(',')
                        .map(|v| parse(key, v))
                        .collect::<Result<Vec<u32>, _>>()?
                }
            }
            "out_dir" => self.out_dir = Some(PathBuf::from(value)),
            "run_name" => self.run_name = Some(value.to_string()),
            other => {
                return Err(HarnessError::Config(format!("unknown config key {other:?}")))
            }
        }
        Ok(())
    }

    /// Parses config text (defaults plus assignments). `origin` labels parse
    /// errors, typically with the file path.
    pub fn from_text(text: &str, origin: &str) -> Result<Self, HarnessError> {
        let mut config = Self::default();
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| HarnessError::Parse {
                path: origin.to_string(),
                line: idx + 1,
                detail: format!("expected key = value, got {line:?}"),
            })?;
            config
                .set(key.trim(), value.trim())
                .map_err(|e| HarnessError::Parse {
                    path: origin.to_string(),
                    line: idx + 1,
                    detail: e.to_string(),
                })?;
        }
        Ok(config)
    }

    pub fn from_file(path: &Path) -> Result<Self, HarnessError> {
        let text = std::fs::read_to_string(path)?;
        Self::from_text(&text, &path.display().to_string())
    }

    /// Defaults, then the optional file, then the overrides; validated.
    pub fn load(
        path: Option<&Path>,
        overrides: &[(String, String)],
    ) -> Result<Self, HarnessError> {
        let mut config = match path {
            Some(p) => Self::from_file(p)?,
            None => Self::default(),
        };
        for (key, value) in overrides {
            config.set(key, value)?;
        }
        config.validate()?;
        Ok(config)
    }

    /// Splits a `key=value` override argument.
    pub fn parse_override(raw: &str) -> Result<(String, String), HarnessError> {
        let (key, value) = raw.split_once('=').ok_or_else(|| {
            HarnessError::Config(format!("override {raw:?} is not of the form key=value"))
        })?;
        Ok((key.trim().to_string(), value.trim().to_string()))
    }

    /// Canonical serialization: every key explicit, fixed order, reparsable
    /// by [`RunConfig::from_text`]. Used for the resolved copy a run stores
    /// next to its artifacts.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let mut push = |key: &str, value: String| {
            out.push_str(key);
            out.push_str(" = ");
            out.push_str(&value);
            out.push('\n');
        };
        push("task", self.task.to_string());
        push("task.n_samples", self.n_samples.to_string());
        push("task.noise", self.noise.to_string());
        if let Some(p) = &self.data_path {
            push("task.path", p.display().to_string());
        }
        push("model.hidden_dim", self.hidden_dim.to_string());
        push("model.num_layers", self.num_layers.to_string());
        push(
            "model.task",
            match self.task_kind {
                TaskKind::Classification => "classification".to_string(),
                TaskKind::Regression => "regression".to_string(),
            },
        );
        push("model.self_loops", self.self_loops.to_string());
        push("optimizer.variant", self.variant.clone());
        push("optimizer.base", self.base.to_string());
        push("optimizer.eta", self.eta.to_string());
        push("optimizer.rho", self.rho.to_string());
        push("optimizer.gamma", self.gamma.to_string());
        push("optimizer.lambda", self.lambda.to_string());
        push("optimizer.beta", self.beta.to_string());
        push(
            "optimizer.reanchor",
            match self.reanchor {
                ReanchorPolicy::EveryStep => "every-step".to_string(),
                ReanchorPolicy::Never => "never".to_string(),
                ReanchorPolicy::EveryKEpochs(k) => k.to_string(),
            },
        );
        push("optimizer.k", self.k.to_string());
        push("optimizer.alpha_look", self.alpha_look.to_string());
        push("optimizer.quantile", self.quantile.to_string());
        push("optimizer.p_rst", self.p_rst.to_string());
        push("epochs", self.epochs.to_string());
        push("batch_size", self.batch_size.to_string());
        push("split.train", self.split.0.to_string());
        push("split.val", self.split.1.to_string());
        push("split.test", self.split.2.to_string());
        push("seed", self.seed.to_string());
        push("diagnostics.ground_truth_eps", self.ground_truth_eps.to_string());
        push(
            "diagnostics.landscape_epochs",
            self.landscape_epochs
                .iter()
                .map(|e| e.to_string())
                .collect::<Vec<_>>()
                .join(","),
        );
        if let Some(p) = &self.out_dir {
            push("out_dir", p.display().to_string());
        }
        if let Some(name) = &self.run_name {
            push("run_name", name.clone());
        }
        out
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        if self.epochs < 1 {
            return Err(HarnessError::Config("epochs must be at least 1".to_string()));
        }
        if self.batch_size < 1 {
            return Err(HarnessError::Config(
                "batch_size must be at least 1".to_string(),
            ));
        }
        let (tr, va, te) = self.split;
        if (tr + va + te - 1.0).abs() > 1e-9 {
            return Err(HarnessError::Config(format!(
                "split ratios must sum to 1, got {tr} + {va} + {te}"
            )));
        }
        if self.task == TaskSpec::GraphCsv && self.data_path.is_none() {
            return Err(HarnessError::Config(
                "task graph-csv requires task.path".to_string(),
            ));
        }
        if self.task != TaskSpec::GraphCsv && self.n_samples < 2 {
            return Err(HarnessError::Config(
                "synthetic tasks need task.n_samples >= 2".to_string(),
            ));
        }
        if !(self.eta.is_finite() && self.eta > 0.0) {
            return Err(HarnessError::Config(format!(
                "optimizer.eta must be finite and positive, got {}",
                self.eta
            )));
        }
        // Variant and perturbation settings get their full validation from
        // the optimizer constructor; surface those errors at config time.
        let sam_config = self.sam_config()?;
        sam_config.validate().map_err(HarnessError::Optim)?;
        Ok(())
    }

    /// The optimizer variant this config describes, with per-variant
    /// parameters filled in. The Bernoulli variant's stream is seeded from
    /// the master seed under its own label.
    pub fn variant_config(&self) -> Result<VariantConfig, HarnessError> {
        Ok(match self.variant.as_str() {
            "adam" => VariantConfig::Adam,
            "sam" => VariantConfig::Sam,
            "graphsam" => VariantConfig::GraphSam,
            "sam_one" => VariantConfig::SamOne,
            "sam_k" => VariantConfig::SamK { k: self.k },
            "looksam" => VariantConfig::LookSam {
                k: self.k,
                alpha_look: self.alpha_look,
            },
            "aesam" => VariantConfig::AeSam {
                quantile: self.quantile,
            },
            "rst" => VariantConfig::Rst {
                p_rst: self.p_rst,
                rng_seed: component_seed(self.seed, "rst"),
            },
            other => {
                return Err(HarnessError::Config(format!(
                    "unknown optimizer.variant {other:?}"
                )))
            }
        })
    }

    pub fn sam_config(&self) -> Result<SamConfig, HarnessError> {
        let mut config = SamConfig::new(self.variant_config()?);
        config.rho_initial = self.rho;
        config.gamma = self.gamma;
        config.lambda = self.lambda;
        config.beta = self.beta;
        config.reanchor = self.reanchor;
        Ok(config)
    }

    pub fn base_optimizer(
        &self,
        map: &std::sync::Arc<crate::autodiff::SegmentMap>,
    ) -> Result<BaseOptimizer, HarnessError> {
        Ok(match self.base {
            BaseKind::Adam => BaseOptimizer::adam(map, self.eta)?,
            BaseKind::Sgd => BaseOptimizer::sgd(self.eta)?,
        })
    }

    /// Model architecture for this run; feature dimensions come from the
    /// loaded dataset, the init seed from the master seed.
    pub fn model_config(&self, input_dim: usize, edge_dim: usize) -> ModelConfig {
        ModelConfig {
            kind: match self.task {
                TaskSpec::SyntheticMoons => ModelKind::Mlp,
                _ => ModelKind::GraphAttention,
            },
            input_dim,
            edge_dim,
            hidden_dim: self.hidden_dim,
            num_layers: self.num_layers,
            task: self.task_kind,
            init_seed: component_seed(self.seed, "init"),
            self_loops: self.self_loops,
        }
    }

    /// Directory name for this run's artifacts.
    pub fn resolved_run_name(&self) -> String {
        self.run_name
            .clone()
            .unwrap_or_else(|| format!("{}-seed{}", self.variant, self.seed))
    }

    /// True when two configs describe the same experiment apart from the
    /// optimizer: identical data, model, schedule, split, seed, and
    /// diagnostics. This is the precondition for a fair comparison.
    pub fn same_experiment(&self, other: &Self) -> bool {
        self.task == other.task
            && self.n_samples == other.n_samples
            && self.noise == other.noise
            && self.data_path == other.data_path
            && self.hidden_dim == other.hidden_dim
            && self.num_layers == other.num_layers
            && self.task_kind == other.task_kind
            && self.self_loops == other.self_loops
            && self.epochs == other.epochs
            && self.batch_size == other.batch_size
            && self.split == other.split
            && self.seed == other.seed
            && self.ground_truth_eps == other.ground_truth_eps
            && self.landscape_epochs == other.landscape_epochs
    }
}

/// Output directory resolution: explicit flag, then the environment
/// variable, then the config file, then the default.
pub fn resolve_out_dir(flag: Option<&Path>, config: &RunConfig) -> PathBuf {
    if let Some(dir) = flag {
        return dir.to_path_buf();
    }
    if let Ok(dir) = std::env::var(OUT_DIR_ENV) {
        if !dir.is_empty() {
            return PathBuf::from(dir);
        }
    }
    config
        .out_dir
        .clone()
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT_DIR))
}
