//! Side-by-side optimizer comparisons.
//!
//! `compare_optimizers` takes a list of configs that agree on everything
//! except their optimizer settings, runs each one under several replicate
//! seeds (replicate `i` shifts the master seed by `i`, so replicate 0 is the
//! config exactly as given), and aggregates one report row per config: final
//! test metric as mean ± sample standard deviation, training throughput in
//! samples per second, throughput relative to the row labeled `sam`, and the
//! perturbation-consistency rate where the variant produces one.
//!
//! Replicate runs are independent, so they execute in parallel, one run per
//! worker. All aggregation is pure arithmetic over the persisted artifacts;
//! `report_from_disk` rebuilds the identical report from a finished
//! comparison directory without re-training anything.

use std::fmt;
use std::path::{Path, PathBuf};

use crate::diagnostics::{consistency_rate, read_step_records_csv, CosineField, StepRecord};
use crate::parallel::map_indexed;

use super::config::RunConfig;
use super::train::{run_training, RunManifest, RunStatus};
use super::HarnessError;

/// Column header of `compare.csv`.
pub const COMPARE_CSV_HEADER: &str =
    "label,replicates,metric_mean,metric_std,samples_per_second,percent_of_sam,consistency_rate";

/// Aggregated result of one config across its replicates.
#[derive(Debug, Clone, PartialEq)]
pub struct CompareRow {
    pub label: String,
    pub replicates: u32,
    /// Mean final test metric across replicates.
    pub metric_mean: f64,
    /// Sample standard deviation (zero for a single replicate).
    pub metric_std: f64,
    /// Training samples consumed per second of recorded step time, pooled
    /// over all replicates.
    pub samples_per_second: f64,
    /// Throughput as a percentage of the `sam` row; the anchor row itself is
    /// exactly 100. Absent when no row is labeled `sam`.
    pub percent_of_sam: Option<f64>,
    /// Fraction of steps whose perturbation stayed aligned with the previous
    /// ascent gradient; absent for variants that never perturb.
    pub consistency_rate: Option<f64>,
}

/// One row per config, in the order the configs were given.
#[derive(Debug, Clone, PartialEq)]
pub struct CompareReport {
    pub rows: Vec<CompareRow>,
}

impl CompareReport {
    pub fn row(&self, label: &str) -> Option<&CompareRow> {
        self.rows.iter().find(|r| r.label == label)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from(COMPARE_CSV_HEADER);
        out.push('\n');
        for r in &self.rows {
            let percent = r.percent_of_sam.map(|v| v.to_string()).unwrap_or_default();
            let consistency = r
                .consistency_rate
                .map(|v| v.to_string())
                .unwrap_or_default();
            out.push_str(&format!(
                "{},{},{},{},{},{},{}\n",
                r.label,
                r.replicates,
                r.metric_mean,
                r.metric_std,
                r.samples_per_second,
                percent,
                consistency
            ));
        }
        out
    }

    pub fn write_csv(&self, path: &Path) -> Result<(), HarnessError> {
        std::fs::write(path, self.to_csv())?;
        Ok(())
    }
}

impl fmt::Display for CompareReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let width = self
            .rows
            .iter()
            .map(|r| r.label.len())
            .chain(std::iter::once("label".len()))
            .max()
            .unwrap_or(5);
        writeln!(
            f,
            "{:<width$}  {:>4}  {:>19}  {:>12}  {:>8}  {:>11}",
            "label", "reps", "test_metric", "samples/s", "vs sam", "consistency"
        )?;
        for r in &self.rows {
            let metric = format!("{:.4} \u{00b1} {:.4}", r.metric_mean, r.metric_std);
            let percent = r
                .percent_of_sam
                .map(|v| format!("{v:.1}%"))
                .unwrap_or_else(|| "-".to_string());
            let consistency = r
                .consistency_rate
                .map(|v| format!("{:.2}%", v * 100.0))
                .unwrap_or_else(|| "-".to_string());
            writeln!(
                f,
                "{:<width$}  {:>4}  {:>19}  {:>12.1}  {:>8}  {:>11}",
                r.label, r.replicates, metric, r.samples_per_second, percent, consistency
            )?;
        }
        Ok(())
    }
}

/// Row label for a config: its explicit run name, else its variant.
fn row_label(config: &RunConfig) -> String {
    config
        .run_name
        .clone()
        .unwrap_or_else(|| config.variant.clone())
}

/// The config actually executed for replicate `rep` of a row.
fn replicate_config(base: &RunConfig, rep: u32) -> RunConfig {
    let mut config = base.clone();
    config.seed = base.seed.wrapping_add(rep as u64);
    config.run_name = Some(format!("rep{rep}"));
    config
}

fn mean_and_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// Per-replicate numbers the aggregation needs.
struct RunSummary {
    test_metric: f64,
    samples_processed: u64,
    step_wall_ns: u128,
    records: Vec<StepRecord>,
}

fn summarize(
    manifest: &RunManifest,
    records: Vec<StepRecord>,
    run_dir: &Path,
) -> Result<RunSummary, HarnessError> {
    if let RunStatus::Diverged { epoch, step } = manifest.status {
        return Err(HarnessError::Diverged {
            run: run_dir.to_path_buf(),
            epoch,
            step,
        });
    }
    let test_metric = manifest.final_metric("test_metric").ok_or_else(|| {
        HarnessError::Metric(format!(
            "run {} finished without a test metric",
            run_dir.display()
        ))
    })?;
    Ok(RunSummary {
        test_metric,
        samples_processed: manifest.samples_per_epoch * manifest.config.epochs as u64,
        step_wall_ns: records.iter().map(|r| r.wall_time_ns as u128).sum(),
        records,
    })
}

fn aggregate(label: &str, summaries: Vec<RunSummary>) -> Result<CompareRow, HarnessError> {
    let metrics: Vec<f64> = summaries.iter().map(|s| s.test_metric).collect();
    let (metric_mean, metric_std) = mean_and_std(&metrics);
    let total_samples: u64 = summaries.iter().map(|s| s.samples_processed).sum();
    let total_ns: u128 = summaries.iter().map(|s| s.step_wall_ns).sum();
    if total_ns == 0 {
        return Err(HarnessError::Metric(format!(
            "rows for {label} recorded zero step time"
        )));
    }
    let all_records: Vec<StepRecord> = summaries.into_iter().flat_map(|s| s.records).collect();
    let consistency = if all_records.iter().any(|r| r.consistent.is_some()) {
        Some(consistency_rate(&all_records, CosineField::EpsOmega)?)
    } else {
        None
    };
    Ok(CompareRow {
        label: label.to_string(),
        replicates: 0, // callers fill this in
        metric_mean,
        metric_std,
        samples_per_second: total_samples as f64 / (total_ns as f64 / 1e9),
        percent_of_sam: None,
        consistency_rate: consistency,
    })
}

/// Fills the `percent_of_sam` column once all rows exist.
fn anchor_to_sam(rows: &mut [CompareRow]) {
    let sam_rate = rows
        .iter()
        .find(|r| r.label == "sam")
        .map(|r| r.samples_per_second);
    if let Some(rate) = sam_rate {
        if rate > 0.0 {
            for r in rows.iter_mut() {
                r.percent_of_sam = Some(r.samples_per_second / rate * 100.0);
            }
        }
    }
}

fn validate_lineup(configs: &[RunConfig], replicates: u32) -> Result<Vec<String>, HarnessError> {
    if configs.is_empty() {
        return Err(HarnessError::Config(
            "comparison needs at least one config".to_string(),
        ));
    }
    if replicates == 0 {
        return Err(HarnessError::Config(
            "comparison needs at least one replicate".to_string(),
        ));
    }
    let labels: Vec<String> = configs.iter().map(row_label).collect();
    for (i, label) in labels.iter().enumerate() {
        if labels[..i].contains(label) {
            return Err(HarnessError::Config(format!(
                "duplicate comparison label {label:?}; set run_name to disambiguate"
            )));
        }
    }
    for config in &configs[1..] {
        if !config.same_experiment(&configs[0]) {
            return Err(HarnessError::Config(
                "comparison configs must differ only in optimizer settings".to_string(),
            ));
        }
    }
    Ok(labels)
}

/// Runs every config under `replicates` seeds and aggregates one row each.
///
/// Artifacts land under `out_root/<label>/rep<i>/`, and the finished report
/// is written to `out_root/compare.csv`. Any replicate that diverges aborts
/// the comparison with the offending run's location.
pub fn compare_optimizers(
    configs: &[RunConfig],
    replicates: u32,
    out_root: &Path,
) -> Result<CompareReport, HarnessError> {
    let labels = validate_lineup(configs, replicates)?;
    for config in configs {
        config.validate()?;
    }

    let jobs: Vec<(usize, u32)> = (0..configs.len())
        .flat_map(|c| (0..replicates).map(move |r| (c, r)))
        .collect();
    let outputs = map_indexed(jobs.len(), |j| {
        let (c, rep) = jobs[j];
        let config = replicate_config(&configs[c], rep);
        run_training(&config, &out_root.join(&labels[c]))
    });

    let mut per_config: Vec<Vec<RunSummary>> = (0..configs.len()).map(|_| Vec::new()).collect();
    for (&(c, _), output) in jobs.iter().zip(outputs) {
        let output = output?;
        per_config[c].push(summarize(&output.manifest, output.records, &output.run_dir)?);
    }

    let mut rows = Vec::with_capacity(configs.len());
    for (label, summaries) in labels.iter().zip(per_config) {
        let mut row = aggregate(label, summaries)?;
        row.replicates = replicates;
        rows.push(row);
    }
    anchor_to_sam(&mut rows);

    let report = CompareReport { rows };
    report.write_csv(&out_root.join("compare.csv"))?;
    Ok(report)
}

/// Rebuilds the report for `labels` from a finished comparison directory.
///
/// Reads only the persisted manifests and step CSVs, so the result is
/// bit-identical to what `compare_optimizers` returned for the same runs.
pub fn report_from_disk(out_root: &Path, labels: &[&str]) -> Result<CompareReport, HarnessError> {
    let mut rows = Vec::with_capacity(labels.len());
    for &label in labels {
        let row_dir = out_root.join(label);
        let mut summaries = Vec::new();
        for rep in 0.. {
            let run_dir: PathBuf = row_dir.join(format!("rep{rep}"));
            if !run_dir.join("manifest.txt").exists() {
                break;
            }
            let manifest = RunManifest::read(&run_dir.join("manifest.txt"))?;
            let records = read_step_records_csv(&run_dir.join(&manifest.steps_csv))?;
            summaries.push(summarize(&manifest, records, &run_dir)?);
        }
        if summaries.is_empty() {
            return Err(HarnessError::Config(format!(
                "no runs found under {}",
                row_dir.display()
            )));
        }
        let replicates = summaries.len() as u32;
        let mut row = aggregate(label, summaries)?;
        row.replicates = replicates;
        rows.push(row);
    }
    anchor_to_sam(&mut rows);
    Ok(CompareReport { rows })
}
