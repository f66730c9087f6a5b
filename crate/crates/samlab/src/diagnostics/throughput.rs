//! Throughput comparison across optimizer variants.
//!
//! Rates are computed from the per-step wall times recorded during training,
//! which by convention cover only the optimizer's own work — diagnostic
//! gradients and probes run on separate clones and never enter these sums.
//! Every report is anchored to the two-pass baseline run named `sam`, whose
//! row reads exactly 100%.

use std::fmt;

use super::record::StepRecord;
use super::DiagnosticsError;

/// One variant's measured training rate.
#[derive(Debug, Clone, PartialEq)]
pub struct ThroughputRow {
    pub variant: String,
    pub samples_per_second: f64,
    /// This variant's rate as a percentage of the `sam` run's rate.
    pub percent_of_sam: f64,
}

/// Throughput table for a set of runs over identical data.
#[derive(Debug, Clone, PartialEq)]
pub struct ThroughputReport {
    pub rows: Vec<ThroughputRow>,
}

impl fmt::Display for ThroughputReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name_width = self
            .rows
            .iter()
            .map(|r| r.variant.len())
            .chain(std::iter::once("variant".len()))
            .max()
            .unwrap_or(7);
        writeln!(f, "{:<name_width$}  {:>12}  {:>10}", "variant", "samples/s", "vs sam")?;
        for row in &self.rows {
            let percent = format!("({:.1}%)", row.percent_of_sam);
            writeln!(
                f,
                "{:<name_width$}  {:>12.1}  {:>10}",
                row.variant, row.samples_per_second, percent
            )?;
        }
        Ok(())
    }
}

/// Builds the throughput table for runs that processed the same
/// `total_samples` over the same number of steps.
///
/// Requires every run to have the same record count (otherwise the rates
/// would compare different workloads) and exactly one run named `sam` to
/// serve as the 100% reference.
pub fn throughput_report(
    runs: &[(&str, &[StepRecord])],
    total_samples: u64,
) -> Result<ThroughputReport, DiagnosticsError> {
    if runs.is_empty() {
        return Err(DiagnosticsError::Input(
            "throughput report needs at least one run".to_string(),
        ));
    }
    if total_samples == 0 {
        return Err(DiagnosticsError::Input(
            "throughput report needs a positive sample count".to_string(),
        ));
    }
    let steps = runs[0].1.len();
    if steps == 0 {
        return Err(DiagnosticsError::Input(
            "throughput report needs at least one recorded step".to_string(),
        ));
    }
    for (variant, records) in runs {
        if records.len() != steps {
            return Err(DiagnosticsError::Input(format!(
                "run {variant:?} recorded {} steps but the first run recorded {steps}; \
                 rates over different workloads are not comparable",
                records.len()
            )));
        }
    }

    let mut sam_rate = None;
    let mut rates = Vec::with_capacity(runs.len());
    for (variant, records) in runs {
        let total_ns: u128 = records.iter().map(|r| u128::from(r.wall_time_ns)).sum();
        if total_ns == 0 {
            return Err(DiagnosticsError::Input(format!(
                "run {variant:?} recorded zero wall time"
            )));
        }
        let rate = total_samples as f64 / (total_ns as f64 / 1e9);
        if *variant == "sam" {
            if sam_rate.is_some() {
                return Err(DiagnosticsError::Input(
                    "throughput report found two runs named \"sam\"".to_string(),
                ));
            }
            sam_rate = Some(rate);
        }
        rates.push((variant.to_string(), rate));
    }
    let sam_rate = sam_rate.ok_or_else(|| {
        DiagnosticsError::Input(
            "throughput report needs a run named \"sam\" as its reference".to_string(),
        )
    })?;

    Ok(ThroughputReport {
        rows: rates
            .into_iter()
            .map(|(variant, rate)| ThroughputRow {
                variant,
                samples_per_second: rate,
                percent_of_sam: rate / sam_rate * 100.0,
            })
            .collect(),
    })
}
