//! Per-step training records and their CSV persistence.
//!
//! One record is appended per optimizer step. Fields that compare a step to
//! its successor (`eps_change`, `omega_change`, `cos_eps_omega`, and the
//! derived `consistent` flag) are back-filled once the next step has run, so
//! the final record of a run leaves them empty. Optional fields serialize as
//! empty CSV cells and parse back to `None`, which keeps a written file
//! byte-identical across a round trip.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use super::similarity::classify_consistency;
use super::DiagnosticsError;

/// Column order of the per-step CSV. Kept as a single constant so writers,
/// readers, and downstream tooling can never drift apart.
pub const STEP_RECORD_HEADER: &str = "epoch,step,train_loss,eval_metric,eps_norm,\
omega_norm,eps_change,omega_change,cos_eps_omega,cos_eps_vs_ground_truth,\
consistent,forwards,backwards,wall_time_ns";

/// Column order of the deterministic metrics CSV: the step-record columns in
/// the same order minus `wall_time_ns`, the one field the machine clock makes
/// unrepeatable. Everything in this file is a pure function of config and
/// seed, so re-running a run must reproduce it byte for byte.
pub const METRICS_HEADER: &str = "epoch,step,train_loss,eval_metric,eps_norm,\
omega_norm,eps_change,omega_change,cos_eps_omega,cos_eps_vs_ground_truth,\
consistent,forwards,backwards";

/// Everything measured about one optimizer step.
#[derive(Debug, Clone, PartialEq)]
pub struct StepRecord {
    /// Epoch this step belongs to.
    pub epoch: u32,
    /// Global step index across the whole run.
    pub step: u64,
    /// Loss reported by the optimizer for this step.
    pub train_loss: f64,
    /// Held-out metric; only present on steps where evaluation ran.
    pub eval_metric: Option<f64>,
    /// Norm of the raw perturbation direction used this step (0 for base steps).
    pub eps_norm: f64,
    /// Norm of the updating gradient applied this step.
    pub omega_norm: f64,
    /// `||eps[t+1] - eps[t]||`, filled once the next step has run.
    pub eps_change: Option<f64>,
    /// `||omega[t+1] - omega[t]||`, filled once the next step has run.
    pub omega_change: Option<f64>,
    /// Cosine between the next step's perturbation direction and this step's
    /// updating gradient, the pair whose sign defines consistency.
    pub cos_eps_omega: Option<f64>,
    /// Cosine between the perturbation direction actually used and a fresh
    /// gradient at the same point; only present when the run opts into the
    /// extra diagnostic gradient.
    pub cos_eps_vs_ground_truth: Option<f64>,
    /// Sign classification of `cos_eps_omega`.
    pub consistent: Option<bool>,
    /// Forward passes the optimizer spent on this step.
    pub forwards: u64,
    /// Backward passes the optimizer spent on this step.
    pub backwards: u64,
    /// Wall-clock duration of the optimizer step, excluding diagnostics.
    pub wall_time_ns: u64,
}

impl StepRecord {
    /// Fills the fields that compare this step against its successor.
    /// `consistent` is derived from the cosine, never set independently.
    pub fn backfill_next(
        &mut self,
        eps_change: f64,
        omega_change: f64,
        cos_eps_omega: Option<f64>,
    ) {
        self.eps_change = Some(eps_change);
        self.omega_change = Some(omega_change);
        self.cos_eps_omega = cos_eps_omega;
        self.consistent = cos_eps_omega.map(|c| classify_consistency(c).is_consistent());
    }
}

/// Which cosine column a rate statistic should aggregate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CosineField {
    /// Successor perturbation vs. current updating gradient.
    EpsOmega,
    /// Used perturbation vs. fresh gradient at the same parameters.
    EpsVsGroundTruth,
}

/// Fraction of records whose chosen cosine is non-negative, over the records
/// where that cosine is present. Errors when no record carries the field, so
/// a forgotten measurement can't masquerade as a 0% rate.
pub fn consistency_rate(
    records: &[StepRecord],
    field: CosineField,
) -> Result<f64, DiagnosticsError> {
    let mut present = 0_u64;
    let mut consistent = 0_u64;
    for record in records {
        let cos = match field {
            CosineField::EpsOmega => record.cos_eps_omega,
            CosineField::EpsVsGroundTruth => record.cos_eps_vs_ground_truth,
        };
        if let Some(c) = cos {
            present += 1;
            if classify_consistency(c).is_consistent() {
                consistent += 1;
            }
        }
    }
    if present == 0 {
        return Err(DiagnosticsError::Input(
            "consistency rate needs at least one record with the requested cosine".to_string(),
        ));
    }
    Ok(consistent as f64 / present as f64)
}

fn push_opt_f64(line: &mut String, value: Option<f64>) {
    match value {
        Some(v) => write!(line, ",{v}").unwrap(),
        None => line.push(','),
    }
}

fn record_line(r: &StepRecord, with_wall_time: bool) -> String {
    let mut line = format!("{},{},{}", r.epoch, r.step, r.train_loss);
    push_opt_f64(&mut line, r.eval_metric);
    write!(line, ",{},{}", r.eps_norm, r.omega_norm).unwrap();
    push_opt_f64(&mut line, r.eps_change);
    push_opt_f64(&mut line, r.omega_change);
    push_opt_f64(&mut line, r.cos_eps_omega);
    push_opt_f64(&mut line, r.cos_eps_vs_ground_truth);
    match r.consistent {
        Some(b) => write!(line, ",{b}").unwrap(),
        None => line.push(','),
    }
    write!(line, ",{},{}", r.forwards, r.backwards).unwrap();
    if with_wall_time {
        write!(line, ",{}", r.wall_time_ns).unwrap();
    }
    line
}

/// Renders records into CSV text with the fixed header.
pub fn step_records_to_csv(records: &[StepRecord]) -> String {
    let mut out = String::with_capacity(64 * (records.len() + 1));
    out.push_str(STEP_RECORD_HEADER);
    out.push('\n');
    for r in records {
        out.push_str(&record_line(r, true));
        out.push('\n');
    }
    out
}

/// Renders the deterministic projection of the records (no wall times).
pub fn step_records_to_metrics_csv(records: &[StepRecord]) -> String {
    let mut out = String::with_capacity(64 * (records.len() + 1));
    out.push_str(METRICS_HEADER);
    out.push('\n');
    for r in records {
        out.push_str(&record_line(r, false));
        out.push('\n');
    }
    out
}

/// Writes records to `path`, replacing any existing file.
pub fn write_step_records_csv(
    path: &Path,
    records: &[StepRecord],
) -> Result<(), DiagnosticsError> {
    fs::write(path, step_records_to_csv(records))?;
    Ok(())
}

fn parse_field<T: std::str::FromStr>(
    raw: &str,
    name: &str,
    path: &Path,
    line: usize,
) -> Result<T, DiagnosticsError> {
    raw.parse().map_err(|_| DiagnosticsError::Parse {
        path: path.display().to_string(),
        line,
        detail: format!("cannot parse {name} from {raw:?}"),
    })
}

fn parse_opt_f64(
    raw: &str,
    name: &str,
    path: &Path,
    line: usize,
) -> Result<Option<f64>, DiagnosticsError> {
    if raw.is_empty() {
        Ok(None)
    } else {
        parse_field(raw, name, path, line).map(Some)
    }
}

/// Reads back a file produced by [`write_step_records_csv`].
pub fn read_step_records_csv(path: &Path) -> Result<Vec<StepRecord>, DiagnosticsError> {
    let text = fs::read_to_string(path)?;
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, header)) if header == STEP_RECORD_HEADER => {}
        Some((_, header)) => {
            return Err(DiagnosticsError::Parse {
                path: path.display().to_string(),
                line: 1,
                detail: format!("unexpected header {header:?}"),
            })
        }
        None => {
            return Err(DiagnosticsError::Parse {
                path: path.display().to_string(),
                line: 1,
                detail: "empty file".to_string(),
            })
        }
    }
    let expected_cols = STEP_RECORD_HEADER.split(',').count();
    let mut records = Vec::new();
    for (idx, row) in lines {
        let line = idx + 1;
        let cols: Vec<&str> = row.split(',').collect();
        if cols.len() != expected_cols {
            return Err(DiagnosticsError::Parse {
                path: path.display().to_string(),
                line,
                detail: format!("expected {expected_cols} columns, found {}", cols.len()),
            });
        }
        let consistent = if cols[10].is_empty() {
            None
        } else {
            Some(parse_field::<bool>(cols[10], "consistent", path, line)?)
        };
        records.push(StepRecord {
            epoch: parse_field(cols[0], "epoch", path, line)?,
            step: parse_field(cols[1], "step", path, line)?,
            train_loss: parse_field(cols[2], "train_loss", path, line)?,
            eval_metric: parse_opt_f64(cols[3], "eval_metric", path, line)?,
            eps_norm: parse_field(cols[4], "eps_norm", path, line)?,
            omega_norm: parse_field(cols[5], "omega_norm", path, line)?,
            eps_change: parse_opt_f64(cols[6], "eps_change", path, line)?,
            omega_change: parse_opt_f64(cols[7], "omega_change", path, line)?,
            cos_eps_omega: parse_opt_f64(cols[8], "cos_eps_omega", path, line)?,
            cos_eps_vs_ground_truth: parse_opt_f64(
                cols[9],
                "cos_eps_vs_ground_truth",
                path,
                line,
            )?,
            consistent,
            forwards: parse_field(cols[11], "forwards", path, line)?,
            backwards: parse_field(cols[12], "backwards", path, line)?,
            wall_time_ns: parse_field(cols[13], "wall_time_ns", path, line)?,
        });
    }
    Ok(records)
}
