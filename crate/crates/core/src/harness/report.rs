//! Report emission: a machine-readable JSON document with the full
//! measurement detail, and a flat CSV with a fixed column order for
//! spreadsheet work.

use std::io::Write;
use std::path::Path;

use super::{ClassifierMetrics, SweepPoint};

#[derive(Debug, thiserror::Error)]
pub enum ReportError {
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

/// Columns of the sweep CSV, in emission order.
pub const SWEEP_CSV_COLUMNS: [&str; 10] = [
    "variant",
    "classifier",
    "epsilon",
    "epsilon_tau",
    "total_bytes",
    "model_bytes",
    "filter_bytes",
    "measured_fpr",
    "mean_reject_s",
    "skipped_reason",
];

#[derive(Debug, serde::Serialize)]
pub struct SweepReport<'a> {
    pub seed: u64,
    pub corpus_records: usize,
    pub points: &'a [SweepPoint],
    /// Classifier families outside the implemented scope.
    pub notes: ReportNotes,
}

#[derive(Debug, serde::Serialize)]
pub struct ReportNotes {
    pub rnn: &'static str,
}

impl Default for ReportNotes {
    fn default() -> Self {
        ReportNotes { rnn: "not implemented" }
    }
}

pub fn write_sweep_json(
    path: &Path,
    seed: u64,
    corpus_records: usize,
    points: &[SweepPoint],
) -> Result<(), ReportError> {
    let report = SweepReport { seed, corpus_records, points, notes: ReportNotes::default() };
    let mut f = std::fs::File::create(path)?;
    serde_json::to_writer_pretty(&mut f, &report)?;
    f.write_all(b"\n")?;
    Ok(())
}

pub fn write_sweep_csv(path: &Path, points: &[SweepPoint]) -> Result<(), ReportError> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(SWEEP_CSV_COLUMNS)?;
    for p in points {
        w.write_record(&[
            p.variant.clone(),
            p.classifier.clone(),
            format!("{}", p.epsilon),
            format!("{}", p.epsilon_tau),
            p.total_bytes.to_string(),
            p.model_bytes.to_string(),
            p.filter_bytes.to_string(),
            format!("{}", p.measured_fpr),
            format!("{}", p.mean_reject_s),
            p.skipped_reason.clone().unwrap_or_default(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, serde::Serialize)]
pub struct ScreeningReport<'a> {
    pub seed: u64,
    pub folds: usize,
    pub classifiers: &'a [ClassifierMetrics],
    pub notes: ReportNotes,
}

pub fn write_screening_json(
    path: &Path,
    seed: u64,
    folds: usize,
    classifiers: &[ClassifierMetrics],
) -> Result<(), ReportError> {
    let report =
        ScreeningReport { seed, folds, classifiers, notes: ReportNotes::default() };
    let mut f = std::fs::File::create(path)?;
    serde_json::to_writer_pretty(&mut f, &report)?;
    f.write_all(b"\n")?;
    Ok(())
}
