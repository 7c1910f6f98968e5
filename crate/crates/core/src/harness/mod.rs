//! Configurable simulation studies and their reports.
//!
//! A run is described by an [`ExperimentConfig`] (JSON or `key = value`
//! lines), executed by one of the scenario runners and written as a per-
//! replicate detail table plus per-group aggregates.

use thiserror::Error;

use crate::denoise::DenoiseError;
use crate::epidemic::EpidemicError;
use crate::estimation::EstimationError;
use crate::graph::GraphError;

pub mod config;
pub mod county;
pub mod experiments;
pub mod report;

pub use config::{ExperimentConfig, GraphKind, LambdaChoice, OutputFormat, Scenario};
pub use county::{ingest_county_data, parse_county_data, CountyData};
pub use experiments::{
    estimate_rows, run_county_experiment, run_denoise_experiment, run_experiment, run_false_positive_experiment,
    run_forecast_experiment, run_missing_experiment, run_param_experiment,
};
pub use report::{
    emit_report, parse_aggregate_csv, parse_detail_csv, parse_json_lines, write_aggregate_csv, write_detail_csv,
    write_json_lines, median, quantile, sibling_path, AggregateRow, Report, ReportRow};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("malformed report: {0}")]
    Parse(String),
    #[error("county data: {0}")]
    County(String),
    #[error("length mismatch: got {got}, expected {expected}")]
    DimensionMismatch { got: usize, expected: usize },
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Denoise(#[from] DenoiseError),
    #[error(transparent)]
    Epidemic(#[from] EpidemicError),
    #[error(transparent)]
    Estimation(#[from] EstimationError),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl HarnessError {
    /// Errors caused by the user's inputs rather than by a failed run.
    pub fn is_config_error(&self) -> bool {
        matches!(
            self,
            HarnessError::Config(_)
                | HarnessError::County(_)
                | HarnessError::Epidemic(EpidemicError::NotWellDefined(_))
        )
    }
}

pub type Result<T> = std::result::Result<T, HarnessError>;

fn same_len(a: &[f64], b: &[f64]) -> Result<()> {
    if a.len() == b.len() {
        Ok(())
    } else {
        Err(HarnessError::DimensionMismatch { got: a.len(), expected: b.len() })
    }
}

/// `sum_i |a_i - b_i|`.
pub fn l1_error(a: &[f64], b: &[f64]) -> Result<f64> {
    same_len(a, b)?;
    Ok(a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum())
}

/// `sum_i (a_i - b_i)^2`.
pub fn l2_error_sq(a: &[f64], b: &[f64]) -> Result<f64> {
    same_len(a, b)?;
    Ok(a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum())
}

/// Writes the report and, for parameter runs, the estimates table next to it.
pub fn write_outputs(report: &Report, path: &std::path::Path, format: OutputFormat) -> Result<Vec<std::path::PathBuf>> {
    let mut written = emit_report(report, path, format)?;
    if report.scenario == Scenario::Params.name() {
        let est = sibling_path(path, "estimates");
        let file = std::fs::File::create(&est)?;
        crate::estimation::write_estimates_csv(&estimate_rows(report), file)?;
        written.push(est);
    }
    Ok(written)
}
