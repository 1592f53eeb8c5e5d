//! Figures of merit from measured I–V sweeps, TLM contact resistance,
//! least-squares model fitting and population statistics.

mod fit;
mod io;
mod metrics;
mod stats;
mod sweep;
mod tlm;

use thiserror::Error;

use crate::model::{ModelError, OtftParams};

pub use fit::{fit_model, fit_model_from, FitOptions, FitReport, FixedParams};
pub use io::{read_measurements, write_measurements, MEASUREMENT_COLUMNS};
pub use metrics::{
    extract_report, extract_saturation_mobility, extract_subthreshold_swing, gm_max_per_width, on_off_ratio,
    ExtractionReport, SaturationFit, DEFAULT_CURRENT_FLOOR,
};
pub use stats::{batch_statistics, BatchSummary, Histogram, MetricSummary, DEFAULT_BINS};
pub use sweep::{IvSweep, SweepKind};
pub use tlm::{tlm_contact_resistance, tlm_dataset_from_model, TlmDataset, TlmResult};

#[derive(Debug, Error)]
pub enum ExtractError {
    #[error("{0}")]
    Precondition(String),
    #[error("extraction failed: {0}")]
    Extraction(String),
    #[error("dynamic range {decades:.2} decades is below the 3 required")]
    DynamicRange { decades: f64 },
    #[error("fit did not converge after {iterations} iterations (best cost {:.4e})", .best.cost)]
    FitNonConvergence { iterations: usize, best: Box<FitReport> },
    #[error("measurement schema: {0}")]
    Schema(String),
    #[error("line {line}: {message}")]
    Row { line: u64, message: String },
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, ExtractError>;

/// Current the model predicts for one sweep point, including contact resistance.
pub(crate) fn model_current(p: &OtftParams, kind: SweepKind, fixed: f64, v: f64) -> f64 {
    let (vgs, vds) = match kind {
        SweepKind::Transfer => (v, fixed),
        SweepKind::Output => (fixed, v),
    };
    p.terminal_current(vgs, vds).unwrap_or(f64::NAN)
}
