//! OTFT compact model: dielectric stack, DC drain current with analytic
//! derivatives, constant terminal capacitances and the strain transform.

mod dielectric;
mod otft;
mod strain;

pub use dielectric::{series_capacitance, DielectricStack, Layer, VACUUM_PERMITTIVITY};
pub use otft::{DeviceGeometry, DrainEval, OtftParams, Polarity};
pub use strain::{
    InterpTable, Orientation, OrientationTables, StrainCalibration, StrainState, DEFAULT_STRAIN_CALIBRATION,
};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("invalid dielectric stack: {0}")]
    InvalidStack(String),
    #[error("invalid device parameters: {0}")]
    InvalidParams(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("strain calibration: {0}")]
    Calibration(String),
}

pub type Result<T> = std::result::Result<T, ModelError>;
