//! Modified nodal analysis engine: elaboration, damped Newton DC solution
//! with gmin and source-stepping homotopies, DC sweeps with continuation,
//! and adaptive transient integration.

mod dc;
mod linalg;
mod mna;
mod transient;
mod waveform;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::ModelError;
use crate::netlist::Diagnostic;

pub use dc::{dc_operating_point, dc_sweep, small_signal_gain, OperatingPoint};
pub use linalg::DenseMatrix;
pub use mna::{Simulator, StepControl};
pub use transient::transient;
pub use waveform::{Waveform, WaveformError, BINARY_MAGIC, BINARY_VERSION};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum IntegrationMethod {
    BackwardEuler,
    Trapezoidal,
}

impl IntegrationMethod {
    pub fn order(self) -> i32 {
        match self {
            IntegrationMethod::BackwardEuler => 1,
            IntegrationMethod::Trapezoidal => 2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TransientConfig {
    pub method: IntegrationMethod,
    /// Local truncation error tolerance (relative, with a 1 V floor).
    pub lte_tol: f64,
    /// Smallest allowed step; `None` means `stop * 1e-12`.
    pub min_step: Option<f64>,
    /// Largest allowed step; `None` uses the directive or `stop / 50`.
    pub max_step: Option<f64>,
    /// `false` integrates with the fixed directive step.
    pub adaptive: bool,
}

impl Default for TransientConfig {
    fn default() -> Self {
        Self { method: IntegrationMethod::Trapezoidal, lte_tol: 1e-4, min_step: None, max_step: None, adaptive: true }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    /// Absolute KCL tolerance, A.
    pub abstol: f64,
    pub reltol: f64,
    /// Absolute voltage-update tolerance, V.
    pub vntol: f64,
    pub max_newton_iters: usize,
    /// Conductance attached drain–source and gate–source of every OTFT, S.
    pub gmin: f64,
    /// Largest node-voltage change allowed per Newton iteration, V.
    pub damping: f64,
    pub transient: TransientConfig,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            abstol: 1e-12,
            reltol: 1e-4,
            vntol: 1e-6,
            max_newton_iters: 100,
            gmin: 1e-12,
            damping: 0.5,
            transient: TransientConfig::default(),
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> std::result::Result<(), SimError> {
        let t = &self.transient;
        let positive = [
            ("abstol", self.abstol),
            ("reltol", self.reltol),
            ("vntol", self.vntol),
            ("gmin", self.gmin),
            ("damping", self.damping),
            ("lte_tol", t.lte_tol),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(SimError::Config(format!("{name} must be > 0")));
            }
        }
        if self.max_newton_iters == 0 {
            return Err(SimError::Config("max_newton_iters must be >= 1".into()));
        }
        for (name, v) in [("min_step", t.min_step), ("max_step", t.max_step)] {
            if v.is_some_and(|x| !(x > 0.0)) {
                return Err(SimError::Config(format!("{name} must be > 0")));
            }
        }
        Ok(())
    }

    /// Sets one field from its dotted key, e.g. `abstol` or `transient.method`.
    pub fn set(&mut self, key: &str, value: &str) -> std::result::Result<(), SimError> {
        let num = || -> std::result::Result<f64, SimError> {
            crate::netlist::parse_number(value).ok_or_else(|| SimError::Config(format!("{key}: bad number '{value}'")))
        };
        match key.to_ascii_lowercase().trim_start_matches("transient.") {
            "abstol" => self.abstol = num()?,
            "reltol" => self.reltol = num()?,
            "vntol" => self.vntol = num()?,
            "gmin" => self.gmin = num()?,
            "damping" => self.damping = num()?,
            "max_newton_iters" | "itl" => {
                let v = num()?;
                if v < 1.0 || v.fract() != 0.0 {
                    return Err(SimError::Config(format!("{key} must be a positive integer")));
                }
                self.max_newton_iters = v as usize;
            }
            "method" => {
                self.transient.method = match value.to_ascii_lowercase().as_str() {
                    "be" | "euler" | "backward_euler" | "backwardeuler" => IntegrationMethod::BackwardEuler,
                    "trap" | "trapezoidal" => IntegrationMethod::Trapezoidal,
                    _ => return Err(SimError::Config(format!("unknown method '{value}'"))),
                }
            }
            "lte_tol" => self.transient.lte_tol = num()?,
            "min_step" => self.transient.min_step = Some(num()?),
            "max_step" => self.transient.max_step = Some(num()?),
            "adaptive" => {
                self.transient.adaptive = match value.to_ascii_lowercase().as_str() {
                    "true" | "1" | "yes" => true,
                    "false" | "0" | "no" => false,
                    _ => return Err(SimError::Config(format!("adaptive: bad boolean '{value}'"))),
                }
            }
            other => return Err(SimError::Config(format!("unknown solver key '{other}'"))),
        }
        self.validate()
    }
}

#[derive(Debug, Error)]
pub enum SimError {
    #[error("circuit has errors:\n{}", .0.iter().map(|d| d.to_string()).collect::<Vec<_>>().join("\n"))]
    InvalidCircuit(Vec<Diagnostic>),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("singular matrix at unknown {0}")]
    Singular(String),
    #[error("DC solution did not converge (last residual {residual:.3e} A)")]
    NonConvergence { residual: f64 },
    #[error("sweep failed at {source_name} = {value}: {cause}")]
    SweepFailed {
        source_name: String,
        value: f64,
        #[source]
        cause: Box<SimError>,
    },
    #[error("timestep underflow at t = {time:.6e} s")]
    StepUnderflow { time: f64 },
    #[error("unknown source '{0}'")]
    UnknownSource(String),
    #[error("unknown node '{0}'")]
    UnknownNode(String),
    #[error("solver configuration: {0}")]
    Config(String),
    #[error("{0}")]
    Directive(String),
}

pub type Result<T> = std::result::Result<T, SimError>;
