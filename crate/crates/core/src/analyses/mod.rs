//! Experiment drivers built on the engine: inverter transfer metrics, ring
//! oscillator frequency and VCO curves, neuron f–I curves, logic truth
//! tables, strain studies and Monte Carlo yield.

mod logic;
mod montecarlo;
mod neuron;
mod oscillation;
mod strain;
mod vtc;

use thiserror::Error;

use crate::engine::SimError;
use crate::model::ModelError;

pub use logic::{logic_truth_table, LogicThresholds, TruthRow, TruthTable};
pub use montecarlo::{apply_samples, monte_carlo, replica_samples, McResult, McSpec, ReplicaSamples};
pub use neuron::{detect_spikes, neuron_fi_curve, FiPoint, SpikeOptions, SpikeTrain};
pub use oscillation::{oscillation_frequency, vco_curve, OscillationResult, Supply, TranSettings, VcoPoint};
pub use strain::{strain_study, strained_circuit};
pub use vtc::{gain_curve, vtc_metrics, VtcMetrics};

#[derive(Debug, Error)]
pub enum AnalysisError {
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("no column '{0}' in waveform")]
    MissingColumn(String),
    #[error("{0}")]
    Precondition(String),
    #[error("no sustained oscillation at VDD = {vdd} V")]
    NotOscillating { vdd: f64 },
    #[error("output {vout:.4} V for inputs {inputs:?} lies in the forbidden band")]
    ForbiddenBand { inputs: Vec<bool>, vout: f64 },
}

pub type Result<T> = std::result::Result<T, AnalysisError>;
