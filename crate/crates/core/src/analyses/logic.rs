use serde::{Deserialize, Serialize};

use crate::engine::{OperatingPoint, Simulator, SolverConfig};
use crate::netlist::Circuit;

use super::{AnalysisError, Result};

/// Output classification levels as fractions of VDD.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogicThresholds {
    pub low: f64,
    pub high: f64,
}

impl Default for LogicThresholds {
    fn default() -> Self {
        Self { low: 0.3, high: 0.7 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TruthRow {
    pub inputs: Vec<bool>,
    pub vout: f64,
    pub output: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TruthTable {
    pub inputs: Vec<String>,
    pub rows: Vec<TruthRow>,
}

impl TruthTable {
    pub fn outputs(&self) -> Vec<bool> {
        self.rows.iter().map(|r| r.output).collect()
    }
}

/// DC output for every input combination, first input most significant.
/// Any output between the LOW and HIGH levels is an error.
pub fn logic_truth_table(
    c: &Circuit,
    inputs: &[&str],
    output: &str,
    vdd: f64,
    levels: &LogicThresholds,
    cfg: &SolverConfig,
) -> Result<TruthTable> {
    if inputs.is_empty() || inputs.len() > 16 {
        return Err(AnalysisError::Precondition("logic table needs 1 to 16 inputs".into()));
    }
    let mut sim = Simulator::new(c, cfg)?;
    let n = inputs.len();
    let mut rows = Vec::with_capacity(1 << n);
    let mut prev: Option<OperatingPoint> = None;
    for code in 0..(1usize << n) {
        let bits: Vec<bool> = (0..n).map(|k| code >> (n - 1 - k) & 1 == 1).collect();
        for (name, &b) in inputs.iter().zip(&bits) {
            sim.set_dc(name, if b { vdd } else { 0.0 })?;
        }
        let op = match &prev {
            Some(p) => sim.operating_point_from(p)?,
            None => sim.operating_point()?,
        };
        let vout = op.voltage(output).ok_or_else(|| AnalysisError::MissingColumn(output.to_string()))?;
        let out = if vout < levels.low * vdd {
            false
        } else if vout > levels.high * vdd {
            true
        } else {
            return Err(AnalysisError::ForbiddenBand { inputs: bits, vout });
        };
        rows.push(TruthRow { inputs: bits, vout, output: out });
        prev = Some(op);
    }
    Ok(TruthTable { inputs: inputs.iter().map(|s| s.to_string()).collect(), rows })
}
