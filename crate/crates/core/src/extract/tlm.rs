use serde::{Deserialize, Serialize};

use crate::model::OtftParams;

use super::metrics::linear_fit;
use super::{ExtractError, Result};

/// Width-normalized total resistance against channel length at one overdrive.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TlmDataset {
    /// |VGS − Vth|, V.
    pub v_ov: f64,
    /// (L in m, Rtot·W in Ω·m).
    pub rows: Vec<(f64, f64)>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TlmResult {
    /// Contact resistance times width (intercept), Ω·m.
    pub rc_w: f64,
    /// Channel sheet resistance (slope), Ω/sq.
    pub r_sheet: f64,
    pub r2: f64,
    /// Set when the intercept is negative: physically suspect, still returned.
    pub negative_intercept: bool,
}

impl TlmResult {
    /// Share of the total resistance due to the contacts at length `l`.
    pub fn contact_fraction(&self, l: f64) -> f64 {
        self.rc_w / (self.rc_w + self.r_sheet * l)
    }
}

pub fn tlm_contact_resistance(d: &TlmDataset) -> Result<TlmResult> {
    let mut lengths: Vec<f64> = d.rows.iter().map(|r| r.0).collect();
    lengths.sort_by(f64::total_cmp);
    lengths.dedup();
    if lengths.len() < 3 {
        return Err(ExtractError::Precondition(format!(
            "TLM needs at least 3 distinct channel lengths, got {}",
            lengths.len()
        )));
    }
    if d.rows.iter().any(|r| !(r.1 > 0.0) || !(r.0 > 0.0)) {
        return Err(ExtractError::Precondition("TLM lengths and resistances must be > 0".into()));
    }
    let x: Vec<f64> = d.rows.iter().map(|r| r.0).collect();
    let y: Vec<f64> = d.rows.iter().map(|r| r.1).collect();
    let (slope, icpt, r2) = linear_fit(&x, &y);
    Ok(TlmResult { rc_w: icpt, r_sheet: slope, r2: if r2.is_nan() { 1.0 } else { r2 }, negative_intercept: icpt < 0.0 })
}

/// Rtot·W = |VDS/ID|·W of a model device at each channel length, biased at
/// overdrive `v_ov` and drain bias magnitude `vds` (linear regime).
pub fn tlm_dataset_from_model(p: &OtftParams, lengths: &[f64], v_ov: f64, vds: f64) -> Result<TlmDataset> {
    let s = p.polarity.sign();
    let rows = lengths
        .iter()
        .map(|&l| {
            let mut dev = *p;
            dev.geom.l = l;
            let i = dev.terminal_current(p.vth + s * v_ov, s * vds.abs())?;
            Ok((l, (vds / i).abs() * p.geom.w))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(TlmDataset { v_ov, rows })
}
