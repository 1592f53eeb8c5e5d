use serde::{Deserialize, Serialize};

use crate::engine::{Simulator, SolverConfig, Waveform};
use crate::netlist::Circuit;
use crate::par::{map_slice, Exec};

use super::{AnalysisError, Result};

/// Leading fraction of a record discarded as start-up.
const STARTUP_FRACTION: f64 = 0.3;
/// Allowed change between the last two quarters for a settled result.
const SETTLE_TOLERANCE: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OscillationResult {
    /// Hz; `None` with fewer than 4 crossings.
    pub frequency: Option<f64>,
    pub amplitude: f64,
    pub settled: bool,
    /// Time span analysed, s.
    pub window: (f64, f64),
}

fn crossings(t: &[f64], y: &[f64], level: f64) -> Vec<f64> {
    let mut out = Vec::new();
    for k in 1..t.len() {
        let (a, b) = (y[k - 1] - level, y[k] - level);
        if (a < 0.0 && b >= 0.0) || (a > 0.0 && b <= 0.0) {
            out.push(t[k - 1] + (t[k] - t[k - 1]) * a / (a - b));
        }
    }
    out
}

/// Time-weighted mean of a non-uniformly sampled signal.
fn time_mean(t: &[f64], y: &[f64]) -> f64 {
    if t.len() < 2 || t[t.len() - 1] == t[0] {
        return y.iter().sum::<f64>() / y.len().max(1) as f64;
    }
    let area: f64 = t.windows(2).zip(y.windows(2)).map(|(tt, yy)| 0.5 * (yy[0] + yy[1]) * (tt[1] - tt[0])).sum();
    area / (t[t.len() - 1] - t[0])
}

fn peak_to_peak(y: &[f64]) -> f64 {
    let hi = y.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lo = y.iter().copied().fold(f64::INFINITY, f64::min);
    if y.is_empty() {
        0.0
    } else {
        hi - lo
    }
}

fn rate(c: &[f64]) -> Option<f64> {
    (c.len() >= 2).then(|| (c.len() - 1) as f64 / (2.0 * (c[c.len() - 1] - c[0])))
}

/// Frequency of a periodic node voltage by mean-removed zero crossings after
/// discarding the first 30% of the record.
pub fn oscillation_frequency(w: &Waveform, node: &str) -> Result<OscillationResult> {
    let y = w.column(node).or_else(|| w.voltage(node)).ok_or_else(|| AnalysisError::MissingColumn(node.to_string()))?;
    let t = w.axis();
    if t.len() < 2 {
        return Err(AnalysisError::Precondition("waveform has fewer than 2 samples".into()));
    }
    let (t0, t1) = (t[0], t[t.len() - 1]);
    let start = t0 + STARTUP_FRACTION * (t1 - t0);
    let k0 = t.partition_point(|&x| x < start);
    let (tw, yw) = (&t[k0..], &y[k0..]);
    let window = (tw.first().copied().unwrap_or(t1), t1);
    let amplitude = peak_to_peak(yw);
    let mean = time_mean(tw, yw);
    let cross = crossings(tw, yw, mean);
    if cross.len() < 4 || amplitude == 0.0 {
        return Ok(OscillationResult { frequency: None, amplitude, settled: false, window });
    }
    let frequency = rate(&cross);

    // Compare the last quarter of the window with the one before it.
    let span = window.1 - window.0;
    let q2 = window.0 + 0.5 * span;
    let q3 = window.0 + 0.75 * span;
    let part = |a: f64, b: f64| {
        let i = tw.partition_point(|&x| x < a);
        let j = tw.partition_point(|&x| x <= b);
        let c: Vec<f64> = cross.iter().copied().filter(|&x| x >= a && x <= b).collect();
        (peak_to_peak(&yw[i..j]), rate(&c))
    };
    let (amp_a, f_a) = part(q2, q3);
    let (amp_b, f_b) = part(q3, window.1);
    let close = |a: f64, b: f64| (a - b).abs() <= SETTLE_TOLERANCE * a.abs().max(b.abs());
    let settled = close(amp_a, amp_b)
        && match (f_a, f_b) {
            (Some(a), Some(b)) => close(a, b),
            _ => false,
        };
    Ok(OscillationResult { frequency, amplitude, settled, window })
}

/// Transient window for one run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TranSettings {
    pub step: f64,
    pub stop: f64,
    pub max_step: Option<f64>,
}

/// Supply sources driven from one VDD value: each source is set to
/// `scale × VDD`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Supply {
    pub sources: Vec<(String, f64)>,
}

impl Supply {
    pub fn single(name: &str) -> Self {
        Self { sources: vec![(name.to_string(), 1.0)] }
    }

    pub fn apply(&self, c: &mut Circuit, vdd: f64) -> Result<()> {
        for (name, k) in &self.sources {
            c.set_source_dc(name, k * vdd).ok_or_else(|| AnalysisError::Precondition(format!("no source '{name}'")))?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VcoPoint {
    pub vdd: f64,
    pub result: OscillationResult,
    /// Hz.
    pub frequency: f64,
}

/// Runs a transient per supply value and measures the oscillation at `node`.
pub fn vco_curve(
    c: &Circuit,
    supply: &Supply,
    vdds: &[f64],
    node: &str,
    tran: &TranSettings,
    cfg: &SolverConfig,
    exec: Exec,
) -> Result<Vec<VcoPoint>> {
    let runs = map_slice(vdds, exec, |&vdd| -> Result<VcoPoint> {
        let mut ckt = c.clone();
        supply.apply(&mut ckt, vdd)?;
        let w = Simulator::new(&ckt, cfg)?.transient(tran.step, tran.stop, tran.max_step)?;
        let result = oscillation_frequency(&w, node)?;
        let frequency = result.frequency.ok_or(AnalysisError::NotOscillating { vdd })?;
        Ok(VcoPoint { vdd, result, frequency })
    });
    runs.into_iter().collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sampled(f: impl Fn(f64) -> f64, rate: f64, stop: f64) -> Waveform {
        let mut w = Waveform::new("time", vec!["v(o)".into()]);
        let n = (stop * rate).round() as usize;
        for k in 0..=n {
            let t = k as f64 / rate;
            w.push_row(t, vec![f(t)]).unwrap();
        }
        w
    }

    #[test]
    fn sine_frequency() {
        let w = sampled(|t| 1.0 + (2.0 * std::f64::consts::PI * 10.0 * t).sin(), 1000.0, 2.0);
        let r = oscillation_frequency(&w, "o").unwrap();
        let f = r.frequency.unwrap();
        assert!((f / 10.0 - 1.0).abs() < 0.005, "{f}");
        assert!(r.settled);
    }

    #[test]
    fn constant_is_not_settled() {
        let w = sampled(|_| 2.0, 100.0, 1.0);
        let r = oscillation_frequency(&w, "o").unwrap();
        assert!(r.frequency.is_none());
        assert!(!r.settled);
    }

    #[test]
    fn chirp_is_not_settled() {
        // Instantaneous frequency sweeps 5 Hz to 45 Hz over 2 s.
        let w = sampled(|t| (2.0 * std::f64::consts::PI * (5.0 * t + 10.0 * t * t)).sin(), 2000.0, 2.0);
        assert!(!oscillation_frequency(&w, "o").unwrap().settled);
    }
}
