use serde::{Deserialize, Serialize};

use crate::engine::{Simulator, SolverConfig, Waveform};
use crate::netlist::Circuit;
use crate::par::{map_slice, Exec};

use super::{AnalysisError, Result, TranSettings};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpikeOptions {
    /// Upward crossing level, V (normally VDD/2).
    pub threshold: f64,
    /// Crossings closer than this to the previous spike are ignored, s.
    pub refractory: f64,
}

impl SpikeOptions {
    pub fn for_supply(vdd: f64) -> Self {
        Self { threshold: 0.5 * vdd, refractory: 1e-3 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpikeTrain {
    /// Strictly increasing spike times, s.
    pub times: Vec<f64>,
    /// Hz: 1 / mean inter-spike interval, or count / duration with fewer
    /// than two spikes.
    pub rate: f64,
    pub isi_mean: Option<f64>,
    pub isi_std: Option<f64>,
}

pub fn detect_spikes(w: &Waveform, node: &str, opts: &SpikeOptions) -> Result<SpikeTrain> {
    let y = w.column(node).or_else(|| w.voltage(node)).ok_or_else(|| AnalysisError::MissingColumn(node.to_string()))?;
    let t = w.axis();
    let mut times: Vec<f64> = Vec::new();
    for k in 1..t.len() {
        let (a, b) = (y[k - 1] - opts.threshold, y[k] - opts.threshold);
        if a < 0.0 && b >= 0.0 {
            let tc = t[k - 1] + (t[k] - t[k - 1]) * a / (a - b);
            if times.last().is_none_or(|&last| tc - last >= opts.refractory) {
                times.push(tc);
            }
        }
    }
    let duration = t.last().copied().unwrap_or(0.0) - t.first().copied().unwrap_or(0.0);
    let isi: Vec<f64> = times.windows(2).map(|p| p[1] - p[0]).collect();
    let (rate, isi_mean, isi_std) = if isi.is_empty() {
        let r = if duration > 0.0 { times.len() as f64 / duration } else { 0.0 };
        (r, None, None)
    } else {
        let n = isi.len() as f64;
        let m = isi.iter().sum::<f64>() / n;
        let var = isi.iter().map(|x| (x - m).powi(2)).sum::<f64>() / n;
        (1.0 / m, Some(m), Some(var.sqrt()))
    };
    Ok(SpikeTrain { times, rate, isi_mean, isi_std })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FiPoint {
    /// Injected current, A.
    pub iex: f64,
    pub train: SpikeTrain,
}

/// Firing rate against injected current: one transient per current value.
#[allow(clippy::too_many_arguments)]
pub fn neuron_fi_curve(
    c: &Circuit,
    source: &str,
    currents: &[f64],
    node: &str,
    tran: &TranSettings,
    spikes: &SpikeOptions,
    cfg: &SolverConfig,
    exec: Exec,
) -> Result<Vec<FiPoint>> {
    if currents.iter().any(|i| !(*i >= 0.0)) {
        return Err(AnalysisError::Precondition("input currents must be >= 0".into()));
    }
    let runs = map_slice(currents, exec, |&iex| -> Result<FiPoint> {
        let mut ckt = c.clone();
        ckt.set_source_dc(source, iex).ok_or_else(|| AnalysisError::Precondition(format!("no source '{source}'")))?;
        let w = Simulator::new(&ckt, cfg)?.transient(tran.step, tran.stop, tran.max_step)?;
        Ok(FiPoint { iex, train: detect_spikes(&w, node, spikes)? })
    });
    runs.into_iter().collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spikes_with_debounce() {
        let mut w = Waveform::new("time", vec!["v(m)".into()]);
        // 0.5 ms pulses every 0.1 s, each followed 0.2 ms later by a glitch.
        for k in 0..10_000 {
            let t = k as f64 * 1e-4;
            let phase = t % 0.1;
            let high = (0.05..0.0505).contains(&phase) || (0.0507..0.0509).contains(&phase);
            w.push_row(t, vec![if high { 5.0 } else { 0.0 }]).unwrap();
        }
        let s = detect_spikes(&w, "m", &SpikeOptions::for_supply(5.0)).unwrap();
        assert_eq!(s.times.len(), 10);
        assert!((s.rate - 10.0).abs() < 1e-3);
        assert!(s.times.windows(2).all(|p| p[1] > p[0]));
    }

    #[test]
    fn flat_signal_has_no_spikes() {
        let mut w = Waveform::new("time", vec!["v(m)".into()]);
        for k in 0..100 {
            w.push_row(k as f64 * 1e-3, vec![0.1]).unwrap();
        }
        let s = detect_spikes(&w, "m", &SpikeOptions::for_supply(5.0)).unwrap();
        assert!(s.times.is_empty());
        assert_eq!(s.rate, 0.0);
    }
}
