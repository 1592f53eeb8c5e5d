use serde::{Deserialize, Serialize};

use crate::engine::Waveform;

use super::{AnalysisError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VtcMetrics {
    /// Largest |dVout/dVin|.
    pub peak_gain: f64,
    /// Input at which the peak gain occurs.
    pub vin_peak: f64,
    /// Switching threshold, where Vout = Vin.
    pub vm: f64,
    /// Number of times the curve crosses Vout = Vin.
    pub crossings: usize,
    pub voh: f64,
    pub vol: f64,
    /// Lower and upper unity-gain inputs.
    pub vil: f64,
    pub vih: f64,
    pub nml: f64,
    pub nmh: f64,
    pub swing: f64,
}

/// |dVout/dVin| at every sweep point (central differences inside, one-sided
/// at the ends).
pub fn gain_curve(x: &[f64], y: &[f64]) -> Vec<f64> {
    let n = x.len();
    (0..n)
        .map(|k| {
            let (a, b) = (k.saturating_sub(1), (k + 1).min(n - 1));
            if a == b {
                0.0
            } else {
                ((y[b] - y[a]) / (x[b] - x[a])).abs()
            }
        })
        .collect()
}

/// Root of the piecewise-linear interpolant of `f` on `[x0, x1]` by bisection.
fn bisect(x0: f64, f0: f64, x1: f64, f1: f64) -> f64 {
    let (mut a, mut fa, mut b) = (x0, f0, x1);
    let lerp = |t: f64| f0 + (f1 - f0) * (t - x0) / (x1 - x0);
    for _ in 0..100 {
        let m = 0.5 * (a + b);
        let fm = lerp(m);
        if fm == 0.0 || (b - a).abs() < 1e-15 * (1.0 + m.abs()) {
            return m;
        }
        if (fm > 0.0) == (fa > 0.0) {
            a = m;
            fa = fm;
        } else {
            b = m;
        }
    }
    0.5 * (a + b)
}

/// Metrics of an inverter transfer curve from a DC sweep of its input.
pub fn vtc_metrics(wf: &Waveform, output: &str, vdd: f64) -> Result<VtcMetrics> {
    let y = wf
        .column(output)
        .or_else(|| wf.voltage(output))
        .ok_or_else(|| AnalysisError::MissingColumn(output.to_string()))?;
    let x = wf.axis();
    if x.len() < 3 {
        return Err(AnalysisError::Precondition("transfer curve needs at least 3 points".into()));
    }
    let (lo, hi) = (x[0].min(x[x.len() - 1]), x[0].max(x[x.len() - 1]));
    let tol = 1e-9 * vdd.abs().max(1.0);
    if lo > tol || hi < vdd - tol {
        return Err(AnalysisError::Precondition(format!("sweep [{lo}, {hi}] does not cover 0..{vdd} V")));
    }
    let gains = gain_curve(x, y);
    let (kmax, peak_gain) =
        gains.iter().copied().enumerate().fold((0, 0.0), |b, (k, g)| if g > b.1 { (k, g) } else { b });

    let d: Vec<f64> = y.iter().zip(x).map(|(o, i)| o - i).collect();
    let mut roots = Vec::new();
    for k in 0..x.len() - 1 {
        if d[k] == 0.0 {
            roots.push(x[k]);
        } else if d[k] * d[k + 1] < 0.0 {
            roots.push(bisect(x[k], d[k], x[k + 1], d[k + 1]));
        }
    }
    if d[x.len() - 1] == 0.0 {
        roots.push(x[x.len() - 1]);
    }
    let vm =
        *roots.first().ok_or_else(|| AnalysisError::Precondition("transfer curve never crosses Vout = Vin".into()))?;

    let voh = y.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let vol = y.iter().copied().fold(f64::INFINITY, f64::min);
    // Unity-gain inputs: outermost points where the slope magnitude reaches 1.
    let above: Vec<usize> = (0..x.len()).filter(|&k| gains[k] >= 1.0).collect();
    let (vil, vih) = match (above.first(), above.last()) {
        (Some(&a), Some(&b)) if peak_gain > 1.0 => {
            let lo = if a > 0 { crossing_of(x, &gains, a - 1, a) } else { x[a] };
            let hi = if b + 1 < x.len() { crossing_of(x, &gains, b, b + 1) } else { x[b] };
            (lo.min(hi), lo.max(hi))
        }
        _ => (vm, vm),
    };
    Ok(VtcMetrics {
        peak_gain,
        vin_peak: x[kmax],
        vm,
        crossings: roots.len(),
        voh,
        vol,
        vil,
        vih,
        nml: vil - vol,
        nmh: voh - vih,
        swing: voh - vol,
    })
}

fn crossing_of(x: &[f64], g: &[f64], a: usize, b: usize) -> f64 {
    let (ga, gb) = (g[a] - 1.0, g[b] - 1.0);
    if ga == gb {
        x[a]
    } else {
        x[a] + (x[b] - x[a]) * (-ga) / (gb - ga)
    }
}
