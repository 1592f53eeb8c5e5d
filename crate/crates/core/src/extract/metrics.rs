use serde::{Deserialize, Serialize};

use crate::model::Polarity;

use super::{ExtractError, IvSweep, Result, SweepKind};

/// Current floor used by the on/off ratio, A.
pub const DEFAULT_CURRENT_FLOOR: f64 = 1e-13;
/// Fraction of the sweep used for the √ID fit window.
const WINDOW_FRACTION: f64 = 0.4;
const SS_WINDOW: usize = 5;
const MIN_DECADES: f64 = 3.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SaturationFit {
    /// Saturation mobility, m²/(V·s).
    pub mu_sat: f64,
    pub vth: f64,
    /// Slope of √|ID| vs VGS, √A/V.
    pub slope: f64,
    pub r2: f64,
    /// VGS range of the fit window, in sweep order.
    pub window: (f64, f64),
}

/// Simple least squares of y on x: (slope, intercept, r²).
pub(crate) fn linear_fit(x: &[f64], y: &[f64]) -> (f64, f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (dx, dy) = (a - mx, b - my);
        sxx += dx * dx;
        sxy += dx * dy;
        syy += dy * dy;
    }
    let slope = sxy / sxx;
    let r2 = if syy == 0.0 { f64::NAN } else { sxy * sxy / (sxx * syy) };
    (slope, my - slope * mx, r2)
}

fn require_transfer(s: &IvSweep) -> Result<()> {
    if s.kind != SweepKind::Transfer {
        return Err(ExtractError::Precondition(format!("'{}' is not a transfer sweep", s.device_id)));
    }
    Ok(())
}

/// Saturation mobility and threshold from the √|ID| vs VGS line over the
/// contiguous 40% window with the best linear fit. The sweep is assumed to
/// be in saturation; that is not checked.
pub fn extract_saturation_mobility(s: &IvSweep) -> Result<SaturationFit> {
    require_transfer(s)?;
    let sign = s.polarity().sign();
    let x: Vec<f64> = s.voltages().collect();
    let y: Vec<f64> = s.currents().map(|i| i.abs().sqrt()).collect();
    let n = x.len();
    let w = ((WINDOW_FRACTION * n as f64).round() as usize).max(1);
    if w < 3 {
        return Err(ExtractError::Extraction(format!("fit window of {w} points is too small")));
    }
    let mut best: Option<(f64, usize, f64, f64)> = None;
    for start in 0..=(n - w) {
        let (xs, ys) = (&x[start..start + w], &y[start..start + w]);
        // √ID must grow with overdrive through the whole window.
        let monotone = xs.windows(2).zip(ys.windows(2)).all(|(a, b)| (b[1] - b[0]) * (a[1] - a[0]) * sign > 0.0);
        if !monotone {
            continue;
        }
        let (slope, icpt, r2) = linear_fit(xs, ys);
        if !r2.is_finite() {
            continue;
        }
        let better = match best {
            None => true,
            Some((b, _, bs, _)) => r2 > b || (r2 == b && slope.abs() > bs.abs()),
        };
        if better {
            best = Some((r2, start, slope, icpt));
        }
    }
    let (r2, start, slope, icpt) = best.ok_or_else(|| {
        ExtractError::Extraction(format!("'{}': √|ID| is not monotone in any fit window", s.device_id))
    })?;
    let g = &s.geom;
    Ok(SaturationFit {
        mu_sat: 2.0 * g.l / (g.w * s.cox) * slope * slope,
        vth: -icpt / slope,
        slope,
        r2,
        window: (x[start], x[start + w - 1]),
    })
}

/// Steepest subthreshold region: the minimum over 5-point windows of
/// dVGS/dlog10|ID|, each from a least-squares line.
pub fn extract_subthreshold_swing(s: &IvSweep) -> Result<f64> {
    require_transfer(s)?;
    let sign = s.polarity().sign();
    let imax = s.currents().fold(0.0f64, |m, i| m.max(i.abs()));
    let imin = s.currents().map(f64::abs).filter(|i| *i > 0.0).fold(f64::INFINITY, f64::min);
    let decades = if imax > 0.0 && imin.is_finite() { (imax / imin).log10() } else { 0.0 };
    if decades < MIN_DECADES {
        return Err(ExtractError::DynamicRange { decades });
    }
    let mut best = f64::INFINITY;
    for win in s.points.windows(SS_WINDOW) {
        if win.iter().any(|p| p.1 == 0.0) {
            continue;
        }
        let x: Vec<f64> = win.iter().map(|p| p.0).collect();
        let y: Vec<f64> = win.iter().map(|p| p.1.abs().log10()).collect();
        let (slope, _, _) = linear_fit(&x, &y);
        // Decades per volt, positive in the conducting direction.
        let rate = slope * sign;
        if rate > 0.0 {
            best = best.min(1.0 / rate);
        }
    }
    if best.is_finite() {
        Ok(best)
    } else {
        Err(ExtractError::Extraction(format!("'{}': current never rises with overdrive", s.device_id)))
    }
}

/// max|ID| / max(min|ID|, floor).
pub fn on_off_ratio(s: &IvSweep, floor: f64) -> f64 {
    let imax = s.currents().fold(0.0f64, |m, i| m.max(i.abs()));
    let imin = s.currents().fold(f64::INFINITY, |m, i| m.min(i.abs()));
    imax / imin.max(floor)
}

/// Largest |dID/dVGS| per unit width, S/m, by central differences
/// (one-sided at the ends).
pub fn gm_max_per_width(s: &IvSweep) -> Result<f64> {
    require_transfer(s)?;
    let p = &s.points;
    let n = p.len();
    let gm = (0..n).map(|k| {
        let (a, b) = (k.saturating_sub(1), (k + 1).min(n - 1));
        ((p[b].1 - p[a].1) / (p[b].0 - p[a].0)).abs()
    });
    Ok(gm.fold(0.0, f64::max) / s.geom.w)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExtractionReport {
    pub device_id: String,
    pub polarity: Polarity,
    pub mu_sat: f64,
    pub vth: f64,
    pub ss: f64,
    pub on_off: f64,
    /// S/m.
    pub gm_max_per_width: f64,
    pub fit_window: (f64, f64),
    /// R² of the √ID fit.
    pub r2: f64,
}

/// All figures of merit of one transfer sweep.
pub fn extract_report(s: &IvSweep) -> Result<ExtractionReport> {
    let sat = extract_saturation_mobility(s)?;
    Ok(ExtractionReport {
        device_id: s.device_id.clone(),
        polarity: s.polarity(),
        mu_sat: sat.mu_sat,
        vth: sat.vth,
        ss: extract_subthreshold_swing(s)?,
        on_off: on_off_ratio(s, DEFAULT_CURRENT_FLOOR),
        gm_max_per_width: gm_max_per_width(s)?,
        fit_window: sat.window,
        r2: sat.r2,
    })
}
