use serde::{Deserialize, Serialize};

use crate::model::{DeviceGeometry, OtftParams, Polarity};

use super::{model_current, ExtractError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum SweepKind {
    /// ID vs VGS at fixed VDS.
    Transfer,
    /// ID vs VDS at fixed VGS.
    Output,
}

impl SweepKind {
    pub fn as_str(self) -> &'static str {
        match self {
            SweepKind::Transfer => "transfer",
            SweepKind::Output => "output",
        }
    }
}

impl std::str::FromStr for SweepKind {
    type Err = ExtractError;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "transfer" => Ok(SweepKind::Transfer),
            "output" => Ok(SweepKind::Output),
            other => Err(ExtractError::Schema(format!("kind must be transfer or output, got '{other}'"))),
        }
    }
}

/// One measured sweep of a single device.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IvSweep {
    pub kind: SweepKind,
    pub device_id: String,
    pub geom: DeviceGeometry,
    /// Areal gate capacitance, F/m².
    pub cox: f64,
    /// VDS for a transfer sweep, VGS for an output sweep.
    pub fixed_bias: f64,
    /// (swept voltage, drain current) in sweep order.
    pub points: Vec<(f64, f64)>,
}

pub const MIN_POINTS: usize = 8;

impl IvSweep {
    /// Builds a sweep from raw points. A dual (forward then reverse) sweep
    /// is cut at the turning point and only the forward branch kept.
    pub fn new(
        kind: SweepKind,
        device_id: impl Into<String>,
        geom: DeviceGeometry,
        cox: f64,
        fixed_bias: f64,
        points: Vec<(f64, f64)>,
    ) -> Result<Self> {
        geom.validate()?;
        if !(cox > 0.0 && cox.is_finite()) {
            return Err(ExtractError::Precondition(format!("Cox = {cox} must be > 0")));
        }
        let points = forward_branch(points);
        let s = Self { kind, device_id: device_id.into(), geom, cox, fixed_bias, points };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if self.points.len() < MIN_POINTS {
            return Err(ExtractError::Precondition(format!(
                "sweep '{}' has {} points, at least {MIN_POINTS} required",
                self.device_id,
                self.points.len()
            )));
        }
        if self.points.iter().any(|(v, i)| !v.is_finite() || !i.is_finite()) {
            return Err(ExtractError::Precondition(format!("sweep '{}' has non-finite values", self.device_id)));
        }
        let dir = (self.points[1].0 - self.points[0].0).signum();
        if dir == 0.0 || self.points.windows(2).any(|w| (w[1].0 - w[0].0) * dir <= 0.0) {
            return Err(ExtractError::Precondition(format!(
                "sweep '{}' voltages are not strictly monotone",
                self.device_id
            )));
        }
        Ok(())
    }

    /// Device polarity implied by the drain bias: negative VDS means P-type.
    pub fn polarity(&self) -> Polarity {
        let vds = match self.kind {
            SweepKind::Transfer => self.fixed_bias,
            SweepKind::Output => self.points.iter().map(|p| p.0).sum::<f64>(),
        };
        if vds < 0.0 {
            Polarity::P
        } else {
            Polarity::N
        }
    }

    pub fn voltages(&self) -> impl Iterator<Item = f64> + '_ {
        self.points.iter().map(|p| p.0)
    }

    pub fn currents(&self) -> impl Iterator<Item = f64> + '_ {
        self.points.iter().map(|p| p.1)
    }

    /// Noise-free sweep of a model device (contact resistance included).
    pub fn synthesize(
        p: &OtftParams,
        kind: SweepKind,
        device_id: impl Into<String>,
        fixed_bias: f64,
        voltages: &[f64],
    ) -> Result<Self> {
        let points = voltages.iter().map(|&v| (v, model_current(p, kind, fixed_bias, v))).collect();
        Self::new(kind, device_id, p.geom, p.cox, fixed_bias, points)
    }
}

/// Evenly spaced voltages from `a` to `b` inclusive.
#[cfg(test)]
pub(crate) fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    (0..n).map(|k| a + (b - a) * k as f64 / (n - 1) as f64).collect()
}

fn forward_branch(points: Vec<(f64, f64)>) -> Vec<(f64, f64)> {
    if points.len() < 3 {
        return points;
    }
    let dir = (points[1].0 - points[0].0).signum();
    let end = points.windows(2).position(|w| (w[1].0 - w[0].0).signum() == -dir).map_or(points.len(), |k| k + 1);
    let mut points = points;
    points.truncate(end);
    points
}

#[cfg(test)]
mod tests {
    use super::*;

    fn geom() -> DeviceGeometry {
        DeviceGeometry::new(380e-6, 35e-6, 5e-6).unwrap()
    }

    #[test]
    fn dual_sweep_keeps_forward_branch() {
        let mut pts: Vec<(f64, f64)> = (0..10).map(|k| (-(k as f64), k as f64)).collect();
        pts.extend((0..9).rev().map(|k| (-(k as f64), 0.9 * k as f64)));
        let s = IvSweep::new(SweepKind::Transfer, "d", geom(), 3.5e-4, -5.0, pts).unwrap();
        assert_eq!(s.points.len(), 10);
        assert_eq!(s.polarity(), Polarity::P);
    }

    #[test]
    fn too_short_rejected() {
        let pts = (0..5).map(|k| (k as f64, 0.0)).collect();
        assert!(IvSweep::new(SweepKind::Output, "d", geom(), 3.5e-4, -5.0, pts).is_err());
    }

    #[test]
    fn repeated_voltage_rejected() {
        let mut pts: Vec<(f64, f64)> = (0..10).map(|k| (k as f64, 0.0)).collect();
        pts[5].0 = 4.0;
        assert!(IvSweep::new(SweepKind::Output, "d", geom(), 3.5e-4, 1.0, pts).is_err());
    }

    #[test]
    fn linspace_endpoints() {
        let v = linspace(1.0, -5.0, 13);
        assert_eq!(v[0], 1.0);
        assert_eq!(v[12], -5.0);
        assert!((v[1] - 0.5).abs() < 1e-15);
    }
}
