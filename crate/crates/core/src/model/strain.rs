use serde::{Deserialize, Serialize};

use super::{ModelError, OtftParams, Result};

/// Bundled default calibration (TOML, format version 1).
pub const DEFAULT_STRAIN_CALIBRATION: &str = include_str!("../../fixtures/strain_calibration.toml");

const SUPPORTED_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Orientation {
    ParallelToChannelLength,
    PerpendicularToChannelLength,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StrainState {
    /// Engineering strain of the substrate.
    pub epsilon: f64,
    pub orientation: Orientation,
}

impl StrainState {
    pub fn new(epsilon: f64, orientation: Orientation) -> Result<Self> {
        let s = Self { epsilon, orientation };
        s.validate()?;
        Ok(s)
    }

    pub fn unstrained() -> Self {
        Self { epsilon: 0.0, orientation: Orientation::ParallelToChannelLength }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon >= 0.0 && self.epsilon.is_finite()) {
            return Err(ModelError::Domain(format!("strain {} must be finite and >= 0", self.epsilon)));
        }
        Ok(())
    }
}

/// Piecewise-linear table with flat extrapolation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<[f64; 2]>", into = "Vec<[f64; 2]>")]
pub struct InterpTable {
    points: Vec<[f64; 2]>,
}

impl TryFrom<Vec<[f64; 2]>> for InterpTable {
    type Error = ModelError;

    fn try_from(points: Vec<[f64; 2]>) -> Result<Self> {
        if points.is_empty() {
            return Err(ModelError::Calibration("empty table".into()));
        }
        if points.iter().flatten().any(|v| !v.is_finite()) {
            return Err(ModelError::Calibration("non-finite table entry".into()));
        }
        if points.windows(2).any(|w| w[1][0] <= w[0][0]) {
            return Err(ModelError::Calibration("strain column must be strictly increasing".into()));
        }
        Ok(Self { points })
    }
}

impl From<InterpTable> for Vec<[f64; 2]> {
    fn from(t: InterpTable) -> Self {
        t.points
    }
}

impl InterpTable {
    pub fn eval(&self, x: f64) -> f64 {
        let pts = &self.points;
        if x <= pts[0][0] {
            return pts[0][1];
        }
        let last = pts[pts.len() - 1];
        if x >= last[0] {
            return last[1];
        }
        let k = pts.partition_point(|p| p[0] <= x);
        let [x0, y0] = pts[k - 1];
        let [x1, y1] = pts[k];
        y0 + (y1 - y0) * (x - x0) / (x1 - x0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrientationTables {
    pub channel_strain: InterpTable,
    pub mobility_retention: InterpTable,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StrainCalibration {
    pub version: u32,
    pub parallel: OrientationTables,
    pub perpendicular: OrientationTables,
}

impl Default for StrainCalibration {
    fn default() -> Self {
        Self::from_toml(DEFAULT_STRAIN_CALIBRATION).expect("bundled strain calibration is valid")
    }
}

impl StrainCalibration {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cal: Self = toml::from_str(text).map_err(|e| ModelError::Calibration(e.to_string()))?;
        if cal.version != SUPPORTED_VERSION {
            return Err(ModelError::Calibration(format!(
                "unsupported calibration version {} (expected {SUPPORTED_VERSION})",
                cal.version
            )));
        }
        Ok(cal)
    }

    /// Multiplicative factors (length, width, mobility) for a strain state.
    pub fn factors(&self, s: &StrainState) -> (f64, f64, f64) {
        let (along, across) = match s.orientation {
            Orientation::ParallelToChannelLength => (&self.parallel, &self.perpendicular),
            Orientation::PerpendicularToChannelLength => (&self.perpendicular, &self.parallel),
        };
        let e = s.epsilon;
        (1.0 + along.channel_strain.eval(e), 1.0 + across.channel_strain.eval(e), along.mobility_retention.eval(e))
    }

    /// Device parameters under substrate strain. Channel length (and the
    /// overlap, which runs along it) follow the axis table, width follows the
    /// opposite axis, mobility follows the retention table.
    pub fn apply(&self, p: &OtftParams, s: &StrainState) -> Result<OtftParams> {
        s.validate()?;
        if s.epsilon == 0.0 {
            return Ok(*p);
        }
        let (fl, fw, fmu) = self.factors(s);
        let mut out = *p;
        out.geom.l *= fl;
        out.geom.lov *= fl;
        out.geom.w *= fw;
        out.mu0 *= fmu;
        out.validate()?;
        Ok(out)
    }
}

impl OtftParams {
    /// Strain transform using the bundled calibration.
    pub fn apply_strain(&self, s: &StrainState) -> Result<OtftParams> {
        StrainCalibration::default().apply(self, s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{DeviceGeometry, Polarity};
    use approx::assert_relative_eq;

    fn dev() -> OtftParams {
        OtftParams {
            polarity: Polarity::P,
            mu0: 2.35e-5,
            vth: -0.06,
            ss: 0.3,
            lambda: 0.02,
            gamma: 0.1,
            rc: 1e4,
            cox: 3.5e-4,
            geom: DeviceGeometry { w: 380e-6, l: 35e-6, lov: 5e-6 },
            triode_order: 3.0,
        }
    }

    fn par(e: f64) -> StrainState {
        StrainState::new(e, Orientation::ParallelToChannelLength).unwrap()
    }

    #[test]
    fn zero_strain_is_identity() {
        let p = dev();
        assert_eq!(p.apply_strain(&par(0.0)).unwrap(), p);
        let perp = StrainState::new(0.0, Orientation::PerpendicularToChannelLength).unwrap();
        assert_eq!(p.apply_strain(&perp).unwrap(), p);
    }

    #[test]
    fn full_strain_parallel_length() {
        let p = dev();
        let q = p.apply_strain(&par(1.0)).unwrap();
        assert_relative_eq!(q.geom.l / p.geom.l, 1.42, max_relative = 1e-12);
        assert_relative_eq!(q.geom.w / p.geom.w, 0.68, max_relative = 1e-12);
        assert_relative_eq!(q.mu0 / p.mu0, 0.67, max_relative = 1e-12);
    }

    #[test]
    fn half_strain_parallel_mobility() {
        let p = dev();
        let q = p.apply_strain(&par(0.5)).unwrap();
        assert_relative_eq!(q.mu0 / p.mu0, 0.67, max_relative = 1e-12);
        assert_relative_eq!(q.geom.l / p.geom.l, 1.21, max_relative = 1e-12);
        let quarter = p.apply_strain(&par(0.25)).unwrap();
        assert_relative_eq!(quarter.mu0 / p.mu0, 0.835, max_relative = 1e-12);
    }

    #[test]
    fn perpendicular_swaps_axes() {
        let p = dev();
        let s = StrainState::new(1.0, Orientation::PerpendicularToChannelLength).unwrap();
        let q = p.apply_strain(&s).unwrap();
        assert_relative_eq!(q.geom.l / p.geom.l, 0.68, max_relative = 1e-12);
        assert_relative_eq!(q.geom.w / p.geom.w, 1.42, max_relative = 1e-12);
        assert_eq!(q.mu0, p.mu0);
    }

    #[test]
    fn negative_strain_rejected() {
        assert!(StrainState::new(-0.1, Orientation::ParallelToChannelLength).is_err());
        let bad = StrainState { epsilon: -0.1, orientation: Orientation::ParallelToChannelLength };
        assert!(dev().apply_strain(&bad).is_err());
    }

    #[test]
    fn calibration_parsing() {
        let cal = StrainCalibration::default();
        assert_eq!(cal.version, 1);
        let bad = DEFAULT_STRAIN_CALIBRATION.replace("version = 1", "version = 7");
        assert!(StrainCalibration::from_toml(&bad).is_err());
        let unsorted = DEFAULT_STRAIN_CALIBRATION.replace("[[0.0, 0.0], [1.0, 0.42]]", "[[1.0, 0.42], [0.0, 0.0]]");
        assert!(StrainCalibration::from_toml(&unsorted).is_err());
    }
}
