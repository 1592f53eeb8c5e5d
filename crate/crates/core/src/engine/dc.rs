use crate::netlist::{AnalysisDirective, Circuit, SourceWave, SweepSpec};

use super::mna::Simulator;
use super::waveform::Waveform;
use super::{Result, SimError, SolverConfig};

/// Input step used by the central-difference gain.
const GAIN_STEP: f64 = 1e-3;
/// Interval halvings tried between two sweep points before giving up.
const MAX_SWEEP_BISECTIONS: u32 = 10;

/// A solved DC state, keyed by the circuit's visible unknowns.
#[derive(Debug, Clone, PartialEq)]
pub struct OperatingPoint {
    pub names: Vec<String>,
    pub values: Vec<f64>,
    pub(crate) raw: Vec<f64>,
}

impl OperatingPoint {
    pub fn get(&self, column: &str) -> Option<f64> {
        let key = column.to_ascii_lowercase();
        self.names.iter().position(|n| *n == key).map(|i| self.values[i])
    }

    /// Voltage of a named node; ground reads 0.
    pub fn voltage(&self, node: &str) -> Option<f64> {
        let key = node.to_ascii_lowercase();
        if key == "0" || key == "gnd" {
            return Some(0.0);
        }
        self.get(&format!("v({key})"))
    }

    /// Branch current of a voltage source, flowing from n+ through the source to n-.
    pub fn current(&self, source: &str) -> Option<f64> {
        self.get(&format!("i({})", source.to_ascii_lowercase()))
    }
}

impl Simulator {
    fn point(&self, raw: Vec<f64>) -> OperatingPoint {
        OperatingPoint { names: self.column_names(), values: self.visible(&raw), raw }
    }

    pub fn operating_point(&mut self) -> Result<OperatingPoint> {
        let x = self.solve_dc(None, 0.0, false)?;
        Ok(self.point(x))
    }

    /// Operating point warm-started from a previous solution.
    pub fn operating_point_from(&mut self, guess: &OperatingPoint) -> Result<OperatingPoint> {
        let g = (guess.raw.len() == self.size()).then_some(guess.raw.as_slice());
        let x = self.solve_dc(g, 0.0, false)?;
        Ok(self.point(x))
    }

    /// Replaces a source's waveform with a DC level.
    pub fn set_dc(&mut self, source: &str, value: f64) -> Result<()> {
        let r = self.source_index(source).ok_or_else(|| SimError::UnknownSource(source.to_string()))?;
        self.set_source(r, SourceWave::Dc(value));
        Ok(())
    }

    /// Steps `source` through `points`, warm-starting each solve from the
    /// previous one. A failed step is retried through intermediate values.
    pub fn sweep(&mut self, source: &str, points: &[f64]) -> Result<Waveform> {
        let r = self.source_index(source).ok_or_else(|| SimError::UnknownSource(source.to_string()))?;
        let mut wf = Waveform::new(source.to_ascii_lowercase(), self.column_names());
        let mut prev: Option<(f64, Vec<f64>)> = None;
        for &value in points {
            let x = match prev.take() {
                None => {
                    self.set_source(r, SourceWave::Dc(value));
                    self.solve_dc(None, 0.0, false)
                }
                Some((from, x0)) => self.continue_to(r, from, value, x0),
            }
            .map_err(|e| SimError::SweepFailed {
                source_name: source.to_ascii_lowercase(),
                value,
                cause: Box::new(e),
            })?;
            wf.push_row(value, self.visible(&x)).map_err(|e| SimError::Directive(e.to_string()))?;
            prev = Some((value, x));
        }
        Ok(wf)
    }

    fn continue_to(&mut self, r: super::mna::SourceRef, from: f64, to: f64, x0: Vec<f64>) -> Result<Vec<f64>> {
        let mut x = x0;
        let mut at = from;
        let mut h = to - from;
        let mut depth = 0;
        while at != to {
            let next = if (to - at).abs() <= h.abs() { to } else { at + h };
            self.set_source(r, SourceWave::Dc(next));
            match self.solve_dc(Some(&x), 0.0, false) {
                Ok(sol) => {
                    x = sol;
                    at = next;
                }
                Err(e) => {
                    depth += 1;
                    if depth > MAX_SWEEP_BISECTIONS {
                        return Err(e);
                    }
                    h /= 2.0;
                }
            }
        }
        Ok(x)
    }

    /// dVout/dVin by central difference of ±1 mV on `source` around `bias`.
    pub fn gain(&mut self, source: &str, output: &str, bias: f64) -> Result<f64> {
        let col = self.node_row(output).ok_or_else(|| SimError::UnknownNode(output.to_string()))?;
        if col == 0 {
            return Ok(0.0);
        }
        self.set_dc(source, bias)?;
        let centre = self.solve_dc(None, 0.0, false)?;
        let mut out = [0.0; 2];
        for (k, v) in [bias - GAIN_STEP, bias + GAIN_STEP].into_iter().enumerate() {
            self.set_dc(source, v)?;
            let x = self.solve_dc(Some(&centre), 0.0, false)?;
            out[k] = x[col - 1];
        }
        self.set_dc(source, bias)?;
        Ok((out[1] - out[0]) / (2.0 * GAIN_STEP))
    }
}

pub fn dc_operating_point(c: &Circuit, cfg: &SolverConfig) -> Result<OperatingPoint> {
    Simulator::new(c, cfg)?.operating_point()
}

/// Runs a `.dc` directive. A nested sweep yields one waveform per secondary
/// value, in order.
pub fn dc_sweep(c: &Circuit, directive: &AnalysisDirective, cfg: &SolverConfig) -> Result<Vec<Waveform>> {
    let AnalysisDirective::DcSweep { source, sweep, secondary } = directive else {
        return Err(SimError::Directive("dc_sweep requires a .dc directive".into()));
    };
    let mut sim = Simulator::new(c, cfg)?;
    let inner = sweep.points();
    match secondary {
        None => Ok(vec![sim.sweep(source, &inner)?]),
        Some((outer, spec)) => outer_sweep(&mut sim, source, &inner, outer, spec),
    }
}

fn outer_sweep(
    sim: &mut Simulator,
    source: &str,
    inner: &[f64],
    outer: &str,
    spec: &SweepSpec,
) -> Result<Vec<Waveform>> {
    spec.points()
        .into_iter()
        .map(|v| {
            sim.set_dc(outer, v)?;
            sim.sweep(source, inner)
        })
        .collect()
}

/// Small-signal voltage gain dV(output)/dV(source) at a DC bias.
pub fn small_signal_gain(c: &Circuit, source: &str, output: &str, bias: f64, cfg: &SolverConfig) -> Result<f64> {
    Simulator::new(c, cfg)?.gain(source, output, bias)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::netlist::parse;

    fn divider() -> Circuit {
        parse("divider\nV1 in 0 5\nR1 in mid 1k\nR2 mid 0 4k\n").unwrap()
    }

    #[test]
    fn divider_midpoint() {
        let op = dc_operating_point(&divider(), &SolverConfig::default()).unwrap();
        assert!((op.voltage("mid").unwrap() - 4.0).abs() < 1e-9);
        assert!((op.current("v1").unwrap() + 1e-3).abs() < 1e-12);
    }

    #[test]
    fn zero_source_gives_zero() {
        let c = parse("z\nV1 a 0 0\nR1 a b 1k\nR2 b 0 1k\n").unwrap();
        let op = dc_operating_point(&c, &SolverConfig::default()).unwrap();
        assert!(op.values.iter().all(|v| v.abs() < 1e-15));
    }

    #[test]
    fn divider_sweep_is_linear() {
        let mut c = divider();
        c.analyses.push(AnalysisDirective::DcSweep {
            source: "v1".into(),
            sweep: SweepSpec { start: 0.0, stop: 5.0, step: 0.5 },
            secondary: None,
        });
        let wf = dc_sweep(&c, &c.analyses[0], &SolverConfig::default()).unwrap().remove(0);
        assert_eq!(wf.len(), 11);
        for (v, m) in wf.axis().iter().zip(wf.column("v(mid)").unwrap()) {
            assert!((m - 0.8 * v).abs() < 1e-9 * v.max(1.0));
        }
    }

    #[test]
    fn zero_length_sweep_matches_op() {
        let c = divider();
        let d = AnalysisDirective::DcSweep {
            source: "v1".into(),
            sweep: SweepSpec { start: 5.0, stop: 5.0, step: 0.1 },
            secondary: None,
        };
        let wf = dc_sweep(&c, &d, &SolverConfig::default()).unwrap().remove(0);
        let op = dc_operating_point(&c, &SolverConfig::default()).unwrap();
        assert_eq!(wf.len(), 1);
        assert_eq!(wf.row(0), op.values);
    }

    #[test]
    fn resistor_gain_is_ratio() {
        let g = small_signal_gain(&divider(), "v1", "mid", 2.0, &SolverConfig::default()).unwrap();
        assert!((g - 0.8).abs() < 1e-9);
    }

    #[test]
    fn nested_sweep_yields_one_waveform_per_outer_value() {
        let c = parse("n\nV1 a 0 1\nV2 b 0 1\nR1 a m 1k\nR2 b m 1k\n").unwrap();
        let d = AnalysisDirective::DcSweep {
            source: "v1".into(),
            sweep: SweepSpec { start: 0.0, stop: 1.0, step: 0.5 },
            secondary: Some(("v2".into(), SweepSpec { start: 0.0, stop: 2.0, step: 1.0 })),
        };
        let wfs = dc_sweep(&c, &d, &SolverConfig::default()).unwrap();
        assert_eq!(wfs.len(), 3);
        let m = wfs[2].column("v(m)").unwrap();
        assert!((m[2] - 1.5).abs() < 1e-9);
    }

    #[test]
    fn voltage_source_loop_is_singular() {
        let c = parse("loop\nV1 a 0 1\nV2 a 0 2\nR1 a 0 1k\n").unwrap();
        let err = dc_operating_point(&c, &SolverConfig::default()).unwrap_err();
        assert!(matches!(err, SimError::Singular(_)), "{err}");
    }

    #[test]
    fn unknown_sweep_source() {
        let mut sim = Simulator::new(&divider(), &SolverConfig::default()).unwrap();
        assert!(matches!(sim.sweep("v9", &[1.0]), Err(SimError::UnknownSource(_))));
    }
}
