use serde::{Deserialize, Serialize};

use super::{ModelError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Polarity {
    P,
    N,
}

impl Polarity {
    /// +1 for N-type, -1 for P-type.
    pub fn sign(self) -> f64 {
        match self {
            Polarity::N => 1.0,
            Polarity::P => -1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DeviceGeometry {
    /// Channel width, m.
    pub w: f64,
    /// Channel length, m.
    pub l: f64,
    /// Source/drain to gate overlap, m.
    pub lov: f64,
}

impl DeviceGeometry {
    pub fn new(w: f64, l: f64, lov: f64) -> Result<Self> {
        let g = Self { w, l, lov };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.w > 0.0 && self.w.is_finite()) {
            return Err(ModelError::InvalidParams(format!("W = {} must be > 0", self.w)));
        }
        if !(self.l > 0.0 && self.l.is_finite()) {
            return Err(ModelError::InvalidParams(format!("L = {} must be > 0", self.l)));
        }
        if !(self.lov >= 0.0 && self.lov.is_finite()) {
            return Err(ModelError::InvalidParams(format!("LOV = {} must be >= 0", self.lov)));
        }
        Ok(())
    }
}

/// Compact-model parameter set for one transistor.
///
/// All quantities are SI. `vth` is signed in the device's own polarity
/// convention, so a typical P-type device has `vth < 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OtftParams {
    pub polarity: Polarity,
    /// Low-field mobility, m²/(V·s).
    pub mu0: f64,
    pub vth: f64,
    /// Subthreshold swing, V/decade.
    pub ss: f64,
    /// Channel-length modulation, 1/V.
    pub lambda: f64,
    /// Power-law exponent of the gate-voltage-dependent mobility.
    pub gamma: f64,
    /// Total contact resistance, Ω (half at each contact).
    pub rc: f64,
    /// Areal gate capacitance, F/m².
    pub cox: f64,
    pub geom: DeviceGeometry,
    /// Order of the triode/saturation interpolation.
    #[serde(default = "default_triode_order")]
    pub triode_order: f64,
}

fn default_triode_order() -> f64 {
    OtftParams::DEFAULT_TRIODE_ORDER
}

/// Drain current and its partial derivatives at one bias point.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct DrainEval {
    /// Current into the drain terminal, A.
    pub id: f64,
    /// ∂ID/∂VGS, S.
    pub gm: f64,
    /// ∂ID/∂VDS, S.
    pub gds: f64,
}

const LN10: f64 = std::f64::consts::LN_10;

impl OtftParams {
    pub const DEFAULT_TRIODE_ORDER: f64 = 3.0;

    pub fn validate(&self) -> Result<()> {
        self.geom.validate()?;
        let checks = [
            (self.mu0 > 0.0, "mu0 must be > 0"),
            (self.ss > 0.0, "SS must be > 0"),
            (self.lambda >= 0.0, "lambda must be >= 0"),
            (self.gamma >= 0.0, "gamma must be >= 0"),
            (self.rc >= 0.0, "Rc must be >= 0"),
            (self.cox > 0.0, "Cox must be > 0"),
            (self.triode_order >= 1.0, "triode order must be >= 1"),
            (self.vth.is_finite(), "Vth must be finite"),
        ];
        for (ok, msg) in checks {
            if !ok {
                return Err(ModelError::InvalidParams(msg.into()));
            }
        }
        let finite = [self.mu0, self.ss, self.lambda, self.gamma, self.rc, self.cox];
        if finite.iter().any(|v| !v.is_finite()) {
            return Err(ModelError::InvalidParams("non-finite parameter".into()));
        }
        Ok(())
    }

    /// The same device with the opposite polarity and a mirrored threshold.
    pub fn mirrored(&self) -> Self {
        Self {
            polarity: match self.polarity {
                Polarity::N => Polarity::P,
                Polarity::P => Polarity::N,
            },
            vth: -self.vth,
            ..*self
        }
    }

    /// (W/L)·Cox, F/V·s per unit mobility.
    fn beta_per_mobility(&self) -> f64 {
        self.geom.w / self.geom.l * self.cox
    }

    /// Width of the softplus overdrive in volts. The effective current in
    /// subthreshold goes as Vov_eff^(2+γ), so the width carries that power to
    /// make the decade slope of ID equal `ss`.
    fn smoothing_width(&self) -> f64 {
        (2.0 + self.gamma) * self.ss / LN10
    }

    /// Smoothed overdrive and its derivative w.r.t. the normalized gate voltage.
    pub fn effective_overdrive(&self, vgs_norm: f64) -> (f64, f64) {
        let width = self.smoothing_width();
        let x = (vgs_norm - self.vth_norm()) / width;
        let (sp, sig) = softplus(x);
        (width * sp, sig)
    }

    fn vth_norm(&self) -> f64 {
        self.polarity.sign() * self.vth
    }

    /// Drain current in the normalized (N-type) frame for `vds >= 0`, with
    /// derivatives w.r.t. its two arguments.
    fn forward(&self, vgs: f64, vds: f64) -> (f64, f64, f64) {
        debug_assert!(vds >= 0.0);
        let m = self.triode_order;
        let (vov, dvov) = self.effective_overdrive(vgs);

        let (mu, dmu) = if self.gamma == 0.0 {
            (self.mu0, 0.0)
        } else if vov > 0.0 {
            let mu = self.mu0 * vov.powf(self.gamma);
            (mu, self.gamma * mu / vov)
        } else {
            (0.0, 0.0)
        };

        // Vds_eff = vds / (1 + (vds/vdsat)^m)^(1/m), vdsat = vov.
        let (vde, dvde_dvds, dvde_dvsat) = if vov <= 0.0 {
            (0.0, 0.0, 1.0)
        } else {
            let u = vds / vov;
            if u <= 1.0 {
                let um = u.powf(m);
                let base = 1.0 + um;
                let inv = base.powf(-1.0 / m);
                let tail = base.powf(-1.0 - 1.0 / m);
                (vds * inv, tail, u.powf(m + 1.0) * tail)
            } else {
                let r = vov / vds;
                let rm = r.powf(m);
                let base = 1.0 + rm;
                let tail = base.powf(-1.0 - 1.0 / m);
                (vov * base.powf(-1.0 / m), r.powf(m + 1.0) * tail, tail)
            }
        };

        let core = (vov - 0.5 * vde) * vde;
        let dcore_dvov = vde + (vov - vde) * dvde_dvsat;
        let dcore_dvds = (vov - vde) * dvde_dvds;

        let b = self.beta_per_mobility();
        let clm = 1.0 + self.lambda * vds;
        let id = b * mu * core * clm;
        let gm = b * clm * (dmu * core + mu * dcore_dvov) * dvov;
        let gds = b * mu * (dcore_dvds * clm + core * self.lambda);
        (id, gm, gds)
    }

    /// Normalized-frame current for any sign of `vds` (source/drain swap for
    /// reverse operation).
    fn normalized(&self, vgs: f64, vds: f64) -> (f64, f64, f64) {
        if vds >= 0.0 {
            self.forward(vgs, vds)
        } else {
            let (f, fg, fw) = self.forward(vgs - vds, -vds);
            (-f, -fg, fg + fw)
        }
    }

    /// Current into the drain and its small-signal conductances, without
    /// contact resistance.
    pub fn eval(&self, vgs: f64, vds: f64) -> Result<DrainEval> {
        if vgs.is_nan() || vds.is_nan() {
            return Err(ModelError::Domain("NaN bias".into()));
        }
        Ok(self.eval_unchecked(vgs, vds))
    }

    /// Hot-path evaluation used by the circuit engine.
    #[inline]
    pub fn eval_unchecked(&self, vgs: f64, vds: f64) -> DrainEval {
        let s = self.polarity.sign();
        let (f, fg, fd) = self.normalized(s * vgs, s * vds);
        DrainEval { id: s * f, gm: fg, gds: fd }
    }

    pub fn drain_current(&self, vgs: f64, vds: f64) -> Result<f64> {
        Ok(self.eval(vgs, vds)?.id)
    }

    pub fn transconductance(&self, vgs: f64, vds: f64) -> Result<f64> {
        Ok(self.eval(vgs, vds)?.gm)
    }

    pub fn output_conductance(&self, vgs: f64, vds: f64) -> Result<f64> {
        Ok(self.eval(vgs, vds)?.gds)
    }

    /// Drain current including the two Rc/2 series contact resistors, solved
    /// self-consistently: I = ID(vgs - I·Rc/2, vds - I·Rc).
    pub fn terminal_current(&self, vgs: f64, vds: f64) -> Result<f64> {
        let intrinsic = self.eval(vgs, vds)?;
        if self.rc == 0.0 || intrinsic.id == 0.0 {
            return Ok(intrinsic.id);
        }
        let rs = 0.5 * self.rc;
        let residual = |i: f64| {
            let e = self.eval_unchecked(vgs - i * rs, vds - i * self.rc);
            (i - e.id, 1.0 + e.gm * rs + e.gds * self.rc)
        };
        // g(i) is strictly increasing with its root between 0 and the
        // intrinsic current.
        let (mut lo, mut hi) = if intrinsic.id > 0.0 { (0.0, intrinsic.id) } else { (intrinsic.id, 0.0) };
        let mut i = 0.5 * (lo + hi);
        for _ in 0..200 {
            let (g, dg) = residual(i);
            if g == 0.0 {
                return Ok(i);
            }
            if g > 0.0 {
                hi = i;
            } else {
                lo = i;
            }
            let mut next = i - g / dg;
            if !(next > lo && next < hi) {
                next = 0.5 * (lo + hi);
            }
            if (next - i).abs() <= 1e-15 * i.abs().max(1e-30) || hi - lo <= 1e-15 * hi.abs().max(lo.abs()) {
                return Ok(next);
            }
            i = next;
        }
        Ok(i)
    }

    /// Constant gate–source and gate–drain capacitances, F.
    pub fn device_capacitances(&self) -> (f64, f64) {
        let c = self.cox * self.geom.w * (0.5 * self.geom.l + self.geom.lov);
        (c, c)
    }
}

/// ln(1 + eˣ) and its derivative, overflow-safe.
fn softplus(x: f64) -> (f64, f64) {
    if x > 35.0 {
        (x + (-x).exp(), 1.0)
    } else if x < -35.0 {
        let e = x.exp();
        (e, e)
    } else {
        let e = x.exp();
        (e.ln_1p(), e / (1.0 + e))
    }
}
