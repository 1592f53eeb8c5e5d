use crate::netlist::{AnalysisDirective, Circuit};

use super::mna::{Companion, Simulator};
use super::waveform::Waveform;
use super::{IntegrationMethod, Result, SimError, SolverConfig};

/// Capacitor voltages and currents at the last accepted time point.
#[derive(Debug, Clone)]
struct CapState {
    v: Vec<f64>,
    i: Vec<f64>,
}

impl Simulator {
    fn cap_voltages(&self, x: &[f64]) -> Vec<f64> {
        let v = |id: usize| if id == 0 { 0.0 } else { x[id - 1] };
        self.caps.iter().map(|c| v(c.a) - v(c.b)).collect()
    }

    /// One implicit step of length `h` ending at `t`.
    fn advance(
        &self,
        guess: &[f64],
        state: &CapState,
        t: f64,
        h: f64,
        method: IntegrationMethod,
    ) -> Option<(Vec<f64>, CapState)> {
        let comp: Vec<Companion> = self
            .caps
            .iter()
            .enumerate()
            .map(|(k, cap)| match method {
                IntegrationMethod::BackwardEuler => {
                    let geq = cap.c / h;
                    Companion { geq, ieq: -geq * state.v[k] }
                }
                IntegrationMethod::Trapezoidal => {
                    let geq = 2.0 * cap.c / h;
                    Companion { geq, ieq: -geq * state.v[k] - state.i[k] }
                }
            })
            .collect();
        let mut ctx = self.base_context(t);
        ctx.companions = Some(&comp);
        let mut next = guess.to_vec();
        self.newton(&mut next, &ctx).ok()?;
        let v = self.cap_voltages(&next);
        let i = v.iter().zip(&comp).map(|(v, k)| k.geq * v + k.ieq).collect();
        Some((next, CapState { v, i }))
    }

    /// Integrates from the t = 0 operating point (with `.ic` nodes pinned)
    /// to `stop`, returning one row per accepted step.
    pub fn transient(&mut self, step: f64, stop: f64, max_step: Option<f64>) -> Result<Waveform> {
        if !(step > 0.0 && stop > 0.0 && step.is_finite() && stop.is_finite()) {
            return Err(SimError::Directive(format!("invalid .tran step {step} stop {stop}")));
        }
        let tc = self.cfg.transient;
        let min_step = tc.min_step.unwrap_or(stop * 1e-12);
        let max_step = tc.max_step.or(max_step).unwrap_or(stop / 50.0).min(stop);

        let mut x = self.solve_dc(None, 0.0, true)?;
        let mut state = CapState { v: self.cap_voltages(&x), i: vec![0.0; self.caps.len()] };
        let mut wf = Waveform::new("time", self.column_names());
        wf.push_row(0.0, self.visible(&x)).expect("first row");

        let mut breaks: Vec<f64> = self
            .vsrcs
            .iter()
            .map(|s| s.wave)
            .chain(self.isrcs.iter().map(|s| s.wave))
            .flat_map(|w| w.breakpoints(stop))
            .filter(|&b| b > 0.0)
            .chain(std::iter::once(stop))
            .collect();
        breaks.sort_by(f64::total_cmp);
        breaks.dedup_by(|a, b| (*a - *b).abs() <= min_step);

        let mut t = 0.0;
        let mut h = if tc.adaptive { step.min(stop / 1000.0) } else { step };
        let mut restart = true;
        let mut slope: Option<Vec<f64>> = None;
        let mut bp = 0;
        while t < stop && stop - t > min_step * 0.5 {
            while bp < breaks.len() && breaks[bp] <= t + min_step * 0.5 {
                bp += 1;
            }
            let next_break = breaks.get(bp).copied().unwrap_or(stop);
            let mut h_try = if tc.adaptive { h.min(max_step) } else { h };
            let hits_break = t + h_try >= next_break - min_step * 0.5;
            if hits_break {
                h_try = next_break - t;
            }
            let method = if restart { IntegrationMethod::BackwardEuler } else { tc.method };
            let t_new = if hits_break { next_break } else { t + h_try };

            let outcome = if tc.adaptive {
                self.doubled_step(&x, slope.as_deref(), &state, t, h_try, t_new, method)
            } else {
                self.advance(&x, &state, t_new, h_try, method).map(|(xn, sn)| Step::Accept(xn, sn, h_try))
            };
            match outcome {
                Some(Step::Accept(xn, sn, h_next)) => {
                    // Linear predictor for the next Newton start; dropped
                    // across source breakpoints.
                    slope = (!hits_break).then(|| xn.iter().zip(&x).map(|(a, b)| (a - b) / (t_new - t)).collect());
                    x = xn;
                    state = sn;
                    t = t_new;
                    wf.push_row(t, self.visible(&x)).map_err(|e| SimError::Directive(e.to_string()))?;
                    restart = hits_break;
                    if tc.adaptive {
                        h = h_next.clamp(min_step, max_step);
                    }
                }
                Some(Step::Reject(h_next)) => {
                    if h_next < min_step {
                        return Err(SimError::StepUnderflow { time: t });
                    }
                    h = h_next;
                }
                None => {
                    h = h_try / 2.0;
                    if h < min_step {
                        return Err(SimError::StepUnderflow { time: t });
                    }
                }
            }
        }
        Ok(wf)
    }

    /// Full step versus two half steps; the half-step result is kept.
    #[allow(clippy::too_many_arguments)]
    fn doubled_step(
        &self,
        x: &[f64],
        slope: Option<&[f64]>,
        state: &CapState,
        t: f64,
        h: f64,
        t_new: f64,
        method: IntegrationMethod,
    ) -> Option<Step> {
        let tol = self.cfg.transient.lte_tol;
        let predict = |base: &[f64], dt: f64| -> Vec<f64> {
            match slope {
                Some(d) => base.iter().zip(d).map(|(x, d)| x + d * dt).collect(),
                None => base.to_vec(),
            }
        };
        let (x_full, _) = self.advance(&predict(x, h), state, t_new, h, method)?;
        let (x_mid, s_mid) = self.advance(&predict(x, h / 2.0), state, t + h / 2.0, h / 2.0, method)?;
        let (x_half, s_half) = self.advance(&predict(&x_mid, h / 2.0), &s_mid, t_new, h / 2.0, method)?;
        let p = method.order();
        let denom = 2f64.powi(p) - 1.0;
        let err = (0..self.n_nodes)
            .map(|i| (x_half[i] - x_full[i]).abs() / denom / x_half[i].abs().max(1.0))
            .fold(0.0f64, f64::max);
        let factor = if err > 0.0 { (0.9 * (tol / err).powf(1.0 / (p as f64 + 1.0))).clamp(0.25, 2.0) } else { 2.0 };
        if err <= tol {
            Some(Step::Accept(x_half, s_half, h * factor))
        } else {
            Some(Step::Reject(h * factor.min(0.9)))
        }
    }
}

enum Step {
    Accept(Vec<f64>, CapState, f64),
    Reject(f64),
}

/// Runs a `.tran` directive.
pub fn transient(c: &Circuit, directive: &AnalysisDirective, cfg: &SolverConfig) -> Result<Waveform> {
    let AnalysisDirective::Tran { step, stop, max_step } = *directive else {
        return Err(SimError::Directive("transient requires a .tran directive".into()));
    };
    Simulator::new(c, cfg)?.transient(step, stop, max_step)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::netlist::parse;

    const RC: &str = "rc\nV1 in 0 PULSE(0 5 0 1n 1n 1 2)\nR1 in out 1k\nC1 out 0 1u\n";

    fn value_at(wf: &Waveform, col: &str, t: f64) -> f64 {
        let ax = wf.axis();
        let y = wf.column(col).unwrap();
        let k = ax.partition_point(|&a| a < t).min(ax.len() - 1).max(1);
        let (t0, t1) = (ax[k - 1], ax[k]);
        y[k - 1] + (y[k] - y[k - 1]) * (t - t0) / (t1 - t0)
    }

    #[test]
    fn rc_charging_matches_exponential() {
        let c = parse(&format!("{RC}.tran 1u 2m\n")).unwrap();
        let wf = transient(&c, &c.analyses[0], &SolverConfig::default()).unwrap();
        let want = 5.0 * (1.0 - (-(1e-3_f64 - 1e-9) / 1e-3).exp());
        let got = value_at(&wf, "v(out)", 1e-3);
        assert!((got - want).abs() / want < 1e-3, "{got} vs {want}");
    }

    #[test]
    fn resistive_circuit_is_constant() {
        let c = parse("r\nV1 a 0 2\nR1 a b 1k\nR2 b 0 1k\n.tran 1u 10u\n").unwrap();
        let wf = transient(&c, &c.analyses[0], &SolverConfig::default()).unwrap();
        assert!(wf.column("v(b)").unwrap().iter().all(|v| (v - 1.0).abs() < 1e-12));
    }

    #[test]
    fn deterministic() {
        let c = parse(&format!("{RC}.tran 1u 2m\n")).unwrap();
        let a = transient(&c, &c.analyses[0], &SolverConfig::default()).unwrap();
        let b = transient(&c, &c.analyses[0], &SolverConfig::default()).unwrap();
        assert_eq!(a.to_binary(), b.to_binary());
    }

    #[test]
    fn initial_condition_holds_node() {
        let c = parse("ic\nR1 a 0 1k\nC1 a 0 1u\n.ic v(a)=2\n.tran 10u 1m\n").unwrap();
        let wf = transient(&c, &c.analyses[0], &SolverConfig::default()).unwrap();
        let v = wf.column("v(a)").unwrap();
        assert!((v[0] - 2.0).abs() < 1e-5);
        let end = value_at(&wf, "v(a)", 1e-3);
        assert!((end - 2.0 * (-1.0f64).exp()).abs() < 2e-3 * 2.0);
    }
}
