use crate::model::{OtftParams, StrainCalibration};
use crate::netlist::{validate, Circuit, ElementKind, Severity, SourceWave};

use super::linalg::DenseMatrix;
use super::{Result, SimError, SolverConfig};

/// Conductance used to pin `.ic` nodes during the initial solve, S.
const IC_CONDUCTANCE: f64 = 1e6;

#[derive(Debug, Clone)]
pub(crate) struct Cap {
    pub a: usize,
    pub b: usize,
    pub c: f64,
}

#[derive(Debug, Clone)]
pub(crate) struct VSrc {
    pub name: String,
    pub p: usize,
    pub n: usize,
    pub wave: SourceWave,
}

#[derive(Debug, Clone)]
pub(crate) struct ISrc {
    pub name: String,
    pub p: usize,
    pub n: usize,
    pub wave: SourceWave,
}

#[derive(Debug, Clone)]
pub(crate) struct Device {
    pub d: usize,
    pub g: usize,
    pub s: usize,
    pub params: OtftParams,
}

/// Linear companion of a capacitor: i(a→b) = geq·(va − vb) + ieq.
#[derive(Debug, Clone, Copy, Default)]
pub(crate) struct Companion {
    pub geq: f64,
    pub ieq: f64,
}

/// Per-solve stamping context.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Context<'a> {
    pub time: f64,
    /// Source-stepping factor applied to every independent source.
    pub alpha: f64,
    /// Conductance from every node to ground (gmin stepping).
    pub gshunt: f64,
    pub gmin: f64,
    pub companions: Option<&'a [Companion]>,
    pub ic: &'a [(usize, f64)],
}

/// How the Newton iterate is advanced; exposed for diagnostics and tests.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StepControl {
    Plain,
    GminStepping,
    SourceStepping,
}

/// An elaborated MNA system. Node ids: 0 is ground, `1..=n_nodes` map to
/// matrix rows `0..n_nodes`; voltage-source branch currents follow.
#[derive(Debug, Clone)]
pub struct Simulator {
    pub(crate) cfg: SolverConfig,
    pub(crate) n_nodes: usize,
    pub(crate) circuit_nodes: usize,
    pub(crate) names: Vec<String>,
    pub(crate) conductances: Vec<(usize, usize, f64)>,
    pub(crate) caps: Vec<Cap>,
    pub(crate) vsrcs: Vec<VSrc>,
    pub(crate) isrcs: Vec<ISrc>,
    pub(crate) devices: Vec<Device>,
    pub(crate) ic: Vec<(usize, f64)>,
    pub(crate) last_strategy: StepControl,
}

pub(crate) struct NewtonFailure {
    pub residual: f64,
    pub singular: Option<usize>,
}

impl Simulator {
    pub fn new(c: &Circuit, cfg: &SolverConfig) -> Result<Self> {
        Self::with_calibration(c, cfg, &StrainCalibration::default())
    }

    /// Elaborates the circuit: contact resistances become Rc/2 resistors to
    /// internal source/drain nodes; OTFT capacitances attach at the external
    /// terminals.
    pub fn with_calibration(c: &Circuit, cfg: &SolverConfig, cal: &StrainCalibration) -> Result<Self> {
        cfg.validate()?;
        let errors: Vec<_> = validate(c).into_iter().filter(|d| d.severity == Severity::Error).collect();
        if !errors.is_empty() {
            return Err(SimError::InvalidCircuit(errors));
        }
        let circuit_nodes = c.node_count();
        let mut names: Vec<String> = c.node_names().to_vec();
        let mut next = circuit_nodes;
        let mut new_node = |label: String, names: &mut Vec<String>| {
            let id = next;
            next += 1;
            names.push(label);
            id
        };
        let mut sim = Simulator {
            cfg: *cfg,
            n_nodes: 0,
            circuit_nodes,
            names: Vec::new(),
            conductances: Vec::new(),
            caps: Vec::new(),
            vsrcs: Vec::new(),
            isrcs: Vec::new(),
            devices: Vec::new(),
            ic: c.initial_conditions.clone(),
            last_strategy: StepControl::Plain,
        };
        for e in &c.elements {
            let n = &e.nodes;
            match &e.kind {
                ElementKind::Resistor { r, .. } => sim.conductances.push((n[0], n[1], 1.0 / r)),
                ElementKind::Capacitor { c } => sim.caps.push(Cap { a: n[0], b: n[1], c: *c }),
                ElementKind::VSource { wave } => {
                    sim.vsrcs.push(VSrc { name: e.name.clone(), p: n[0], n: n[1], wave: *wave })
                }
                ElementKind::ISource { wave } => {
                    sim.isrcs.push(ISrc { name: e.name.clone(), p: n[0], n: n[1], wave: *wave })
                }
                ElementKind::Otft { .. } => {
                    let params = c.resolve_otft(e, cal)?;
                    let (d, g, s) = (n[0], n[1], n[2]);
                    let (di, si) = if params.rc > 0.0 {
                        let di = new_node(format!("{}#d", e.name), &mut names);
                        let si = new_node(format!("{}#s", e.name), &mut names);
                        let gc = 2.0 / params.rc;
                        sim.conductances.push((d, di, gc));
                        sim.conductances.push((s, si, gc));
                        (di, si)
                    } else {
                        (d, s)
                    };
                    let (cgs, cgd) = params.device_capacitances();
                    sim.caps.push(Cap { a: g, b: s, c: cgs });
                    sim.caps.push(Cap { a: g, b: d, c: cgd });
                    sim.devices.push(Device { d: di, g, s: si, params });
                }
            }
        }
        sim.n_nodes = names.len() - 1;
        sim.names = names;
        Ok(sim)
    }

    pub fn config(&self) -> &SolverConfig {
        &self.cfg
    }

    pub(crate) fn size(&self) -> usize {
        self.n_nodes + self.vsrcs.len()
    }

    /// Strategy that produced the most recent DC solution.
    pub fn last_strategy(&self) -> StepControl {
        self.last_strategy
    }

    pub(crate) fn source_index(&self, name: &str) -> Option<SourceRef> {
        let key = name.to_ascii_lowercase();
        if let Some(i) = self.vsrcs.iter().position(|v| v.name == key) {
            return Some(SourceRef::V(i));
        }
        self.isrcs.iter().position(|v| v.name == key).map(SourceRef::I)
    }

    pub(crate) fn set_source(&mut self, r: SourceRef, wave: SourceWave) {
        match r {
            SourceRef::V(i) => self.vsrcs[i].wave = wave,
            SourceRef::I(i) => self.isrcs[i].wave = wave,
        }
    }

    /// Column labels for the circuit-visible unknowns.
    pub(crate) fn column_names(&self) -> Vec<String> {
        let mut cols: Vec<String> = (1..self.circuit_nodes).map(|k| format!("v({})", self.names[k])).collect();
        cols.extend(self.vsrcs.iter().map(|v| format!("i({})", v.name)));
        cols
    }

    pub(crate) fn visible(&self, x: &[f64]) -> Vec<f64> {
        let mut out: Vec<f64> = (1..self.circuit_nodes).map(|k| x[k - 1]).collect();
        out.extend_from_slice(&x[self.n_nodes..]);
        out
    }

    fn unknown_label(&self, k: usize) -> String {
        if k < self.n_nodes {
            format!("v({})", self.names[k + 1])
        } else {
            format!("i({})", self.vsrcs[k - self.n_nodes].name)
        }
    }

    pub(crate) fn node_row(&self, name: &str) -> Option<usize> {
        let key = name.to_ascii_lowercase();
        let key = if key == "gnd" { "0".to_string() } else { key };
        self.names[..self.circuit_nodes].iter().position(|n| *n == key)
    }

    /// Builds the Jacobian and the KCL/branch residual at `x`. `scale`
    /// receives, per row, the sum of magnitudes of the contributing currents.
    pub(crate) fn assemble(&self, x: &[f64], ctx: &Context, jac: &mut DenseMatrix, f: &mut [f64], scale: &mut [f64]) {
        jac.clear();
        f.iter_mut().for_each(|v| *v = 0.0);
        scale.iter_mut().for_each(|v| *v = 0.0);
        let v = |id: usize| if id == 0 { 0.0 } else { x[id - 1] };

        let stamp_g = |jac: &mut DenseMatrix, f: &mut [f64], scale: &mut [f64], a: usize, b: usize, g: f64, i: f64| {
            if a != 0 {
                f[a - 1] += i;
                scale[a - 1] += i.abs();
                jac.add(a - 1, a - 1, g);
                if b != 0 {
                    jac.add(a - 1, b - 1, -g);
                }
            }
            if b != 0 {
                f[b - 1] -= i;
                scale[b - 1] += i.abs();
                jac.add(b - 1, b - 1, g);
                if a != 0 {
                    jac.add(b - 1, a - 1, -g);
                }
            }
        };

        for &(a, b, g) in &self.conductances {
            stamp_g(jac, f, scale, a, b, g, g * (v(a) - v(b)));
        }
        if ctx.gshunt > 0.0 {
            for k in 1..=self.n_nodes {
                stamp_g(jac, f, scale, k, 0, ctx.gshunt, ctx.gshunt * v(k));
            }
        }
        for &(node, value) in ctx.ic {
            stamp_g(jac, f, scale, node, 0, IC_CONDUCTANCE, IC_CONDUCTANCE * (v(node) - value));
        }
        if let Some(comp) = ctx.companions {
            for (cap, k) in self.caps.iter().zip(comp) {
                let i = k.geq * (v(cap.a) - v(cap.b)) + k.ieq;
                stamp_g(jac, f, scale, cap.a, cap.b, k.geq, i);
            }
        }
        for src in &self.isrcs {
            let i = ctx.alpha * src.wave.value_at(ctx.time);
            for (node, sign) in [(src.p, 1.0), (src.n, -1.0)] {
                if node != 0 {
                    f[node - 1] += sign * i;
                    scale[node - 1] += i.abs();
                }
            }
        }
        for (k, src) in self.vsrcs.iter().enumerate() {
            let row = self.n_nodes + k;
            let i = x[row];
            for (node, sign) in [(src.p, 1.0), (src.n, -1.0)] {
                if node != 0 {
                    f[node - 1] += sign * i;
                    scale[node - 1] += i.abs();
                    jac.add(node - 1, row, sign);
                    jac.add(row, node - 1, sign);
                }
            }
            f[row] = v(src.p) - v(src.n) - ctx.alpha * src.wave.value_at(ctx.time);
        }
        for dev in &self.devices {
            let (vd, vg, vs) = (v(dev.d), v(dev.g), v(dev.s));
            let e = dev.params.eval_unchecked(vg - vs, vd - vs);
            // Drain current enters d and leaves s.
            let cols = [(dev.d, e.gds), (dev.g, e.gm), (dev.s, -e.gm - e.gds)];
            for (node, sign) in [(dev.d, 1.0), (dev.s, -1.0)] {
                if node == 0 {
                    continue;
                }
                f[node - 1] += sign * e.id;
                scale[node - 1] += e.id.abs();
                for &(col, g) in &cols {
                    if col != 0 {
                        jac.add(node - 1, col - 1, sign * g);
                    }
                }
            }
            stamp_g(jac, f, scale, dev.d, dev.s, ctx.gmin, ctx.gmin * (vd - vs));
            stamp_g(jac, f, scale, dev.g, dev.s, ctx.gmin, ctx.gmin * (vg - vs));
        }
    }

    /// Damped Newton iteration from `x`, updated in place.
    pub(crate) fn newton(&self, x: &mut [f64], ctx: &Context) -> std::result::Result<usize, NewtonFailure> {
        let n = self.size();
        let cfg = &self.cfg;
        let mut jac = DenseMatrix::zeros(n);
        let mut f = vec![0.0; n];
        let mut scale = vec![0.0; n];
        let mut dx = vec![0.0; n];
        let mut residual = f64::INFINITY;
        for iter in 0..cfg.max_newton_iters {
            self.assemble(x, ctx, &mut jac, &mut f, &mut scale);
            residual = 0.0;
            let mut kcl_ok = true;
            for i in 0..n {
                let r = f[i].abs();
                if i < self.n_nodes {
                    residual = residual.max(r);
                    if r > cfg.abstol + cfg.reltol * scale[i] {
                        kcl_ok = false;
                    }
                } else if r > cfg.vntol {
                    kcl_ok = false;
                }
            }
            if !residual.is_finite() {
                return Err(NewtonFailure { residual, singular: None });
            }
            for (d, r) in dx.iter_mut().zip(&f) {
                *d = -r;
            }
            if let Err(k) = jac.solve_in_place(&mut dx) {
                return Err(NewtonFailure { residual, singular: Some(k) });
            }
            let max_dv = dx[..self.n_nodes].iter().fold(0.0f64, |m, d| m.max(d.abs()));
            let damp = if max_dv > cfg.damping { cfg.damping / max_dv } else { 1.0 };
            let mut converged_dv = true;
            for i in 0..n {
                let step = damp * dx[i];
                x[i] += step;
                if i < self.n_nodes && step.abs() > cfg.vntol + cfg.reltol * x[i].abs() {
                    converged_dv = false;
                }
            }
            if kcl_ok && converged_dv && damp == 1.0 {
                return Ok(iter + 1);
            }
        }
        Err(NewtonFailure { residual, singular: None })
    }

    pub(crate) fn base_context(&self, time: f64) -> Context<'static> {
        Context { time, alpha: 1.0, gshunt: 0.0, gmin: self.cfg.gmin, companions: None, ic: &[] }
    }

    /// DC solution at `time` with the full homotopy ladder.
    pub(crate) fn solve_dc(&mut self, guess: Option<&[f64]>, time: f64, use_ic: bool) -> Result<Vec<f64>> {
        let n = self.size();
        let ic = if use_ic { self.ic.clone() } else { Vec::new() };
        let mut ctx = self.base_context(time);
        ctx.ic = &ic;

        let mut x = guess.map(|g| g.to_vec()).unwrap_or_else(|| vec![0.0; n]);
        let mut last_residual = f64::INFINITY;
        match self.newton(&mut x, &ctx) {
            Ok(_) => {
                self.last_strategy = StepControl::Plain;
                return Ok(x);
            }
            Err(e) => last_residual = last_residual.min(e.residual),
        }

        // Gmin stepping: shunt every node to ground, 1e-3 S down to gmin by
        // decades, then remove the shunt.
        let mut x = guess.map(|g| g.to_vec()).unwrap_or_else(|| vec![0.0; n]);
        let mut g = 1e-3;
        let mut ok = true;
        while g >= self.cfg.gmin * 0.999 {
            let c = Context { gshunt: g, ..ctx };
            if let Err(e) = self.newton(&mut x, &c) {
                last_residual = last_residual.min(e.residual);
                ok = false;
                break;
            }
            g /= 10.0;
        }
        if ok {
            match self.newton(&mut x, &ctx) {
                Ok(_) => {
                    self.last_strategy = StepControl::GminStepping;
                    return Ok(x);
                }
                Err(e) => last_residual = last_residual.min(e.residual),
            }
        }

        // Source stepping: ramp all sources from 0 to full value in ten
        // steps, subdividing a step that fails.
        let mut x = vec![0.0; n];
        let mut alpha: f64 = 0.0;
        let mut step: f64 = 0.1;
        let mut solved_alpha: f64 = -1.0;
        while solved_alpha < 1.0 {
            let target = if solved_alpha < 0.0 { 0.0 } else { (alpha + step).min(1.0) };
            let c = Context { alpha: target, ..ctx };
            let mut trial = x.clone();
            match self.newton(&mut trial, &c) {
                Ok(_) => {
                    x = trial;
                    alpha = target;
                    solved_alpha = target;
                    step = (step * 1.5).min(0.1);
                }
                Err(e) => {
                    last_residual = last_residual.min(e.residual);
                    step /= 4.0;
                    if step < 1e-4 || solved_alpha < 0.0 {
                        if let Some(k) = e.singular {
                            return Err(SimError::Singular(self.unknown_label(k)));
                        }
                        return Err(SimError::NonConvergence { residual: last_residual });
                    }
                }
            }
        }
        self.last_strategy = StepControl::SourceStepping;
        Ok(x)
    }

    /// Max over nodes of |KCL residual| − (abstol + reltol·scale); ≤ 0 means
    /// every node meets the tolerance.
    pub fn kcl_excess(&self, x: &[f64], time: f64) -> f64 {
        let n = self.size();
        let mut jac = DenseMatrix::zeros(n);
        let mut f = vec![0.0; n];
        let mut scale = vec![0.0; n];
        let ctx = self.base_context(time);
        self.assemble(x, &ctx, &mut jac, &mut f, &mut scale);
        (0..self.n_nodes)
            .map(|i| f[i].abs() - (self.cfg.abstol + self.cfg.reltol * scale[i]))
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// Jacobian at `x` (DC, no companions), for structural checks.
    pub fn jacobian(&self, x: &[f64]) -> DenseMatrix {
        let n = self.size();
        let mut jac = DenseMatrix::zeros(n);
        let mut f = vec![0.0; n];
        let mut scale = vec![0.0; n];
        self.assemble(x, &self.base_context(0.0), &mut jac, &mut f, &mut scale);
        jac
    }

    /// Number of node unknowns (circuit plus internal contact nodes).
    pub fn node_unknowns(&self) -> usize {
        self.n_nodes
    }

    pub fn unknowns(&self) -> usize {
        self.size()
    }
}

#[derive(Debug, Clone, Copy)]
pub(crate) enum SourceRef {
    V(usize),
    I(usize),
}
