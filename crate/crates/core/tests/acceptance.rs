//! Acceptance suite: one check per criterion, each reported as a PASS/FAIL
//! line on stderr. Run with `cargo test --test acceptance`.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::io::Write as _;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::Instant;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution as _, Normal};

use otftsim::analyses::{
    apply_samples, detect_spikes, logic_truth_table, monte_carlo, replica_samples, strained_circuit, vco_curve,
    vtc_metrics, LogicThresholds, McSpec, SpikeOptions, Supply, TranSettings, VtcMetrics,
};
use otftsim::engine::{dc_sweep, IntegrationMethod, Simulator, SolverConfig, Waveform};
use otftsim::extract::{
    extract_report, extract_saturation_mobility, extract_subthreshold_swing, fit_model, read_measurements,
    tlm_contact_resistance, tlm_dataset_from_model, FixedParams, IvSweep, SweepKind,
};
use otftsim::fixtures;
use otftsim::model::{DeviceGeometry, Orientation, OtftParams, Polarity, StrainCalibration, StrainState};
use otftsim::netlist::{parse, serialize, AnalysisDirective, Circuit, Distribution};
use otftsim::par::Exec;

type Outcome = Result<String, String>;
type Check = (&'static str, fn() -> Outcome);

macro_rules! ensure {
    ($cond:expr, $($fmt:tt)+) => {
        if !$cond {
            return Err(format!($($fmt)+));
        }
    };
}

fn fixture(text: &str) -> Circuit {
    parse(text).expect("fixture parses")
}

fn tran_of(c: &Circuit) -> TranSettings {
    c.analyses
        .iter()
        .find_map(|a| match *a {
            AnalysisDirective::Tran { step, stop, max_step } => Some(TranSettings { step, stop, max_step }),
            _ => None,
        })
        .expect("fixture has .tran")
}

fn ring_solver() -> SolverConfig {
    let mut s = SolverConfig::default();
    s.transient.lte_tol = 1e-3;
    s
}

fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    (0..n).map(|k| a + (b - a) * k as f64 / (n - 1) as f64).collect()
}

fn strictly_increasing(v: &[f64]) -> bool {
    v.windows(2).all(|w| w[1] > w[0])
}

// ---------------------------------------------------------------- 1

/// Random connected R/V/I network and its netlist. Voltage sources tie
/// nodes to ground so no source loop can form.
struct LinearNet {
    nodes: usize,
    resistors: Vec<(usize, usize, f64)>,
    currents: Vec<(usize, usize, f64)>,
    voltages: Vec<(usize, f64)>,
}

impl LinearNet {
    fn random(rng: &mut ChaCha8Rng) -> Self {
        let nodes = rng.random_range(2..=10);
        let r = |rng: &mut ChaCha8Rng| 10f64.powf(rng.random_range(0.0..4.0));
        let mut resistors = Vec::new();
        for k in 1..=nodes {
            let to = rng.random_range(0..k);
            resistors.push((k, to, r(rng)));
        }
        for _ in 0..rng.random_range(0..=nodes) {
            let a = rng.random_range(0..=nodes);
            let b = rng.random_range(0..=nodes);
            if a != b {
                resistors.push((a, b, r(rng)));
            }
        }
        let currents = (0..rng.random_range(1..=3))
            .map(|_| {
                let a = rng.random_range(0..=nodes);
                let b = (a + rng.random_range(1..=nodes)) % (nodes + 1);
                (a, b, rng.random_range(-1e-2..1e-2))
            })
            .collect();
        let mut voltages: Vec<(usize, f64)> = Vec::new();
        for _ in 0..rng.random_range(1..=2) {
            let n = rng.random_range(1..=nodes);
            if voltages.iter().all(|v| v.0 != n) {
                voltages.push((n, rng.random_range(-10.0..10.0)));
            }
        }
        Self { nodes, resistors, currents, voltages }
    }

    fn netlist(&self) -> String {
        let mut s = String::from("random network\n");
        for (k, (a, b, r)) in self.resistors.iter().enumerate() {
            s += &format!("R{k} {a} {b} {r:?}\n");
        }
        for (k, (a, b, i)) in self.currents.iter().enumerate() {
            s += &format!("I{k} {a} {b} DC {i:?}\n");
        }
        for (k, (n, v)) in self.voltages.iter().enumerate() {
            s += &format!("V{k} {n} 0 DC {v:?}\n");
        }
        s + ".op\n"
    }

    /// Node voltages 1..=n from reduced nodal analysis with the
    /// source-driven nodes eliminated.
    fn oracle(&self) -> Vec<f64> {
        let n = self.nodes + 1;
        let mut g = DMatrix::<f64>::zeros(n, n);
        let mut inj = DVector::<f64>::zeros(n);
        for &(a, b, r) in &self.resistors {
            let y = 1.0 / r;
            g[(a, a)] += y;
            g[(b, b)] += y;
            g[(a, b)] -= y;
            g[(b, a)] -= y;
        }
        for &(a, b, i) in &self.currents {
            // Current flows from a through the source into b.
            inj[a] -= i;
            inj[b] += i;
        }
        let mut fixed = vec![None; n];
        fixed[0] = Some(0.0);
        for &(k, v) in &self.voltages {
            fixed[k] = Some(v);
        }
        let free: Vec<usize> = (0..n).filter(|&k| fixed[k].is_none()).collect();
        let mut v: Vec<f64> = fixed.iter().map(|f| f.unwrap_or(0.0)).collect();
        if !free.is_empty() {
            let m = free.len();
            let a = DMatrix::from_fn(m, m, |i, j| g[(free[i], free[j])]);
            let rhs = DVector::from_fn(m, |i, _| {
                let row = free[i];
                inj[row] - (0..n).filter_map(|c| fixed[c].map(|vc| g[(row, c)] * vc)).sum::<f64>()
            });
            let x = a.lu().solve(&rhs).expect("oracle system is nonsingular");
            for (i, &k) in free.iter().enumerate() {
                v[k] = x[i];
            }
        }
        v[1..].to_vec()
    }
}

fn c1_linear_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0x11);
    let nets: Vec<LinearNet> = (0..100).map(|_| LinearNet::random(&mut rng)).collect();
    let t0 = Instant::now();
    let mut worst = 0.0f64;
    for (k, net) in nets.iter().enumerate() {
        let c = parse(&net.netlist()).map_err(|e| format!("network {k}: {e}"))?;
        let op = Simulator::new(&c, &SolverConfig::default())
            .and_then(|mut s| s.operating_point())
            .map_err(|e| format!("network {k}: {e}"))?;
        let want = net.oracle();
        let scale = want.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(f64::MIN_POSITIVE);
        for (i, w) in want.iter().enumerate() {
            let got = op.voltage(&(i + 1).to_string()).ok_or("missing node")?;
            worst = worst.max((got - w).abs() / scale);
        }
    }
    let elapsed = t0.elapsed().as_secs_f64();
    ensure!(worst <= 1e-12, "max relative error {worst:.2e} > 1e-12");
    ensure!(elapsed < 1.0, "runtime {elapsed:.3} s >= 1 s");
    Ok(format!("100 networks, max relative error {worst:.2e}, {elapsed:.3} s"))
}

// ---------------------------------------------------------------- 2

const RC_NET: &str = "rc\nV1 in 0 DC 1\nR1 in out 1k\nC1 out 0 1u\n.ic v(out)=0\n";
const TAU: f64 = 1e-3;

fn rc_run(cfg: &SolverConfig, step: f64, stop: f64) -> Result<Waveform, String> {
    let c = parse(RC_NET).map_err(|e| e.to_string())?;
    Simulator::new(&c, cfg).and_then(|mut s| s.transient(step, stop, None)).map_err(|e| e.to_string())
}

fn c2_transient_oracle() -> Outcome {
    let mut cfg = SolverConfig::default();
    cfg.transient.lte_tol = 1e-4;
    let w = rc_run(&cfg, 1e-5, 5.0 * TAU)?;
    let v = w.voltage("out").ok_or("no v(out)")?;
    let err = w.axis().iter().zip(v).map(|(t, y)| (y - (1.0 - (-t / TAU).exp())).abs()).fold(0.0, f64::max);
    ensure!(err < 1e-3, "adaptive max error {err:.2e} V exceeds 0.1% of the 1 V step");

    let mut fixed = SolverConfig::default();
    fixed.transient.adaptive = false;
    fixed.transient.method = IntegrationMethod::Trapezoidal;
    let steps = [TAU / 10.0, TAU / 20.0, TAU / 40.0, TAU / 80.0];
    let mut pts = Vec::new();
    for h in steps {
        let w = rc_run(&fixed, h, TAU)?;
        let t = *w.axis().last().ok_or("empty waveform")?;
        ensure!((t - TAU).abs() < 1e-12, "fixed-step run ended at {t}");
        let y = *w.voltage("out").ok_or("no v(out)")?.last().unwrap();
        pts.push((h.ln(), (y - (1.0 - (-1.0f64).exp())).abs().ln()));
    }
    let n = pts.len() as f64;
    let (mx, my) = (pts.iter().map(|p| p.0).sum::<f64>() / n, pts.iter().map(|p| p.1).sum::<f64>() / n);
    let slope =
        pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum::<f64>() / pts.iter().map(|p| (p.0 - mx).powi(2)).sum::<f64>();
    ensure!((slope - 2.0).abs() <= 0.2, "trapezoidal convergence slope {slope:.3} outside 2 ± 0.2");
    Ok(format!("max error {:.3}% at lte_tol 1e-4, convergence slope {slope:.3}", err * 100.0))
}

// ---------------------------------------------------------------- 3

fn test_device(polarity: Polarity) -> OtftParams {
    OtftParams {
        polarity,
        mu0: 2.35e-5,
        vth: if polarity == Polarity::P { -0.06 } else { 0.5 },
        ss: 0.3,
        lambda: 0.015,
        gamma: 0.3,
        rc: 0.0,
        cox: 3.5e-4,
        geom: DeviceGeometry::new(380e-6, 35e-6, 5e-6).unwrap(),
        triode_order: 3.0,
    }
}

/// Five-point central difference.
fn fd(f: impl Fn(f64) -> f64, x: f64, h: f64) -> f64 {
    (-f(x + 2.0 * h) + 8.0 * f(x + h) - 8.0 * f(x - h) + f(x - 2.0 * h)) / (12.0 * h)
}

fn rel(a: f64, b: f64) -> f64 {
    let d = (a - b).abs();
    if d == 0.0 {
        0.0
    } else {
        d / a.abs().max(b.abs())
    }
}

fn c3_model_derivatives() -> Outcome {
    let h = 1e-3;
    let mut worst_d = 0.0f64;
    let mut worst_jump = 0.0f64;
    for pol in [Polarity::N, Polarity::P] {
        let p = test_device(pol);
        let s = pol.sign();
        let id = |vg: f64, vd: f64| p.eval_unchecked(vg, vd).id;
        // 50 points per axis, symmetric, so VDS = 0 is not on the grid.
        for vgs in linspace(-5.0, 5.0, 50) {
            for vds in linspace(-5.0, 5.0, 50) {
                let e = p.eval(vgs, vds).map_err(|e| e.to_string())?;
                worst_d = worst_d.max(rel(e.gm, fd(|x| id(x, vds), vgs, h)));
                worst_d = worst_d.max(rel(e.gds, fd(|x| id(vgs, x), vds, h)));
            }
        }
        // Seams: VGS = Vth and VDS = Vdsat (normalized overdrive), approached from both sides.
        let d = 1e-12;
        let mut jump = |a: otftsim::model::DrainEval, b: otftsim::model::DrainEval| {
            for (x, y) in [(a.id, b.id), (a.gm, b.gm), (a.gds, b.gds)] {
                worst_jump = worst_jump.max(rel(x, y));
            }
        };
        for vds in [0.5, 2.0, 5.0] {
            jump(p.eval_unchecked(p.vth - d, s * vds), p.eval_unchecked(p.vth + d, s * vds));
        }
        for ov in [-0.3, 0.5, 2.0, 4.0] {
            let vgs = p.vth + s * ov;
            let (vsat, _) = p.effective_overdrive(s * vgs);
            jump(p.eval_unchecked(vgs, s * vsat * (1.0 - d)), p.eval_unchecked(vgs, s * vsat * (1.0 + d)));
        }
    }
    ensure!(worst_d <= 1e-6, "gm/gds finite-difference mismatch {worst_d:.2e} > 1e-6");
    ensure!(worst_jump < 1e-9, "seam jump {worst_jump:.2e} >= 1e-9");
    Ok(format!("2 × 50×50 grid, max derivative mismatch {worst_d:.2e}, max seam jump {worst_jump:.2e}"))
}

// ---------------------------------------------------------------- 4

fn c4_extraction_round_trip() -> Outcome {
    let t0 = Instant::now();
    // Square-law conditions for the √ID method: no contacts, no CLM, no γ,
    // deep saturation.
    let ideal = OtftParams { lambda: 0.0, gamma: 0.0, ss: 0.2, ..test_device(Polarity::P) };
    let vgs = linspace(2.0, -5.0, 141);
    let clean = IvSweep::synthesize(&ideal, SweepKind::Transfer, "ideal", -40.0, &vgs).map_err(|e| e.to_string())?;
    let sat = extract_saturation_mobility(&clean).map_err(|e| e.to_string())?;
    let ss = extract_subthreshold_swing(&clean).map_err(|e| e.to_string())?;
    let mu_err = rel(sat.mu_sat, ideal.mu0);
    let vth_err = (sat.vth - ideal.vth).abs();
    let ss_err = rel(ss, ideal.ss);
    ensure!(mu_err < 0.01, "noise-free mobility error {:.2}%", mu_err * 100.0);
    ensure!(vth_err < 0.02, "noise-free Vth error {:.1} mV", vth_err * 1e3);
    ensure!(ss_err < 0.02, "noise-free SS error {:.2}%", ss_err * 100.0);

    let mut rng = ChaCha8Rng::seed_from_u64(0x44);
    let noise = Normal::new(0.0, 0.01).unwrap();
    let mut noisy = clean.clone();
    for p in &mut noisy.points {
        p.1 *= 1.0 + noise.sample(&mut rng);
    }
    let mu_noisy = rel(extract_saturation_mobility(&noisy).map_err(|e| e.to_string())?.mu_sat, ideal.mu0);
    ensure!(mu_noisy < 0.10, "mobility error under 1% noise {:.2}%", mu_noisy * 100.0);

    // Full model fit: Vth fixed, the other five parameters free.
    let truth = OtftParams { rc: 3e5, lambda: 0.03, ..test_device(Polarity::P) };
    let mut sweeps =
        vec![IvSweep::synthesize(&truth, SweepKind::Transfer, "d", -5.0, &linspace(1.0, -5.0, 61)).unwrap()];
    for vg in [-2.0, -3.0, -4.0, -5.0] {
        sweeps.push(IvSweep::synthesize(&truth, SweepKind::Output, "d", vg, &linspace(0.0, -5.0, 51)).unwrap());
    }
    let fixed = FixedParams { geom: truth.geom, cox: truth.cox, vth: Some(truth.vth) };
    let fit = fit_model(&sweeps, &fixed).map_err(|e| e.to_string())?.params;
    let errs = [
        ("mu0", rel(fit.mu0, truth.mu0)),
        ("ss", rel(fit.ss, truth.ss)),
        ("lambda", rel(fit.lambda, truth.lambda)),
        ("gamma", rel(fit.gamma, truth.gamma)),
        ("rc", rel(fit.rc, truth.rc)),
    ];
    let (name, worst) = errs.iter().copied().fold(("", 0.0), |a, b| if b.1 > a.1 { b } else { a });
    ensure!(worst < 0.05, "fit_model {name} error {:.2}%", worst * 100.0);
    let elapsed = t0.elapsed().as_secs_f64();
    ensure!(elapsed < 10.0, "runtime {elapsed:.2} s >= 10 s");
    Ok(format!(
        "μ {:.3}%, Vth {:.1} mV, SS {:.2}%, noisy μ {:.2}%, fit worst {name} {:.2}%, {elapsed:.2} s",
        mu_err * 100.0,
        vth_err * 1e3,
        ss_err * 100.0,
        mu_noisy * 100.0,
        worst * 100.0
    ))
}

// ---------------------------------------------------------------- 5

/// RMS asinh residual of one sweep kind over the largest |asinh(I/Is)|.
fn curve_rms(p: &OtftParams, sweeps: &[IvSweep], kind: SweepKind) -> f64 {
    let is = 1e-9;
    let (mut sum, mut n, mut scale) = (0.0, 0usize, 0.0f64);
    for s in sweeps.iter().filter(|s| s.kind == kind) {
        for &(v, i) in &s.points {
            let (vgs, vds) = match kind {
                SweepKind::Transfer => (v, s.fixed_bias),
                SweepKind::Output => (s.fixed_bias, v),
            };
            let model = p.terminal_current(vgs, vds).unwrap();
            let t = (i / is).asinh();
            sum += ((model / is).asinh() - t).powi(2);
            scale = scale.max(t.abs());
            n += 1;
        }
    }
    (sum / n as f64).sqrt() / scale
}

fn c5_single_device() -> Outcome {
    let sweeps = read_measurements(fixtures::FIG2_DEVICE.as_bytes()).map_err(|e| e.to_string())?;
    let transfer = sweeps.iter().find(|s| s.kind == SweepKind::Transfer).ok_or("no transfer sweep")?;
    // Vth is a fixed, separately measured parameter of the card.
    let fixed = FixedParams { geom: transfer.geom, cox: transfer.cox, vth: Some(-0.06) };
    let card = fit_model(&sweeps, &fixed).map_err(|e| e.to_string())?.params;
    let rms_t = curve_rms(&card, &sweeps, SweepKind::Transfer);
    let rms_o = curve_rms(&card, &sweeps, SweepKind::Output);
    let report = extract_report(transfer).map_err(|e| e.to_string())?;
    let mu_cm2 = card.mu0 * 1e4;
    ensure!(rms_t < 0.05 && rms_o < 0.05, "asinh RMS transfer {rms_t:.3}, output {rms_o:.3}");
    ensure!(report.on_off > 1e5, "on/off {:.2e} <= 1e5", report.on_off);
    ensure!((mu_cm2 - 0.235).abs() <= 0.020, "μ {mu_cm2:.4} cm²/Vs outside 0.235 ± 0.020");
    Ok(format!(
        "RMS transfer {:.2}%, output {:.2}%, on/off {:.2e}, μ {mu_cm2:.4} cm²/Vs",
        rms_t * 100.0,
        rms_o * 100.0,
        report.on_off
    ))
}

// ---------------------------------------------------------------- 6

fn c6_tlm() -> Outcome {
    let p = fixture(fixtures::PSEUDO_E_INVERTER).models["pch"];
    let lengths = [2e-6, 5e-6, 15e-6, 35e-6];
    let d = tlm_dataset_from_model(&p, &lengths, 4.0, 0.1).map_err(|e| e.to_string())?;
    let r = tlm_contact_resistance(&d).map_err(|e| e.to_string())?;
    let want = p.rc * p.geom.w;
    let err = rel(r.rc_w, want);
    ensure!(err < 0.05, "Rc·W {:.4} vs {want:.4} Ω·m ({:.2}%)", r.rc_w, err * 100.0);
    let frac: Vec<f64> = lengths.iter().map(|&l| r.contact_fraction(l)).collect();
    let mut rev = frac.clone();
    rev.reverse();
    ensure!(strictly_increasing(&rev), "contact fraction not growing as L shrinks: {frac:?}");
    ensure!(frac[0] > 0.5 && frac[3] < 0.5, "contacts should dominate only at short L: {frac:?}");
    Ok(format!(
        "Rc·W {:.1} Ω·m ({:.2}% error), contact share {:.0}% at 2 µm, {:.0}% at 15 µm, {:.0}% at 35 µm",
        r.rc_w,
        err * 100.0,
        frac[0] * 100.0,
        frac[2] * 100.0,
        frac[3] * 100.0
    ))
}

// ---------------------------------------------------------------- 7

fn fixture_vtc(text: &str) -> Result<(Circuit, Waveform, VtcMetrics, f64), String> {
    let c = fixture(text);
    let d = c.analyses.iter().find(|a| matches!(a, AnalysisDirective::DcSweep { .. })).ok_or("no .dc")?;
    let w = dc_sweep(&c, d, &SolverConfig::default()).map_err(|e| e.to_string())?.remove(0);
    let vdd = c.params["vdd"];
    let m = vtc_metrics(&w, "out", vdd).map_err(|e| e.to_string())?;
    Ok((c, w, m, vdd))
}

/// Largest output difference between the forward sweep and a reverse sweep,
/// and whether independent cold solves of each point agree bit for bit.
fn hysteresis(c: &Circuit, w: &Waveform) -> Result<(f64, bool), String> {
    let cfg = SolverConfig::default();
    let mut rev_pts = w.axis().to_vec();
    rev_pts.reverse();
    let mut sim = Simulator::new(c, &cfg).map_err(|e| e.to_string())?;
    let rev = sim.sweep("vin", &rev_pts).map_err(|e| e.to_string())?;
    let (f, r) = (w.voltage("out").unwrap(), rev.voltage("out").unwrap());
    let n = f.len();
    let diff = (0..n).map(|k| (f[k] - r[n - 1 - k]).abs()).fold(0.0, f64::max);
    let mut identical = true;
    for &vin in rev_pts.iter().step_by(25) {
        let solve = || -> Result<f64, String> {
            let mut s = Simulator::new(c, &cfg).map_err(|e| e.to_string())?;
            s.set_dc("vin", vin).map_err(|e| e.to_string())?;
            Ok(s.operating_point().map_err(|e| e.to_string())?.voltage("out").unwrap())
        };
        identical &= solve()?.to_bits() == solve()?.to_bits();
    }
    Ok((diff, identical))
}

fn c7_inverter_gains() -> Outcome {
    let (pc, pw, pm, pvdd) = fixture_vtc(fixtures::PSEUDO_E_INVERTER)?;
    let (cc, cw, cm, cvdd) = fixture_vtc(fixtures::COMPLEMENTARY_INVERTER)?;
    ensure!(pm.peak_gain >= 20.0, "pseudo-E peak gain {:.2} < 20", pm.peak_gain);
    ensure!(cvdd == 3.0, "complementary fixture runs at {cvdd} V");
    ensure!(cm.peak_gain >= 10.0, "complementary peak gain {:.2} < 10", cm.peak_gain);
    ensure!(pm.crossings == 1 && cm.crossings == 1, "Vout = Vin crossings {} / {}", pm.crossings, cm.crossings);
    let (hp, ip) = hysteresis(&pc, &pw)?;
    let (hc, ic) = hysteresis(&cc, &cw)?;
    // Continuation sweeps agree to solver tolerance; memoryless point solves agree exactly.
    let tol = 10.0 * SolverConfig::default().vntol;
    ensure!(hp <= tol && hc <= tol, "sweep hysteresis {hp:.2e} / {hc:.2e} V");
    ensure!(ip && ic, "independent point solves differ");
    Ok(format!(
        "pseudo-E gain {:.1} (VDD {pvdd} V), complementary gain {:.1} (VDD 3 V), one crossing each, \
         sweep hysteresis {:.1e} V, point solves bit-identical",
        pm.peak_gain,
        cm.peak_gain,
        hp.max(hc)
    ))
}

// ---------------------------------------------------------------- 8

fn c8_vco() -> Outcome {
    let vdds: Vec<f64> = (1..=10).map(|k| 3.0 * k as f64).collect();
    let supply = Supply { sources: vec![("vdd".into(), 1.0), ("vss".into(), -1.0)] };
    // Reference ring: 320 Hz at 3 V to 1.14 kHz at 30 V.
    let ref_ratio = 1140.0 / 320.0;
    let mut detail = Vec::new();
    for (name, text) in [("W1/W2=20", fixtures::PSEUDO_E_RO_W20), ("W1/W2=10", fixtures::PSEUDO_E_RO_W10)] {
        let c = fixture(text);
        let pts = vco_curve(&c, &supply, &vdds, "out", &tran_of(&c), &ring_solver(), Exec::default())
            .map_err(|e| format!("{name}: {e}"))?;
        let f: Vec<f64> = pts.iter().map(|p| p.frequency).collect();
        ensure!(strictly_increasing(&f), "{name}: frequency not strictly increasing: {f:?}");
        let ratio = f[9] / f[0];
        ensure!(
            ratio >= ref_ratio / 2.0 && ratio <= ref_ratio * 2.0,
            "{name}: f(30)/f(3) = {ratio:.2}, outside a factor of 2 of {ref_ratio:.2}"
        );
        detail.push(format!("{name} {:.0} → {:.0} Hz (×{ratio:.2})", f[0], f[9]));
    }
    let c = fixture(fixtures::COMPLEMENTARY_RO);
    let p = vco_curve(&c, &Supply::single("vdd"), &[60.0], "out", &tran_of(&c), &ring_solver(), Exec::default())
        .map_err(|e| format!("complementary: {e}"))?;
    let f60 = p[0].frequency;
    ensure!((1e3..=1e4).contains(&f60), "complementary RO at 60 V: {f60:.0} Hz");
    detail.push(format!("complementary {f60:.0} Hz at 60 V"));
    Ok(detail.join(", "))
}

// ---------------------------------------------------------------- 9

fn c9_neuron() -> Outcome {
    let c = fixture(fixtures::NEURON);
    let tran = tran_of(&c);
    let opts = SpikeOptions::for_supply(c.params["vdd"]);
    let mut rates = Vec::new();
    let mut slowest = 0.0f64;
    for iex in [0.0, 9e-9, 20e-9, 50e-9, 100e-9, 500e-9] {
        let mut ck = c.clone();
        ck.set_source_dc("iex", iex).ok_or("no IEX source")?;
        let t0 = Instant::now();
        let w = Simulator::new(&ck, &SolverConfig::default())
            .and_then(|mut s| s.transient(tran.step, tran.stop, tran.max_step))
            .map_err(|e| format!("{} nA: {e}", iex * 1e9))?;
        slowest = slowest.max(t0.elapsed().as_secs_f64());
        let train = detect_spikes(&w, "vm", &opts).map_err(|e| e.to_string())?;
        if iex == 0.0 {
            ensure!(train.times.is_empty(), "{} spikes with zero input", train.times.len());
        } else {
            rates.push(train.rate);
        }
    }
    ensure!(strictly_increasing(&rates), "rates not strictly increasing: {rates:?}");
    let (lo, hi) = (rates[0], rates[rates.len() - 1]);
    ensure!(lo >= 1.0 && hi <= 100.0, "endpoint rates {lo:.2} / {hi:.2} Hz outside 1–100 Hz");
    ensure!(slowest < 30.0, "slowest transient {slowest:.1} s");
    Ok(format!(
        "rates {} Hz, zero input silent, slowest transient {slowest:.2} s",
        rates.iter().map(|r| format!("{r:.1}")).collect::<Vec<_>>().join(" < ")
    ))
}

// ---------------------------------------------------------------- 10

fn c10_logic() -> Outcome {
    let levels = LogicThresholds::default();
    let mut detail = Vec::new();
    for (name, text, want) in
        [("NAND", fixtures::NAND, [true, true, true, false]), ("NOR", fixtures::NOR, [true, false, false, false])]
    {
        let t = logic_truth_table(&fixture(text), &["va", "vb"], "out", 5.0, &levels, &SolverConfig::default())
            .map_err(|e| format!("{name}: {e}"))?;
        ensure!(t.outputs() == want, "{name}: outputs {:?}", t.outputs());
        let margin = t
            .rows
            .iter()
            .map(|r| if r.output { r.vout - levels.high * 5.0 } else { levels.low * 5.0 - r.vout })
            .fold(f64::INFINITY, f64::min);
        detail.push(format!("{name} correct (margin {margin:.2} V)"));
    }
    Ok(detail.join(", "))
}

// ---------------------------------------------------------------- 11

fn inverter_vtc(c: &Circuit, vdd: f64) -> Result<Waveform, String> {
    let pts = linspace(0.0, vdd, 301);
    Simulator::new(c, &SolverConfig::default()).and_then(|mut s| s.sweep("vin", &pts)).map_err(|e| e.to_string())
}

fn c11_strain() -> Outcome {
    let inverters = [("pseudo-E", fixtures::PSEUDO_E_INVERTER), ("complementary", fixtures::COMPLEMENTARY_INVERTER)];
    for (name, text) in inverters {
        let c = fixture(text);
        let vdd = c.params["vdd"];
        let base = inverter_vtc(&c, vdd)?;
        for o in [Orientation::ParallelToChannelLength, Orientation::PerpendicularToChannelLength] {
            let s = strained_circuit(&c, 0.0, o, true).map_err(|e| e.to_string())?;
            let w = inverter_vtc(&s, vdd)?;
            let same = base
                .voltage("out")
                .unwrap()
                .iter()
                .zip(w.voltage("out").unwrap())
                .all(|(a, b)| a.to_bits() == b.to_bits());
            ensure!(same, "{name}: ε = 0 result differs from the unstrained circuit");
        }
    }
    let cal = StrainCalibration::default();
    let at = |e: f64, o| cal.factors(&StrainState::new(e, o).unwrap());
    let mu50 = at(0.5, Orientation::ParallelToChannelLength).2;
    let l100 = at(1.0, Orientation::ParallelToChannelLength).0;
    ensure!((mu50 - 0.67).abs() < 1e-12, "mobility multiplier at ε = 0.5: {mu50}");
    ensure!((l100 - 1.42).abs() < 1e-12, "L scale at ε = 1.0: {l100}");

    let mut worst: (f64, &str) = (0.0, "");
    for (name, text) in inverters {
        let c = fixture(text);
        let vdd = c.params["vdd"];
        let vm0 = vtc_metrics(&inverter_vtc(&c, vdd)?, "out", vdd).map_err(|e| e.to_string())?.vm;
        for o in [Orientation::ParallelToChannelLength, Orientation::PerpendicularToChannelLength] {
            for eps in [0.1, 0.2, 0.3, 0.4, 0.5] {
                let s = strained_circuit(&c, eps, o, true).map_err(|e| e.to_string())?;
                let vm = vtc_metrics(&inverter_vtc(&s, vdd)?, "out", vdd).map_err(|e| e.to_string())?.vm;
                let drift = (vm - vm0).abs() / vdd;
                if drift > worst.0 {
                    worst = (drift, name);
                }
            }
        }
    }
    ensure!(worst.0 <= 0.10, "{} VM drift {:.2}% of VDD", worst.1, worst.0 * 100.0);
    Ok(format!(
        "ε = 0 bit-exact, μ ×{mu50} at 50%, L ×{l100} at 100%, worst VM drift {:.2}% of VDD ({})",
        worst.0 * 100.0,
        worst.1
    ))
}

// ---------------------------------------------------------------- 12

fn c12_monte_carlo() -> Outcome {
    let c = fixture(fixtures::COMPLEMENTARY_INVERTER);
    let vdd = c.params["vdd"];
    let metric = |ck: &Circuit| -> otftsim::analyses::Result<f64> {
        let pts = linspace(0.0, vdd, 151);
        let w = Simulator::new(ck, &SolverConfig::default())?.sweep("vin", &pts)?;
        Ok(vtc_metrics(&w, "out", vdd)?.vm)
    };
    let pass = |vm: f64| (vm - 0.5 * vdd).abs() <= 0.06 * vdd;
    let spec = McSpec {
        count: 100,
        seed: 2024,
        vth: Some(Distribution::Normal { mean: 0.0, sigma: 0.1 }),
        mu: Some(Distribution::LogNormal { mean: 0.0, sigma: 0.2 }),
    };
    let a = monte_carlo(&c, &spec, Exec::Parallel, metric, pass).map_err(|e| e.to_string())?;
    let b = monte_carlo(&c, &spec, Exec::Sequential, metric, pass).map_err(|e| e.to_string())?;
    ensure!(a == b, "repeat run with the same seed differs");

    let zero = McSpec {
        vth: Some(Distribution::Normal { mean: 0.0, sigma: 0.0 }),
        mu: Some(Distribution::LogNormal { mean: 0.0, sigma: 0.0 }),
        count: 5,
        ..spec
    };
    let nominal = metric(&c).map_err(|e| e.to_string())?;
    let z = monte_carlo(&c, &zero, Exec::Parallel, metric, pass).map_err(|e| e.to_string())?;
    ensure!(
        z.metrics.iter().all(|m| m.map(f64::to_bits) == Some(nominal.to_bits())),
        "σ = 0 replicas differ from nominal"
    );

    // Replay oracle: rebuild each replica from its (seed, index) key.
    let devices = c.otft_count();
    let passed = (0..spec.count)
        .filter(|&i| {
            let s = replica_samples(&spec, i, devices);
            metric(&apply_samples(&c, &s)).is_ok_and(pass)
        })
        .count();
    let oracle = passed as f64 / spec.count as f64;
    ensure!(oracle == a.yield_fraction, "yield {} vs replay {oracle}", a.yield_fraction);
    ensure!(oracle > 0.0 && oracle < 1.0, "degenerate yield {oracle}; the check would be vacuous");
    Ok(format!("seeded runs identical, σ = 0 exact, yield {:.2} equals replay oracle", a.yield_fraction))
}

// ---------------------------------------------------------------- 13

fn without_lines(mut c: Circuit) -> Circuit {
    for e in &mut c.elements {
        e.line = 0;
    }
    c
}

fn c13_parser() -> Outcome {
    for (name, text) in fixtures::CIRCUITS {
        let c1 = parse(text).map_err(|e| format!("{name}: {e}"))?;
        let s1 = serialize(&c1);
        let c2 = parse(&s1).map_err(|e| format!("{name} reparse: {e}"))?;
        let s2 = serialize(&c2);
        ensure!(s1 == s2, "{name}: serialization is not a fixed point");
        ensure!(without_lines(c1) == without_lines(c2), "{name}: reparsed circuit differs");
    }
    let ro = fixture(fixtures::COMPLEMENTARY_RO);
    ensure!(ro.otft_count() == 12, "5-stage RO flattened to {} OTFTs", ro.otft_count());
    for (name, text) in fixtures::MALFORMED {
        let want = fixtures::expected_line(text).ok_or(format!("{name}: no expected line"))?;
        let r = catch_unwind(|| parse(text)).map_err(|_| format!("{name}: parser panicked"))?;
        let err = match r {
            Ok(_) => return Err(format!("{name}: parsed without diagnostics")),
            Err(e) => e,
        };
        ensure!(
            err.diagnostics.iter().any(|d| d.line == want),
            "{name}: no diagnostic on line {want}: {:?}",
            err.diagnostics.iter().map(|d| d.to_string()).collect::<Vec<_>>()
        );
    }
    Ok(format!(
        "{} circuits round-trip, RO has 12 OTFTs, {} malformed inputs diagnosed on their lines",
        fixtures::CIRCUITS.len(),
        fixtures::MALFORMED.len()
    ))
}

// ----------------------------------------------------------------

/// Written to the stderr handle directly so the lines show up even when the
/// test harness captures output.
fn report(line: String) {
    let _ = writeln!(std::io::stderr().lock(), "{line}");
}

#[test]
fn acceptance() {
    let criteria: [Check; 13] = [
        ("linear-circuit oracle", c1_linear_oracle),
        ("transient oracle", c2_transient_oracle),
        ("model derivatives and continuity", c3_model_derivatives),
        ("extraction round-trip", c4_extraction_round_trip),
        ("calibrated single device", c5_single_device),
        ("TLM", c6_tlm),
        ("inverter gains", c7_inverter_gains),
        ("VCO trend", c8_vco),
        ("neuron f-I", c9_neuron),
        ("logic", c10_logic),
        ("strain", c11_strain),
        ("Monte Carlo", c12_monte_carlo),
        ("parser", c13_parser),
    ];
    let mut failed = Vec::new();
    for (k, (name, check)) in criteria.iter().enumerate() {
        let t0 = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|_| Err("panicked".into()));
        let secs = t0.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => report(format!("PASS {:>2} {name}: {detail} [{secs:.1} s]", k + 1)),
            Err(why) => {
                report(format!("FAIL {:>2} {name}: {why} [{secs:.1} s]", k + 1));
                failed.push(k + 1);
            }
        }
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
