//! Figure-analogue datasets regenerated from the bundled fixtures.

use std::fmt::Write as _;

use serde::Serialize;

use crate::analyses::{
    gain_curve, logic_truth_table, neuron_fi_curve, strain_study, vco_curve, vtc_metrics, LogicThresholds,
    SpikeOptions, Supply, TranSettings, VtcMetrics,
};
use crate::engine::{Simulator, SolverConfig, Waveform};
use crate::fixtures;
use crate::model::Orientation;
use crate::netlist::{parse, AnalysisDirective, Circuit};

use super::{ArtifactSet, CliError, RunConfig};

pub const FIGURE_IDS: &[&str] = &["fig4f", "fig4h", "fig5d", "fig5e", "fig5g", "fig5m", "supp9", "supp10"];

/// Supply values of the pseudo-E oscillator sweeps, V.
const RO_VDDS: [f64; 10] = [3.0, 6.0, 9.0, 12.0, 15.0, 18.0, 21.0, 24.0, 27.0, 30.0];
/// Complementary inverter supplies, V.
const CMOS_VDDS: [f64; 3] = [3.0, 5.0, 7.0];
/// Complementary ring supplies, V.
const CRO_VDDS: [f64; 4] = [30.0, 40.0, 50.0, 60.0];
/// Neuron input currents, A.
const NEURON_CURRENTS: [f64; 7] = [0.0, 9e-9, 20e-9, 50e-9, 100e-9, 200e-9, 500e-9];
/// Points per inverter input sweep.
const VTC_POINTS: usize = 600;

fn fixture(text: &str) -> Circuit {
    parse(text).expect("bundled fixture parses")
}

fn tran_of(c: &Circuit) -> TranSettings {
    c.analyses
        .iter()
        .find_map(|a| match *a {
            AnalysisDirective::Tran { step, stop, max_step } => Some(TranSettings { step, stop, max_step }),
            _ => None,
        })
        .expect("fixture has a .tran directive")
}

/// Ring oscillators run at a looser truncation tolerance unless the user set one.
fn ring_solver(cfg: &RunConfig) -> SolverConfig {
    let mut s = cfg.solver;
    if !cfg.overrides.iter().any(|(k, _)| k.trim_start_matches("transient.") == "lte_tol") {
        s.transient.lte_tol = 1e-3;
    }
    s
}

fn pseudo_e_supply() -> Supply {
    Supply { sources: vec![("vdd".into(), 1.0), ("vss".into(), -1.0)] }
}

fn input_points(vdd: f64) -> Vec<f64> {
    (0..=VTC_POINTS).map(|k| vdd * k as f64 / VTC_POINTS as f64).collect()
}

/// Input sweep of an inverter with its supply set to `vdd` (and VSS to
/// `-vdd` when `split`).
fn vtc(c: &Circuit, vdd: f64, split: bool, solver: &SolverConfig) -> crate::analyses::Result<Waveform> {
    let mut ck = c.clone();
    let supply = if split { pseudo_e_supply() } else { Supply::single("vdd") };
    supply.apply(&mut ck, vdd)?;
    Ok(Simulator::new(&ck, solver)?.sweep("vin", &input_points(vdd))?)
}

#[derive(Serialize)]
struct StrainedVtc {
    vdd: f64,
    strain: f64,
    metrics: VtcMetrics,
}

fn fig4f(cfg: &RunConfig, set: &mut ArtifactSet) -> Result<(), CliError> {
    let c = fixture(fixtures::PSEUDO_E_INVERTER);
    let vdd = 30.0;
    let strains = [0.0, 0.5, 1.0];
    let runs = strain_study(&c, &strains, Orientation::ParallelToChannelLength, true, cfg.exec, |ck| {
        vtc(ck, vdd, true, &cfg.solver)
    })?;
    let mut text = String::from("vin");
    for (eps, _) in &runs {
        write!(text, ",vout_strain_{eps}").unwrap();
    }
    text.push('\n');
    let vin = runs[0].1.axis();
    for (k, v) in vin.iter().enumerate() {
        write!(text, "{v}").unwrap();
        for (_, w) in &runs {
            write!(text, ",{}", w.voltage("out").expect("output node")[k]).unwrap();
        }
        text.push('\n');
    }
    let metrics = runs
        .iter()
        .map(|(eps, w)| Ok(StrainedVtc { vdd, strain: *eps, metrics: vtc_metrics(w, "out", vdd)? }))
        .collect::<crate::analyses::Result<Vec<_>>>()?;
    set.csv("fig4f.csv", text);
    set.json("fig4f_metrics.json", &metrics);
    Ok(())
}

fn ro_table(c: &Circuit, cfg: &RunConfig) -> crate::analyses::Result<Vec<crate::analyses::VcoPoint>> {
    vco_curve(c, &pseudo_e_supply(), &RO_VDDS, "out", &tran_of(c), &ring_solver(cfg), cfg.exec)
}

fn fig4h(cfg: &RunConfig, set: &mut ArtifactSet) -> Result<(), CliError> {
    let w20 = ro_table(&fixture(fixtures::PSEUDO_E_RO_W20), cfg)?;
    let w10 = ro_table(&fixture(fixtures::PSEUDO_E_RO_W10), cfg)?;
    let mut text = String::from("vdd,frequency_ratio20,frequency_ratio10\n");
    for (a, b) in w20.iter().zip(&w10) {
        writeln!(text, "{},{},{}", a.vdd, a.frequency, b.frequency).unwrap();
    }
    set.csv("fig4h.csv", text);
    Ok(())
}

fn supp9(cfg: &RunConfig, set: &mut ArtifactSet) -> Result<(), CliError> {
    let pts = ro_table(&fixture(fixtures::PSEUDO_E_RO_W20), cfg)?;
    let mut text = String::from("vdd,frequency,amplitude,settled\n");
    for p in &pts {
        writeln!(text, "{},{},{},{}", p.vdd, p.frequency, p.result.amplitude, p.result.settled).unwrap();
    }
    set.csv("supp9.csv", text);
    set.json("supp9.json", &pts);
    Ok(())
}

fn fig5d(cfg: &RunConfig, set: &mut ArtifactSet) -> Result<(), CliError> {
    let c = fixture(fixtures::COMPLEMENTARY_INVERTER);
    let strains = [0.0, 0.25, 0.5];
    let mut text = String::from("vdd,strain,vin,vout\n");
    let mut metrics = Vec::new();
    for vdd in CMOS_VDDS {
        let runs = strain_study(&c, &strains, Orientation::ParallelToChannelLength, true, cfg.exec, |ck| {
            vtc(ck, vdd, false, &cfg.solver)
        })?;
        for (eps, w) in &runs {
            let out = w.voltage("out").expect("output node");
            for (vin, vout) in w.axis().iter().zip(out) {
                writeln!(text, "{vdd},{eps},{vin},{vout}").unwrap();
            }
            metrics.push(StrainedVtc { vdd, strain: *eps, metrics: vtc_metrics(w, "out", vdd)? });
        }
    }
    set.csv("fig5d.csv", text);
    set.json("fig5d_metrics.json", &metrics);
    Ok(())
}

fn fig5e(cfg: &RunConfig, set: &mut ArtifactSet) -> Result<(), CliError> {
    let c = fixture(fixtures::COMPLEMENTARY_INVERTER);
    let mut text = String::from("vdd,vin,vout,gain\n");
    for vdd in CMOS_VDDS {
        let w = vtc(&c, vdd, false, &cfg.solver)?;
        let out = w.voltage("out").expect("output node");
        let gain = gain_curve(w.axis(), out);
        for k in 0..w.len() {
            writeln!(text, "{vdd},{},{},{}", w.axis()[k], out[k], gain[k]).unwrap();
        }
    }
    set.csv("fig5e.csv", text);
    Ok(())
}

fn fig5g(cfg: &RunConfig, set: &mut ArtifactSet) -> Result<(), CliError> {
    let c = fixture(fixtures::COMPLEMENTARY_RO);
    let tran = tran_of(&c);
    let solver = ring_solver(cfg);
    let strains = [0.0, 0.25];
    let runs = strain_study(&c, &strains, Orientation::ParallelToChannelLength, true, cfg.exec, |ck| {
        vco_curve(ck, &Supply::single("vdd"), &CRO_VDDS, "out", &tran, &solver, cfg.exec)
    })?;
    let mut text = String::from("vdd,frequency_strain_0,frequency_strain_0.25\n");
    for (k, vdd) in CRO_VDDS.iter().enumerate() {
        writeln!(text, "{vdd},{},{}", runs[0].1[k].frequency, runs[1].1[k].frequency).unwrap();
    }
    set.csv("fig5g.csv", text);
    Ok(())
}

fn fig5m(cfg: &RunConfig, set: &mut ArtifactSet) -> Result<(), CliError> {
    let c = fixture(fixtures::NEURON);
    let pts = neuron_fi_curve(
        &c,
        "iex",
        &NEURON_CURRENTS,
        "vm",
        &tran_of(&c),
        &SpikeOptions::for_supply(5.0),
        &cfg.solver,
        cfg.exec,
    )?;
    let mut text = String::from("iex_na,rate_hz,spikes,isi_std\n");
    for p in &pts {
        let std = p.train.isi_std.map(|v| v.to_string()).unwrap_or_default();
        writeln!(text, "{},{},{},{std}", p.iex * 1e9, p.train.rate, p.train.times.len()).unwrap();
    }
    set.csv("fig5m.csv", text);
    Ok(())
}

fn supp10(cfg: &RunConfig, set: &mut ArtifactSet) -> Result<(), CliError> {
    let mut text = String::from("gate,a,b,vout,out\n");
    for (gate, src) in [("nand", fixtures::NAND), ("nor", fixtures::NOR)] {
        let t = logic_truth_table(&fixture(src), &["va", "vb"], "out", 5.0, &LogicThresholds::default(), &cfg.solver)?;
        for r in &t.rows {
            let bit = |b: bool| u8::from(b);
            writeln!(text, "{gate},{},{},{},{}", bit(r.inputs[0]), bit(r.inputs[1]), r.vout, bit(r.output)).unwrap();
        }
    }
    set.csv("supp10.csv", text);
    Ok(())
}

pub(super) fn reproduce(id: &str, cfg: &RunConfig) -> Result<ArtifactSet, CliError> {
    let key = id.to_ascii_lowercase();
    let mut set = ArtifactSet::new("reproduce", vec![key.clone()], cfg.seed.unwrap_or(0));
    let run = match key.as_str() {
        "fig4f" => fig4f,
        "fig4h" => fig4h,
        "fig5d" => fig5d,
        "fig5e" => fig5e,
        "fig5g" => fig5g,
        "fig5m" => fig5m,
        "supp9" => supp9,
        "supp10" => supp10,
        _ => {
            return Err(CliError::Usage(format!("unknown figure id '{id}'; valid ids: {}", FIGURE_IDS.join(", "))));
        }
    };
    cfg.note(format!("reproducing {key}"));
    run(cfg, &mut set)?;
    Ok(set)
}
