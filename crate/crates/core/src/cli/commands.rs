use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::analyses::{monte_carlo, oscillation_frequency, McSpec};
use crate::engine::{dc_operating_point, dc_sweep, transient, Simulator};
use crate::extract::{
    batch_statistics, extract_report, extract_saturation_mobility, fit_model, read_measurements, ExtractError,
    ExtractionReport, FixedParams, IvSweep, SweepKind,
};
use crate::netlist::{format_model_card, parse, validate, AnalysisDirective, Severity};

use super::artifacts::safe_name;
use super::{ArtifactSet, CliError, RunConfig};

fn read_input(path: &Path) -> Result<Vec<u8>, CliError> {
    std::fs::read(path).map_err(|e| CliError::Input { path: path.display().to_string(), message: e.to_string() })
}

/// All sweeps of all files, grouped by device in order of first appearance.
fn load_devices(paths: &[PathBuf], set: &mut ArtifactSet) -> Result<Vec<(String, Vec<IvSweep>)>, CliError> {
    let mut devices: Vec<(String, Vec<IvSweep>)> = Vec::new();
    for path in paths {
        let bytes = read_input(path)?;
        set.input(path, &bytes);
        let sweeps = read_measurements(&bytes[..])
            .map_err(|e| CliError::Input { path: path.display().to_string(), message: e.to_string() })?;
        for s in sweeps {
            match devices.iter_mut().find(|(id, _)| *id == s.device_id) {
                Some((_, v)) => v.push(s),
                None => devices.push((s.device_id.clone(), vec![s])),
            }
        }
    }
    Ok(devices)
}

/// The transfer sweep taken deepest into saturation.
fn main_transfer(sweeps: &[IvSweep]) -> Option<&IvSweep> {
    sweeps
        .iter()
        .filter(|s| s.kind == SweepKind::Transfer)
        .max_by(|a, b| a.fixed_bias.abs().total_cmp(&b.fixed_bias.abs()))
}

fn path_args(paths: &[PathBuf]) -> Vec<String> {
    paths.iter().map(|p| p.display().to_string()).collect()
}

#[derive(Serialize)]
struct ReportRow<'a> {
    device_id: &'a str,
    polarity: &'a str,
    mu_sat: f64,
    vth: f64,
    ss: f64,
    on_off: f64,
    gm_max_per_width: f64,
    fit_lo: f64,
    fit_hi: f64,
    r2: f64,
}

fn reports_csv(reports: &[ExtractionReport]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in reports {
        let polarity = match r.polarity {
            crate::model::Polarity::P => "P",
            crate::model::Polarity::N => "N",
        };
        w.serialize(ReportRow {
            device_id: &r.device_id,
            polarity,
            mu_sat: r.mu_sat,
            vth: r.vth,
            ss: r.ss,
            on_off: r.on_off,
            gm_max_per_width: r.gm_max_per_width,
            fit_lo: r.fit_window.0,
            fit_hi: r.fit_window.1,
            r2: r.r2,
        })
        .expect("in-memory csv");
    }
    String::from_utf8(w.into_inner().expect("in-memory csv")).expect("utf-8 csv")
}

pub(super) fn extract(paths: &[PathBuf], bins: usize, cfg: &RunConfig) -> Result<ArtifactSet, CliError> {
    if bins == 0 {
        return Err(CliError::Usage("--bins must be >= 1".into()));
    }
    let mut set = ArtifactSet::new("extract", path_args(paths), cfg.seed.unwrap_or(0));
    let devices = load_devices(paths, &mut set)?;
    let mut reports = Vec::new();
    let mut failures: Vec<(String, String)> = Vec::new();
    for (id, sweeps) in &devices {
        let r = main_transfer(sweeps)
            .ok_or_else(|| ExtractError::Precondition("no transfer sweep".into()))
            .and_then(extract_report);
        match r {
            Ok(r) => reports.push(r),
            Err(e) => failures.push((id.clone(), e.to_string())),
        }
    }
    cfg.note(format!("extracted {} of {} devices", reports.len(), devices.len()));
    set.csv("reports.csv", reports_csv(&reports));
    set.json("reports.json", &reports);
    if !reports.is_empty() {
        let summary = batch_statistics(&reports, bins)?;
        let mut hist = String::from("metric,lo,hi,count\n");
        for (name, m) in &summary.metrics {
            for (k, c) in m.histogram.counts.iter().enumerate() {
                let (lo, hi) = (m.histogram.edges[k], m.histogram.edges[k + 1]);
                writeln!(hist, "{name},{lo},{hi},{c}").unwrap();
            }
        }
        set.json("summary.json", &summary);
        set.csv("histograms.csv", hist);
    }
    if !failures.is_empty() {
        let mut text = String::from("device_id,error\n");
        for (id, e) in &failures {
            writeln!(text, "{id},\"{}\"", e.replace('"', "'")).unwrap();
        }
        set.csv("failures.csv", text);
        let list: Vec<String> = failures.iter().map(|(id, e)| format!("  {id}: {e}")).collect();
        set.fail_after_write(CliError::Failed(format!(
            "{} of {} devices failed extraction:\n{}",
            failures.len(),
            devices.len(),
            list.join("\n")
        )));
    }
    Ok(set)
}

#[derive(Serialize)]
struct FitSummary<'a> {
    device_id: &'a str,
    model: String,
    vth_fixed: bool,
    report: &'a crate::extract::FitReport,
}

pub(super) fn fit(
    paths: &[PathBuf],
    vth: Option<f64>,
    free_vth: bool,
    cfg: &RunConfig,
) -> Result<ArtifactSet, CliError> {
    let mut args = path_args(paths);
    if let Some(v) = vth {
        args.push(format!("--vth={v}"));
    }
    if free_vth {
        args.push("--free-vth".into());
    }
    let mut set = ArtifactSet::new("fit", args, cfg.seed.unwrap_or(0));
    let devices = load_devices(paths, &mut set)?;
    let mut fits = Vec::new();
    for (id, sweeps) in &devices {
        let precondition = |m: String| CliError::Input { path: format!("device {id}"), message: m };
        let transfer = main_transfer(sweeps).ok_or_else(|| precondition("no transfer sweep".into()))?;
        if !sweeps.iter().any(|s| s.kind == SweepKind::Output) {
            return Err(precondition("fitting needs at least one output sweep".into()));
        }
        let fixed_vth = match (vth, free_vth) {
            (Some(v), _) => Some(v),
            (None, true) => None,
            (None, false) => Some(
                extract_saturation_mobility(transfer).map_err(|e| CliError::Failed(format!("device {id}: {e}")))?.vth,
            ),
        };
        let fixed = FixedParams { geom: transfer.geom, cox: transfer.cox, vth: fixed_vth };
        let report = fit_model(sweeps, &fixed).map_err(|e| match e {
            ExtractError::Precondition(m) => precondition(m),
            other => CliError::Failed(format!("device {id}: {other}")),
        })?;
        cfg.note(format!("{id}: relative rms {:.4} after {} iterations", report.relative_rms, report.iterations));
        fits.push((id.clone(), report, fixed_vth.is_some()));
    }
    let mut summaries = Vec::new();
    for (id, report, vth_fixed) in &fits {
        let model = safe_name(id).to_ascii_lowercase();
        let card = format!(
            "* {id}: fitted card, relative rms {:.3e}\n{}\n",
            report.relative_rms,
            format_model_card(&model, &report.params)
        );
        set.push(format!("{model}.model"), card.into_bytes(), None);
        summaries.push(FitSummary { device_id: id, model, vth_fixed: *vth_fixed, report });
    }
    set.json("fits.json", &summaries);
    Ok(set)
}

fn format_row(values: &[f64]) -> String {
    values.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(",")
}

pub(super) fn sim(path: &Path, probe: &str, cfg: &RunConfig) -> Result<ArtifactSet, CliError> {
    let bytes = read_input(path)?;
    let shown = path.display().to_string();
    let text = String::from_utf8(bytes.clone())
        .map_err(|_| CliError::Input { path: shown.clone(), message: "netlist is not UTF-8".into() })?;
    let c = parse(&text).map_err(|e| CliError::Netlist { path: shown.clone(), diagnostics: e.diagnostics })?;
    let diags = validate(&c);
    let (errors, warnings): (Vec<_>, Vec<_>) = diags.into_iter().partition(|d| d.severity == Severity::Error);
    for w in &warnings {
        eprintln!("{shown}:{w}");
    }
    if !errors.is_empty() {
        return Err(CliError::Netlist { path: shown, diagnostics: errors });
    }
    if c.analyses.is_empty() {
        return Err(CliError::Input { path: shown, message: "no analysis directives".into() });
    }

    let mc_seed = c.analyses.iter().find_map(|a| match a {
        AnalysisDirective::Mc { seed, .. } => Some(*seed),
        _ => None,
    });
    let seed = cfg.seed.or(mc_seed).unwrap_or(0);
    let mut set = ArtifactSet::new("sim", vec![shown.clone(), format!("--probe={probe}")], seed);
    set.input(path, &bytes);

    for (k, d) in c.analyses.iter().enumerate() {
        let n = k + 1;
        match d {
            AnalysisDirective::DcOp => {
                cfg.note(format!("{n}: operating point"));
                let op = dc_operating_point(&c, &cfg.solver)?;
                set.csv(format!("{n:02}_op.csv"), format!("{}\n{}\n", op.names.join(","), format_row(&op.values)));
            }
            AnalysisDirective::DcSweep { .. } => {
                cfg.note(format!("{n}: dc sweep"));
                let ws = dc_sweep(&c, d, &cfg.solver)?;
                let single = ws.len() == 1;
                for (j, w) in ws.iter().enumerate() {
                    let stem = if single { format!("{n:02}_dc") } else { format!("{n:02}_dc_{j}") };
                    set.waveform(&stem, w);
                }
            }
            AnalysisDirective::Tran { .. } => {
                cfg.note(format!("{n}: transient"));
                let w = transient(&c, d, &cfg.solver)?;
                set.waveform(&format!("{n:02}_tran"), &w);
                if w.voltage(probe).is_some() {
                    set.json(format!("{n:02}_tran_oscillation.json"), &oscillation_frequency(&w, probe)?);
                }
            }
            AnalysisDirective::Mc { count, vth, mu, .. } => {
                cfg.note(format!("{n}: monte carlo, {count} replicas"));
                let spec = McSpec { count: *count, seed, vth: *vth, mu: *mu };
                let node = probe.to_string();
                let solver = cfg.solver;
                let r = monte_carlo(
                    &c,
                    &spec,
                    cfg.exec,
                    |ck| {
                        let op = Simulator::new(ck, &solver)?.operating_point()?;
                        op.voltage(&node).ok_or_else(|| crate::analyses::AnalysisError::MissingColumn(node.clone()))
                    },
                    |_| true,
                )?;
                let devices = c.otft_count();
                let mut text = String::from("replica,metric,passed");
                for j in 0..devices {
                    write!(text, ",dvth_{j},mu_scale_{j}").unwrap();
                }
                text.push('\n');
                for (i, s) in r.samples.iter().enumerate() {
                    let m = r.metrics[i].map(|v| v.to_string()).unwrap_or_else(|| "nan".into());
                    write!(text, "{i},{m},{}", r.passed[i]).unwrap();
                    for j in 0..devices {
                        write!(text, ",{},{}", s.dvth[j], s.mu_scale[j]).unwrap();
                    }
                    text.push('\n');
                }
                set.csv(format!("{n:02}_mc.csv"), text);
                set.json(
                    format!("{n:02}_mc.json"),
                    &serde_json::json!({ "count": count, "seed": seed, "probe": probe, "yield": r.yield_fraction }),
                );
            }
        }
    }
    Ok(set)
}
