use std::fmt::Write;

use crate::model::{Orientation, OtftParams, Polarity};

use super::{AnalysisDirective, Circuit, Distribution, ElementKind, SourceWave, SweepSpec};

/// Shortest round-trip representation.
fn num(v: f64) -> String {
    format!("{v:?}")
}

/// `.model` card for a parameter set; the output is accepted by [`super::parse`].
pub fn format_model_card(name: &str, p: &OtftParams) -> String {
    let pol = match p.polarity {
        Polarity::P => "P",
        Polarity::N => "N",
    };
    format!(
        ".model {name} OTFT({pol}) mu0={} vth={} ss={} lambda={} gamma={} rc={} cox={} w={} l={} lov={} m={}",
        num(p.mu0),
        num(p.vth),
        num(p.ss),
        num(p.lambda),
        num(p.gamma),
        num(p.rc),
        num(p.cox),
        num(p.geom.w),
        num(p.geom.l),
        num(p.geom.lov),
        num(p.triode_order),
    )
}

fn wave(w: &SourceWave) -> String {
    match *w {
        SourceWave::Dc(v) => format!("DC {}", num(v)),
        SourceWave::Pulse { v1, v2, delay, rise, fall, width, period } => format!(
            "PULSE({} {} {} {} {} {} {})",
            num(v1),
            num(v2),
            num(delay),
            num(rise),
            num(fall),
            num(width),
            num(period)
        ),
        SourceWave::Sin { offset, amplitude, freq, delay, damping } => {
            format!("SIN({} {} {} {} {})", num(offset), num(amplitude), num(freq), num(delay), num(damping))
        }
    }
}

fn sweep(src: &str, s: &SweepSpec) -> String {
    format!("{src} {} {} {}", num(s.start), num(s.stop), num(s.step))
}

fn dist(d: &Distribution) -> String {
    match *d {
        Distribution::Normal { mean, sigma } => format!("normal({},{})", num(mean), num(sigma)),
        Distribution::LogNormal { mean, sigma } => format!("lognormal({},{})", num(mean), num(sigma)),
    }
}

/// Canonical flat netlist: models, elements, directives and initial
/// conditions with every value written in round-trip precision.
pub fn serialize(c: &Circuit) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{}", c.title);
    for (k, v) in &c.params {
        let _ = writeln!(out, ".param {k}={}", num(*v));
    }
    for (name, p) in &c.models {
        let _ = writeln!(out, "{}", format_model_card(name, p));
    }
    for e in &c.elements {
        let nodes: Vec<&str> = e.nodes.iter().map(|&n| c.node_name(n)).collect();
        let nodes = nodes.join(" ");
        let line = match &e.kind {
            ElementKind::Resistor { r, wire } => {
                format!("{} {nodes} {}{}", e.name, num(*r), if *wire { " WIRE" } else { "" })
            }
            ElementKind::Capacitor { c } => format!("{} {nodes} {}", e.name, num(*c)),
            ElementKind::VSource { wave: w } | ElementKind::ISource { wave: w } => {
                format!("{} {nodes} {}", e.name, wave(w))
            }
            ElementKind::Otft { model, overrides: o } => {
                let mut s = format!("{} {nodes} {model}", e.name);
                if let Some(w) = o.w {
                    let _ = write!(s, " W={}", num(w));
                }
                if let Some(l) = o.l {
                    let _ = write!(s, " L={}", num(l));
                }
                if let Some(st) = o.strain {
                    let dir = match st.orientation {
                        Orientation::ParallelToChannelLength => "PAR",
                        Orientation::PerpendicularToChannelLength => "PERP",
                    };
                    let _ = write!(s, " STRAIN={} DIR={dir}", num(st.epsilon));
                }
                if o.dvth != 0.0 {
                    let _ = write!(s, " DVTH={}", num(o.dvth));
                }
                if let Some(k) = o.mu_scale {
                    let _ = write!(s, " MUSCALE={}", num(k));
                }
                s
            }
        };
        let _ = writeln!(out, "{line}");
    }
    for a in &c.analyses {
        let line = match a {
            AnalysisDirective::DcOp => ".op".to_string(),
            AnalysisDirective::DcSweep { source, sweep: s, secondary } => {
                let mut l = format!(".dc {}", sweep(source, s));
                if let Some((src2, s2)) = secondary {
                    let _ = write!(l, " {}", sweep(src2, s2));
                }
                l
            }
            AnalysisDirective::Tran { step, stop, max_step } => match max_step {
                Some(m) => format!(".tran {} {} {}", num(*step), num(*stop), num(*m)),
                None => format!(".tran {} {}", num(*step), num(*stop)),
            },
            AnalysisDirective::Mc { count, seed, vth, mu } => {
                let mut l = format!(".mc {count} seed={seed}");
                if let Some(d) = vth {
                    let _ = write!(l, " vth={}", dist(d));
                }
                if let Some(d) = mu {
                    let _ = write!(l, " mu={}", dist(d));
                }
                l
            }
        };
        let _ = writeln!(out, "{line}");
    }
    for (node, v) in &c.initial_conditions {
        let _ = writeln!(out, ".ic v({})={}", c.node_name(*node), num(*v));
    }
    out.push_str(".end\n");
    out
}
