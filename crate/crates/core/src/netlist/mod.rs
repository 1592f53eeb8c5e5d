//! SPICE-like netlist dialect: parsing, subcircuit flattening, validation and
//! a canonical serializer.
//!
//! ```text
//! title line
//! * comment
//! R<name> n+ n- value [WIRE]
//! C<name> n+ n- value
//! V<name> n+ n- [DC] value | PULSE(v1 v2 td tr tf pw per) | SIN(vo va f [td theta])
//! I<name> n+ n- [DC] value | PULSE(...)
//! M<name> d g s model [W=..] [L=..] [STRAIN=.. DIR=PAR|PERP] [DVTH=..] [MUSCALE=..]
//! X<name> nodes... subckt [key=value ...]
//! .model name OTFT(P|N) key=value ...
//! .subckt name ports... [key=value ...] / .ends
//! .param name=value ...
//! .op | .dc src start stop step [src2 start2 stop2 step2] | .tran step stop [maxstep]
//! .mc count [seed=n] [vth=normal(mean,sigma)] [mu=lognormal(mean,sigma)]
//! .ic v(node)=value ...
//! .end
//! ```
//!
//! Keywords and names are case-insensitive and stored lowercase. Values take
//! engineering suffixes (f p n u m k meg g t) and `{name}` parameter
//! references.

mod lexer;
mod parser;
mod serialize;
mod validate;

use std::collections::{BTreeMap, HashMap};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::model::{OtftParams, StrainState};

pub use lexer::parse_number;
pub use parser::parse;
pub use serialize::{format_model_card, serialize};
pub use validate::validate;

pub type NodeId = usize;

pub const GROUND: NodeId = 0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Severity {
    Error,
    Warning,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DiagnosticKind {
    UnknownCard,
    Arity,
    UndefinedModel,
    UndefinedSubckt,
    UndefinedParam,
    DuplicateElement,
    MalformedNumber,
    Syntax,
    Floating,
    UnusedModel,
    InvalidValue,
    UnknownSource,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Diagnostic {
    pub severity: Severity,
    pub kind: DiagnosticKind,
    /// 1-based line, 0 when not tied to a source line.
    pub line: usize,
    /// 1-based column.
    pub column: usize,
    pub message: String,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sev = match self.severity {
            Severity::Error => "error",
            Severity::Warning => "warning",
        };
        write!(f, "{}:{}: {sev}: {}", self.line, self.column, self.message)
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("{}", format_diagnostics(.diagnostics))]
pub struct ParseError {
    pub diagnostics: Vec<Diagnostic>,
}

fn format_diagnostics(d: &[Diagnostic]) -> String {
    d.iter().map(|d| d.to_string()).collect::<Vec<_>>().join("\n")
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum SourceWave {
    Dc(f64),
    Pulse { v1: f64, v2: f64, delay: f64, rise: f64, fall: f64, width: f64, period: f64 },
    Sin { offset: f64, amplitude: f64, freq: f64, delay: f64, damping: f64 },
}

impl SourceWave {
    /// Value at `t`; the DC operating point uses `t = 0`.
    pub fn value_at(&self, t: f64) -> f64 {
        match *self {
            SourceWave::Dc(v) => v,
            SourceWave::Pulse { v1, v2, delay, rise, fall, width, period } => {
                if t < delay {
                    return v1;
                }
                let mut tau = t - delay;
                if period > 0.0 {
                    tau %= period;
                }
                if tau < rise {
                    v1 + (v2 - v1) * tau / rise
                } else if tau < rise + width {
                    v2
                } else if tau < rise + width + fall {
                    v2 + (v1 - v2) * (tau - rise - width) / fall
                } else {
                    v1
                }
            }
            SourceWave::Sin { offset, amplitude, freq, delay, damping } => {
                if t < delay {
                    offset
                } else {
                    let tau = t - delay;
                    offset + amplitude * (-tau * damping).exp() * (2.0 * std::f64::consts::PI * freq * tau).sin()
                }
            }
        }
    }

    pub fn dc_value(&self) -> f64 {
        self.value_at(0.0)
    }

    /// Corner times in `[0, stop]` where the waveform's slope changes.
    pub fn breakpoints(&self, stop: f64) -> Vec<f64> {
        match *self {
            SourceWave::Pulse { delay, rise, fall, width, period, .. } => {
                let mut out = Vec::new();
                let mut base = delay;
                loop {
                    for off in [0.0, rise, rise + width, rise + width + fall] {
                        let t = base + off;
                        if t <= stop {
                            out.push(t);
                        }
                    }
                    if period <= 0.0 || base + period > stop {
                        break;
                    }
                    base += period;
                }
                out
            }
            SourceWave::Sin { delay, .. } if delay > 0.0 && delay <= stop => vec![delay],
            _ => Vec::new(),
        }
    }

    /// Same waveform with all levels multiplied by `k` (source stepping).
    pub fn scaled(&self, k: f64) -> SourceWave {
        match *self {
            SourceWave::Dc(v) => SourceWave::Dc(v * k),
            SourceWave::Pulse { v1, v2, delay, rise, fall, width, period } => {
                SourceWave::Pulse { v1: v1 * k, v2: v2 * k, delay, rise, fall, width, period }
            }
            SourceWave::Sin { offset, amplitude, freq, delay, damping } => {
                SourceWave::Sin { offset: offset * k, amplitude: amplitude * k, freq, delay, damping }
            }
        }
    }
}

/// Per-instance deviations applied on top of the bound model card.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct OtftOverrides {
    pub w: Option<f64>,
    pub l: Option<f64>,
    pub strain: Option<StrainState>,
    /// Additive threshold shift, V.
    pub dvth: f64,
    /// Multiplicative mobility factor; `None` means 1.
    pub mu_scale: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum ElementKind {
    Resistor { r: f64, wire: bool },
    Capacitor { c: f64 },
    VSource { wave: SourceWave },
    ISource { wave: SourceWave },
    Otft { model: String, overrides: OtftOverrides },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Element {
    pub name: String,
    pub kind: ElementKind,
    /// Terminals in card order: (n+, n-) or (d, g, s).
    pub nodes: Vec<NodeId>,
    /// Source line of the card (top-level line for flattened instances).
    pub line: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub start: f64,
    pub stop: f64,
    pub step: f64,
}

impl SweepSpec {
    /// Sweep points from start to stop inclusive, stepping toward stop.
    pub fn points(&self) -> Vec<f64> {
        if self.start == self.stop {
            return vec![self.start];
        }
        let span = self.stop - self.start;
        let n = (span.abs() / self.step + 1e-9).floor() as usize;
        let dir = span.signum();
        let mut pts: Vec<f64> = (0..=n).map(|k| self.start + dir * self.step * k as f64).collect();
        if (pts[n] - self.stop).abs() > 1e-9 * self.step {
            pts.push(self.stop);
        }
        pts
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Distribution {
    Normal { mean: f64, sigma: f64 },
    LogNormal { mean: f64, sigma: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum AnalysisDirective {
    DcOp,
    DcSweep {
        source: String,
        sweep: SweepSpec,
        secondary: Option<(String, SweepSpec)>,
    },
    Tran {
        step: f64,
        stop: f64,
        max_step: Option<f64>,
    },
    Mc {
        count: usize,
        seed: u64,
        /// Additive threshold deviation.
        vth: Option<Distribution>,
        /// Multiplicative mobility factor (log-normal in ln space).
        mu: Option<Distribution>,
    },
}

/// A flattened circuit ready for elaboration.
#[derive(Debug, Clone, PartialEq)]
pub struct Circuit {
    pub title: String,
    nodes: Vec<String>,
    node_index: HashMap<String, NodeId>,
    pub elements: Vec<Element>,
    pub models: BTreeMap<String, OtftParams>,
    pub analyses: Vec<AnalysisDirective>,
    pub params: BTreeMap<String, f64>,
    /// `.ic` node voltages applied to the transient starting point.
    pub initial_conditions: Vec<(NodeId, f64)>,
}

impl Circuit {
    pub fn new(title: impl Into<String>) -> Self {
        let mut c = Self {
            title: title.into(),
            nodes: Vec::new(),
            node_index: HashMap::new(),
            elements: Vec::new(),
            models: BTreeMap::new(),
            analyses: Vec::new(),
            params: BTreeMap::new(),
            initial_conditions: Vec::new(),
        };
        c.node("0");
        c
    }

    /// Index for `name`, creating the node if needed. `0` and `gnd` are ground.
    pub fn node(&mut self, name: &str) -> NodeId {
        let key = canonical_node(name);
        if let Some(&id) = self.node_index.get(&key) {
            return id;
        }
        let id = self.nodes.len();
        self.node_index.insert(key.clone(), id);
        self.nodes.push(key);
        id
    }

    pub fn node_id(&self, name: &str) -> Option<NodeId> {
        self.node_index.get(&canonical_node(name)).copied()
    }

    pub fn node_name(&self, id: NodeId) -> &str {
        &self.nodes[id]
    }

    pub fn node_names(&self) -> &[String] {
        &self.nodes
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn element(&self, name: &str) -> Option<&Element> {
        let key = name.to_ascii_lowercase();
        self.elements.iter().find(|e| e.name == key)
    }

    pub fn element_mut(&mut self, name: &str) -> Option<&mut Element> {
        let key = name.to_ascii_lowercase();
        self.elements.iter_mut().find(|e| e.name == key)
    }

    pub fn otft_count(&self) -> usize {
        self.elements.iter().filter(|e| matches!(e.kind, ElementKind::Otft { .. })).count()
    }

    /// Sets the DC level of an independent source, replacing its waveform.
    pub fn set_source_dc(&mut self, name: &str, value: f64) -> Option<()> {
        match &mut self.element_mut(name)?.kind {
            ElementKind::VSource { wave } | ElementKind::ISource { wave } => {
                *wave = SourceWave::Dc(value);
                Some(())
            }
            _ => None,
        }
    }

    /// Fully resolved parameters for an OTFT element (card + overrides +
    /// strain), using `cal` for the strain transform.
    pub fn resolve_otft(&self, e: &Element, cal: &crate::model::StrainCalibration) -> crate::model::Result<OtftParams> {
        let ElementKind::Otft { model, overrides } = &e.kind else {
            return Err(crate::model::ModelError::InvalidParams(format!("{} is not an OTFT", e.name)));
        };
        let card = self
            .models
            .get(model)
            .ok_or_else(|| crate::model::ModelError::InvalidParams(format!("undefined model {model}")))?;
        let mut p = *card;
        if let Some(w) = overrides.w {
            // Contact resistance is fixed per unit width.
            p.rc *= p.geom.w / w;
            p.geom.w = w;
        }
        if let Some(l) = overrides.l {
            p.geom.l = l;
        }
        p.vth += overrides.dvth;
        if let Some(k) = overrides.mu_scale {
            p.mu0 *= k;
        }
        p.validate()?;
        match &overrides.strain {
            Some(s) => cal.apply(&p, s),
            None => Ok(p),
        }
    }
}

fn canonical_node(name: &str) -> String {
    let lower = name.to_ascii_lowercase();
    if lower == "gnd" {
        "0".to_string()
    } else {
        lower
    }
}
