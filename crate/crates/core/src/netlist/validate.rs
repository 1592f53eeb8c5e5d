use std::collections::BTreeSet;

use crate::model::StrainCalibration;

use super::{Circuit, Diagnostic, DiagnosticKind, ElementKind, Severity, SourceWave, GROUND};

struct DisjointSet {
    parent: Vec<usize>,
}

impl DisjointSet {
    fn new(n: usize) -> Self {
        Self { parent: (0..n).collect() }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            self.parent[ra] = rb;
        }
    }
}

fn problem(severity: Severity, kind: DiagnosticKind, line: usize, message: String) -> Diagnostic {
    Diagnostic { severity, kind, line, column: 1, message }
}

fn wave_is_finite(w: &SourceWave) -> bool {
    match *w {
        SourceWave::Dc(v) => v.is_finite(),
        SourceWave::Pulse { v1, v2, delay, rise, fall, width, period } => {
            [v1, v2, delay, rise, fall, width, period].iter().all(|x| x.is_finite())
                && rise > 0.0
                && fall > 0.0
                && delay >= 0.0
                && period >= 0.0
        }
        SourceWave::Sin { offset, amplitude, freq, delay, damping } => {
            [offset, amplitude, freq, delay, damping].iter().all(|x| x.is_finite())
        }
    }
}

/// All invariant violations in a parsed circuit. Errors block simulation;
/// warnings flag suspicious but simulatable structure.
pub fn validate(c: &Circuit) -> Vec<Diagnostic> {
    let mut out = Vec::new();
    let cal = StrainCalibration::default();
    let mut dsu = DisjointSet::new(c.node_count());
    // Any connection at all, used to group floating nodes into subgraphs.
    let mut any = DisjointSet::new(c.node_count());
    let mut used_models = BTreeSet::new();

    for e in &c.elements {
        for w in e.nodes.windows(2) {
            any.union(w[0], w[1]);
        }
        match &e.kind {
            ElementKind::Resistor { r, .. } => {
                if !(*r > 0.0 && r.is_finite()) {
                    out.push(problem(
                        Severity::Error,
                        DiagnosticKind::InvalidValue,
                        e.line,
                        format!("{}: resistance {r} must be > 0", e.name),
                    ));
                }
                dsu.union(e.nodes[0], e.nodes[1]);
            }
            ElementKind::Capacitor { c: cap } => {
                if !(*cap > 0.0 && cap.is_finite()) {
                    out.push(problem(
                        Severity::Error,
                        DiagnosticKind::InvalidValue,
                        e.line,
                        format!("{}: capacitance {cap} must be > 0", e.name),
                    ));
                }
            }
            ElementKind::VSource { wave } | ElementKind::ISource { wave } => {
                if !wave_is_finite(wave) {
                    out.push(problem(
                        Severity::Error,
                        DiagnosticKind::InvalidValue,
                        e.line,
                        format!("{}: invalid source waveform", e.name),
                    ));
                }
                if matches!(e.kind, ElementKind::VSource { .. }) {
                    dsu.union(e.nodes[0], e.nodes[1]);
                }
            }
            ElementKind::Otft { model, .. } => {
                used_models.insert(model.clone());
                if let Err(err) = c.resolve_otft(e, &cal) {
                    out.push(problem(
                        Severity::Error,
                        DiagnosticKind::InvalidValue,
                        e.line,
                        format!("{}: {err}", e.name),
                    ));
                }
                dsu.union(e.nodes[0], e.nodes[2]);
            }
        }
    }

    let ground = dsu.find(GROUND);
    let mut islands: std::collections::BTreeMap<usize, Vec<&str>> = Default::default();
    for n in 1..c.node_count() {
        if dsu.find(n) != ground {
            islands.entry(any.find(n)).or_default().push(c.node_name(n));
        }
    }
    for nodes in islands.values() {
        out.push(problem(
            Severity::Warning,
            DiagnosticKind::Floating,
            0,
            format!("no DC path to ground from node(s) {}", nodes.join(", ")),
        ));
    }

    for name in c.models.keys() {
        if !used_models.contains(name) {
            out.push(problem(Severity::Warning, DiagnosticKind::UnusedModel, 0, format!("model {name} is never used")));
        }
    }
    out
}
