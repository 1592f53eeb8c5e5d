use std::collections::{BTreeMap, HashMap, HashSet};

use crate::model::{DeviceGeometry, DielectricStack, Orientation, OtftParams, Polarity, StrainState};

use super::lexer::{parse_number, statements, Statement, Token};
use super::{
    AnalysisDirective, Circuit, Diagnostic, DiagnosticKind, Distribution, Element, ElementKind, OtftOverrides,
    ParseError, Severity, SourceWave, SweepSpec,
};

const MAX_DEPTH: usize = 32;

type Scope = BTreeMap<String, f64>;

struct SubcktDef {
    ports: Vec<String>,
    defaults: Vec<(Token, Token)>,
    body: Vec<Statement>,
}

struct Parser {
    diags: Vec<Diagnostic>,
    circuit: Circuit,
    subckts: HashMap<String, SubcktDef>,
    seen_elements: HashSet<String>,
}

fn diag(kind: DiagnosticKind, tok: &Token, message: impl Into<String>) -> Diagnostic {
    Diagnostic { severity: Severity::Error, kind, line: tok.line, column: tok.column, message: message.into() }
}

fn lower(t: &Token) -> String {
    t.text.to_ascii_lowercase()
}

/// Parses netlist text into a flattened [`Circuit`]. All problems found are
/// reported together, each with its line and column.
pub fn parse(text: &str) -> Result<Circuit, ParseError> {
    let (title, stmts) = statements(text);
    let mut p = Parser {
        diags: Vec::new(),
        circuit: Circuit::new(title),
        subckts: HashMap::new(),
        seen_elements: HashSet::new(),
    };

    // Pass 1: split definitions from top-level cards.
    let mut top: Vec<Statement> = Vec::new();
    let mut models: Vec<Statement> = Vec::new();
    let mut params: Vec<Statement> = Vec::new();
    let mut directives: Vec<Statement> = Vec::new();
    let mut open: Option<(String, SubcktDef, Token)> = None;
    for st in stmts {
        let head = &st.tokens[0];
        if let Some((line, column)) = st.unbalanced {
            let at = Token { line, column, ..head.clone() };
            p.diags.push(diag(DiagnosticKind::Syntax, &at, "unbalanced parentheses"));
            continue;
        }
        let kw = lower(head);
        match kw.as_str() {
            ".end" => break,
            ".subckt" => {
                if let Some((_, _, ref start)) = open {
                    p.diags.push(diag(
                        DiagnosticKind::Syntax,
                        head,
                        format!("nested .subckt (definition open since line {})", start.line),
                    ));
                    continue;
                }
                if st.tokens.len() < 2 {
                    p.diags.push(diag(DiagnosticKind::Arity, head, ".subckt needs a name"));
                    continue;
                }
                let name = lower(&st.tokens[1]);
                let rest = &st.tokens[2..];
                let first_kv = rest.windows(2).position(|w| w[1].text == "=").unwrap_or(rest.len());
                let ports = rest[..first_kv].iter().map(lower).collect();
                let defaults = match kv_pairs(&rest[first_kv..]) {
                    Ok(kv) => kv,
                    Err(d) => {
                        p.diags.push(d);
                        Vec::new()
                    }
                };
                open = Some((name, SubcktDef { ports, defaults, body: Vec::new() }, head.clone()));
            }
            ".ends" => match open.take() {
                Some((name, def, tok)) => {
                    if p.subckts.insert(name.clone(), def).is_some() {
                        p.diags.push(diag(DiagnosticKind::Syntax, &tok, format!("subcircuit {name} defined twice")));
                    }
                }
                None => p.diags.push(diag(DiagnosticKind::Syntax, head, ".ends without .subckt")),
            },
            _ => {
                if let Some((_, ref mut def, _)) = open {
                    if kw.starts_with('.') && kw != ".param" {
                        p.diags.push(diag(DiagnosticKind::Syntax, head, format!("{kw} not allowed inside .subckt")));
                    } else {
                        def.body.push(st);
                    }
                    continue;
                }
                match kw.as_str() {
                    ".model" => models.push(st),
                    ".param" => params.push(st),
                    k if k.starts_with('.') => directives.push(st),
                    _ => top.push(st),
                }
            }
        }
    }
    if let Some((name, _, tok)) = open {
        p.diags.push(diag(DiagnosticKind::Syntax, &tok, format!("unterminated .subckt {name}")));
    }

    // Pass 2: global parameters, in file order.
    let mut scope = Scope::new();
    for st in &params {
        match kv_pairs(&st.tokens[1..]) {
            Ok(pairs) => {
                for (k, v) in pairs {
                    match resolve_value(&v, &scope) {
                        Ok(x) => {
                            scope.insert(lower(&k), x);
                        }
                        Err(d) => p.diags.push(d),
                    }
                }
            }
            Err(d) => p.diags.push(d),
        }
    }
    p.circuit.params = scope.clone();

    for st in &models {
        p.model_card(st, &scope);
    }

    for st in &top {
        p.element(st, "", &HashMap::new(), &scope, 0, st.line);
    }

    for st in &directives {
        p.directive(st, &scope);
    }

    if p.diags.iter().any(|d| d.severity == Severity::Error) {
        Err(ParseError { diagnostics: p.diags })
    } else {
        Ok(p.circuit)
    }
}

fn kv_pairs(tokens: &[Token]) -> Result<Vec<(Token, Token)>, Diagnostic> {
    let mut out = Vec::new();
    let mut i = 0;
    while i < tokens.len() {
        if i + 2 < tokens.len() && tokens.get(i + 1).map(|t| t.text.as_str()) == Some("=") {
            out.push((tokens[i].clone(), tokens[i + 2].clone()));
            i += 3;
        } else {
            return Err(diag(
                DiagnosticKind::Syntax,
                &tokens[i],
                format!("expected key=value, found '{}'", tokens[i].text),
            ));
        }
    }
    Ok(out)
}

fn resolve_value(tok: &Token, scope: &Scope) -> Result<f64, Diagnostic> {
    let t = tok.text.as_str();
    if let Some(inner) = t.strip_prefix('{').and_then(|s| s.strip_suffix('}')) {
        let key = inner.trim().to_ascii_lowercase();
        return scope
            .get(&key)
            .copied()
            .ok_or_else(|| diag(DiagnosticKind::UndefinedParam, tok, format!("undefined parameter '{inner}'")));
    }
    if let Some(v) = parse_number(t) {
        return Ok(v);
    }
    if let Some(v) = scope.get(&t.to_ascii_lowercase()) {
        return Ok(*v);
    }
    Err(diag(DiagnosticKind::MalformedNumber, tok, format!("malformed number '{t}'")))
}

impl Parser {
    fn model_card(&mut self, st: &Statement, scope: &Scope) {
        let t = &st.tokens;
        if t.len() < 4 {
            self.diags.push(diag(DiagnosticKind::Arity, &t[0], ".model expects: .model name OTFT(P|N) key=value ..."));
            return;
        }
        let name = lower(&t[1]);
        if lower(&t[2]) != "otft" {
            self.diags.push(diag(
                DiagnosticKind::UnknownCard,
                &t[2],
                format!("unsupported model type '{}'", t[2].text),
            ));
            return;
        }
        let polarity = match lower(&t[3]).as_str() {
            "p" => Polarity::P,
            "n" => Polarity::N,
            _ => {
                self.diags.push(diag(DiagnosticKind::Syntax, &t[3], "OTFT polarity must be P or N"));
                return;
            }
        };
        let mut p = OtftParams {
            polarity,
            mu0: f64::NAN,
            vth: 0.0,
            ss: 0.1,
            lambda: 0.0,
            gamma: 0.0,
            rc: 0.0,
            cox: DielectricStack::nbr_sbs().series_capacitance(),
            geom: DeviceGeometry { w: 100e-6, l: 10e-6, lov: 0.0 },
            triode_order: OtftParams::DEFAULT_TRIODE_ORDER,
        };
        let pairs = match kv_pairs(&t[4..]) {
            Ok(kv) => kv,
            Err(d) => {
                self.diags.push(d);
                return;
            }
        };
        let mut ok = true;
        for (k, v) in pairs {
            let val = match resolve_value(&v, scope) {
                Ok(x) => x,
                Err(d) => {
                    self.diags.push(d);
                    ok = false;
                    continue;
                }
            };
            let slot = match lower(&k).as_str() {
                "mu0" | "mu" => &mut p.mu0,
                "vth" | "vto" => &mut p.vth,
                "ss" => &mut p.ss,
                "lambda" => &mut p.lambda,
                "gamma" => &mut p.gamma,
                "rc" => &mut p.rc,
                "cox" => &mut p.cox,
                "w" => &mut p.geom.w,
                "l" => &mut p.geom.l,
                "lov" => &mut p.geom.lov,
                "m" => &mut p.triode_order,
                other => {
                    self.diags.push(diag(DiagnosticKind::Syntax, &k, format!("unknown model parameter '{other}'")));
                    ok = false;
                    continue;
                }
            };
            *slot = val;
        }
        if !ok {
            return;
        }
        if p.mu0.is_nan() {
            self.diags.push(diag(DiagnosticKind::Arity, &t[1], format!("model {name} is missing mu0")));
            return;
        }
        if let Err(e) = p.validate() {
            self.diags.push(diag(DiagnosticKind::InvalidValue, &t[1], format!("model {name}: {e}")));
            return;
        }
        if self.circuit.models.insert(name.clone(), p).is_some() {
            self.diags.push(diag(DiagnosticKind::Syntax, &t[1], format!("model {name} defined twice")));
        }
    }

    fn map_node(&mut self, local: &Token, prefix: &str, ports: &HashMap<String, String>) -> usize {
        let l = lower(local);
        let full = if l == "0" || l == "gnd" {
            "0".to_string()
        } else if let Some(parent) = ports.get(&l) {
            parent.clone()
        } else {
            format!("{prefix}{l}")
        };
        self.circuit.node(&full)
    }

    fn value(&mut self, tok: &Token, scope: &Scope) -> Option<f64> {
        match resolve_value(tok, scope) {
            Ok(v) => Some(v),
            Err(d) => {
                self.diags.push(d);
                None
            }
        }
    }

    fn arity(&mut self, tok: &Token, msg: &str) {
        self.diags.push(diag(DiagnosticKind::Arity, tok, msg.to_string()));
    }

    fn push_element(&mut self, head: &Token, name: String, kind: ElementKind, nodes: Vec<usize>, line: usize) {
        if !self.seen_elements.insert(name.clone()) {
            self.diags.push(diag(DiagnosticKind::DuplicateElement, head, format!("duplicate element name '{name}'")));
            return;
        }
        self.circuit.elements.push(Element { name, kind, nodes, line });
    }

    fn element(
        &mut self,
        st: &Statement,
        prefix: &str,
        ports: &HashMap<String, String>,
        scope: &Scope,
        depth: usize,
        top_line: usize,
    ) {
        let t = &st.tokens;
        let head = &t[0];
        let local = lower(head);
        let first = local.chars().next().unwrap_or(' ');
        // Flattened names keep the kind letter in front: `m.x1.m1`.
        let name = if prefix.is_empty() { local.clone() } else { format!("{first}.{prefix}{local}") };
        match first {
            'r' | 'c' => {
                let is_r = first == 'r';
                let wire = is_r && t.len() == 5 && lower(&t[4]) == "wire";
                if !(t.len() == 4 || wire) {
                    let msg = if is_r {
                        "resistor expects: R<name> n+ n- value [WIRE]"
                    } else {
                        "capacitor expects: C<name> n+ n- value"
                    };
                    return self.arity(head, msg);
                }
                let Some(v) = self.value(&t[3], scope) else { return };
                let a = self.map_node(&t[1], prefix, ports);
                let b = self.map_node(&t[2], prefix, ports);
                let kind = if is_r { ElementKind::Resistor { r: v, wire } } else { ElementKind::Capacitor { c: v } };
                self.push_element(head, name, kind, vec![a, b], top_line);
            }
            'v' | 'i' => {
                if t.len() < 4 {
                    return self.arity(head, "source expects: V<name> n+ n- [DC] value | PULSE(..) | SIN(..)");
                }
                let Some(wave) = self.source_wave(head, &t[3..], scope) else { return };
                let a = self.map_node(&t[1], prefix, ports);
                let b = self.map_node(&t[2], prefix, ports);
                let kind = if first == 'v' { ElementKind::VSource { wave } } else { ElementKind::ISource { wave } };
                self.push_element(head, name, kind, vec![a, b], top_line);
            }
            'm' => {
                if t.len() < 5 || (t.len() > 5 && t.get(6).map(|x| x.text.as_str()) != Some("=")) {
                    return self.arity(head, "OTFT expects: M<name> d g s model [key=value ...]");
                }
                let model = lower(&t[4]);
                if !self.circuit.models.contains_key(&model) {
                    self.diags.push(diag(
                        DiagnosticKind::UndefinedModel,
                        &t[4],
                        format!("undefined model '{}'", t[4].text),
                    ));
                    return;
                }
                let pairs = match kv_pairs(&t[5..]) {
                    Ok(kv) => kv,
                    Err(d) => return self.diags.push(d),
                };
                let mut ov = OtftOverrides::default();
                let mut strain: Option<f64> = None;
                let mut orientation = Orientation::ParallelToChannelLength;
                for (k, v) in pairs {
                    let key = lower(&k);
                    if key == "dir" {
                        orientation = match lower(&v).as_str() {
                            "par" | "parallel" => Orientation::ParallelToChannelLength,
                            "perp" | "perpendicular" => Orientation::PerpendicularToChannelLength,
                            _ => {
                                self.diags.push(diag(DiagnosticKind::Syntax, &v, "DIR must be PAR or PERP"));
                                return;
                            }
                        };
                        continue;
                    }
                    let Some(x) = self.value(&v, scope) else { return };
                    match key.as_str() {
                        "w" => ov.w = Some(x),
                        "l" => ov.l = Some(x),
                        "strain" => strain = Some(x),
                        "dvth" => ov.dvth = x,
                        "muscale" => ov.mu_scale = Some(x),
                        other => {
                            self.diags.push(diag(
                                DiagnosticKind::Syntax,
                                &k,
                                format!("unknown instance parameter '{other}'"),
                            ));
                            return;
                        }
                    }
                }
                if let Some(eps) = strain {
                    ov.strain = Some(StrainState { epsilon: eps, orientation });
                }
                let nodes = (1..=3).map(|i| self.map_node(&t[i], prefix, ports)).collect();
                self.push_element(head, name, ElementKind::Otft { model, overrides: ov }, nodes, top_line);
            }
            'x' => self.instance(st, prefix, ports, scope, depth, top_line),
            _ => self.diags.push(diag(DiagnosticKind::UnknownCard, head, format!("unknown card '{}'", head.text))),
        }
    }

    fn instance(
        &mut self,
        st: &Statement,
        prefix: &str,
        ports: &HashMap<String, String>,
        scope: &Scope,
        depth: usize,
        top_line: usize,
    ) {
        let t = &st.tokens;
        let head = &t[0];
        if depth >= MAX_DEPTH {
            self.diags.push(diag(DiagnosticKind::Syntax, head, "subcircuit nesting too deep (recursive definition?)"));
            return;
        }
        let rest = &t[1..];
        let first_kv = rest.windows(2).position(|w| w[1].text == "=").unwrap_or(rest.len());
        if first_kv < 1 {
            return self.arity(head, "instance expects: X<name> nodes... subckt [key=value ...]");
        }
        let sub_tok = &rest[first_kv - 1];
        let sub_name = lower(sub_tok);
        let Some(def) = self.subckts.get(&sub_name) else {
            self.diags.push(diag(
                DiagnosticKind::UndefinedSubckt,
                sub_tok,
                format!("undefined subcircuit '{}'", sub_tok.text),
            ));
            return;
        };
        let conns = &rest[..first_kv - 1];
        if conns.len() != def.ports.len() {
            let msg = format!("subcircuit {sub_name} has {} ports, instance connects {}", def.ports.len(), conns.len());
            self.diags.push(diag(DiagnosticKind::Arity, head, msg));
            return;
        }
        let inst = format!("{prefix}{}", lower(head));
        let inst_prefix = format!("{inst}.");
        let mut port_map = HashMap::new();
        for (port, conn) in def.ports.clone().iter().zip(conns) {
            let l = lower(conn);
            let parent = if l == "0" || l == "gnd" {
                "0".to_string()
            } else if let Some(p) = ports.get(&l) {
                p.clone()
            } else {
                format!("{prefix}{l}")
            };
            port_map.insert(port.clone(), parent);
        }

        // Scope: global/parent < subckt defaults < instance overrides.
        let mut local = scope.clone();
        let defaults = def.defaults.clone();
        let body = def.body.clone();
        for (k, v) in &defaults {
            let Some(x) = self.value(v, scope) else { return };
            local.insert(lower(k), x);
        }
        match kv_pairs(&rest[first_kv..]) {
            Ok(pairs) => {
                for (k, v) in pairs {
                    let Some(x) = self.value(&v, scope) else { return };
                    local.insert(lower(&k), x);
                }
            }
            Err(d) => return self.diags.push(d),
        }
        for st in body.iter().filter(|s| lower(&s.tokens[0]) == ".param") {
            match kv_pairs(&st.tokens[1..]) {
                Ok(pairs) => {
                    for (k, v) in pairs {
                        let Some(x) = self.value(&v, &local) else { return };
                        local.insert(lower(&k), x);
                    }
                }
                Err(d) => self.diags.push(d),
            }
        }
        for st in body.iter().filter(|s| lower(&s.tokens[0]) != ".param") {
            self.element(st, &inst_prefix, &port_map, &local, depth + 1, top_line);
        }
    }

    fn source_wave(&mut self, head: &Token, t: &[Token], scope: &Scope) -> Option<SourceWave> {
        let kw = lower(&t[0]);
        let nums = |p: &mut Self, toks: &[Token]| -> Option<Vec<f64>> {
            let mut v = Vec::with_capacity(toks.len());
            for tok in toks {
                v.push(p.value(tok, scope)?);
            }
            Some(v)
        };
        match kw.as_str() {
            "dc" => {
                if t.len() != 2 {
                    self.arity(head, "DC source expects one value");
                    return None;
                }
                Some(SourceWave::Dc(self.value(&t[1], scope)?))
            }
            "pulse" => {
                if !(3..=8).contains(&t.len()) {
                    self.arity(head, "PULSE expects (v1 v2 [td tr tf pw per])");
                    return None;
                }
                let v = nums(self, &t[1..])?;
                let g = |i: usize, d: f64| v.get(i).copied().unwrap_or(d);
                Some(SourceWave::Pulse {
                    v1: v[0],
                    v2: v[1],
                    delay: g(2, 0.0),
                    rise: g(3, 1e-9).max(1e-15),
                    fall: g(4, 1e-9).max(1e-15),
                    width: g(5, f64::MAX),
                    period: g(6, 0.0),
                })
            }
            "sin" => {
                if !(4..=6).contains(&t.len()) {
                    self.arity(head, "SIN expects (vo va freq [td theta])");
                    return None;
                }
                let v = nums(self, &t[1..])?;
                let g = |i: usize| v.get(i).copied().unwrap_or(0.0);
                Some(SourceWave::Sin { offset: v[0], amplitude: v[1], freq: v[2], delay: g(3), damping: g(4) })
            }
            _ => {
                if t.len() != 1 {
                    self.arity(head, "source expects a single DC value or PULSE/SIN");
                    return None;
                }
                Some(SourceWave::Dc(self.value(&t[0], scope)?))
            }
        }
    }

    fn directive(&mut self, st: &Statement, scope: &Scope) {
        let t = &st.tokens;
        let head = &t[0];
        let kw = lower(head);
        match kw.as_str() {
            ".op" => {
                if t.len() != 1 {
                    return self.arity(head, ".op takes no arguments");
                }
                self.circuit.analyses.push(AnalysisDirective::DcOp);
            }
            ".dc" => {
                if t.len() != 5 && t.len() != 9 {
                    return self.arity(head, ".dc expects: src start stop step [src2 start2 stop2 step2]");
                }
                let Some(primary) = self.sweep(&t[1..5], scope) else { return };
                let secondary = if t.len() == 9 {
                    let Some(s) = self.sweep(&t[5..9], scope) else { return };
                    Some(s)
                } else {
                    None
                };
                self.circuit.analyses.push(AnalysisDirective::DcSweep {
                    source: primary.0,
                    sweep: primary.1,
                    secondary,
                });
            }
            ".tran" => {
                if t.len() != 3 && t.len() != 4 {
                    return self.arity(head, ".tran expects: step stop [maxstep]");
                }
                let Some(step) = self.value(&t[1], scope) else { return };
                let Some(stop) = self.value(&t[2], scope) else { return };
                let max_step = match t.get(3) {
                    Some(tok) => {
                        let Some(v) = self.value(tok, scope) else { return };
                        Some(v)
                    }
                    None => None,
                };
                if !(step > 0.0 && stop > 0.0) || max_step.is_some_and(|m| m <= 0.0) {
                    self.diags.push(diag(DiagnosticKind::InvalidValue, head, ".tran step and stop must be > 0"));
                    return;
                }
                self.circuit.analyses.push(AnalysisDirective::Tran { step, stop, max_step });
            }
            ".mc" => self.monte_carlo(st, scope),
            ".ic" => {
                let mut i = 1;
                while i < t.len() {
                    if i + 3 < t.len() && lower(&t[i]) == "v" && t[i + 2].text == "=" {
                        let node = self.circuit.node(&t[i + 1].text);
                        let Some(v) = self.value(&t[i + 3], scope) else { return };
                        self.circuit.initial_conditions.push((node, v));
                        i += 4;
                    } else {
                        self.diags.push(diag(DiagnosticKind::Syntax, &t[i], ".ic expects V(node)=value"));
                        return;
                    }
                }
            }
            _ => self.diags.push(diag(DiagnosticKind::UnknownCard, head, format!("unknown directive '{}'", head.text))),
        }
    }

    fn sweep(&mut self, t: &[Token], scope: &Scope) -> Option<(String, SweepSpec)> {
        let source = lower(&t[0]);
        match self.circuit.element(&source).map(|e| &e.kind) {
            Some(ElementKind::VSource { .. }) | Some(ElementKind::ISource { .. }) => {}
            _ => {
                self.diags.push(diag(
                    DiagnosticKind::UnknownSource,
                    &t[0],
                    format!("sweep source '{}' is not an independent source", t[0].text),
                ));
                return None;
            }
        }
        let start = self.value(&t[1], scope)?;
        let stop = self.value(&t[2], scope)?;
        let step = self.value(&t[3], scope)?;
        if !(step > 0.0) {
            self.diags.push(diag(DiagnosticKind::InvalidValue, &t[3], "sweep step must be > 0"));
            return None;
        }
        Some((source, SweepSpec { start, stop, step }))
    }

    fn monte_carlo(&mut self, st: &Statement, scope: &Scope) {
        let t = &st.tokens;
        let head = &t[0];
        if t.len() < 2 {
            return self.arity(head, ".mc expects: count [seed=n] [vth=normal(m,s)] [mu=lognormal(m,s)]");
        }
        let Some(count) = self.value(&t[1], scope) else { return };
        if !(count >= 1.0 && count.fract() == 0.0) {
            self.diags.push(diag(DiagnosticKind::InvalidValue, &t[1], ".mc count must be a positive integer"));
            return;
        }
        let mut seed = 0u64;
        let mut vth = None;
        let mut mu = None;
        let mut i = 2;
        while i < t.len() {
            if t.get(i + 1).map(|x| x.text.as_str()) != Some("=") || i + 2 >= t.len() {
                self.diags.push(diag(DiagnosticKind::Syntax, &t[i], "expected key=value"));
                return;
            }
            let key = lower(&t[i]);
            let vt = &t[i + 2];
            if key == "seed" {
                let Some(s) = self.value(vt, scope) else { return };
                if !(s >= 0.0 && s.fract() == 0.0) {
                    self.diags.push(diag(DiagnosticKind::InvalidValue, vt, "seed must be a non-negative integer"));
                    return;
                }
                seed = s as u64;
                i += 3;
                continue;
            }
            let kind = lower(vt);
            if (kind != "normal" && kind != "lognormal") || i + 4 >= t.len() {
                self.diags.push(diag(
                    DiagnosticKind::Syntax,
                    vt,
                    "expected normal(mean,sigma) or lognormal(mean,sigma)",
                ));
                return;
            }
            let Some(mean) = self.value(&t[i + 3], scope) else { return };
            let Some(sigma) = self.value(&t[i + 4], scope) else { return };
            if !(sigma >= 0.0) {
                self.diags.push(diag(DiagnosticKind::InvalidValue, &t[i + 4], "sigma must be >= 0"));
                return;
            }
            let d = if kind == "normal" {
                Distribution::Normal { mean, sigma }
            } else {
                Distribution::LogNormal { mean, sigma }
            };
            match key.as_str() {
                "vth" => vth = Some(d),
                "mu" => mu = Some(d),
                _ => {
                    self.diags.push(diag(DiagnosticKind::Syntax, &t[i], format!("unknown .mc parameter '{key}'")));
                    return;
                }
            }
            i += 5;
        }
        self.circuit.analyses.push(AnalysisDirective::Mc { count: count as usize, seed, vth, mu });
    }
}
