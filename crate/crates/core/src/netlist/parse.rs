// SPDX-License-Identifier: Apache-2.0

//! Line-oriented netlist text format.
//!
//! ```text
//! # comment
//! .ref gnd const 0
//! .ref vdd const vdd
//! .rail phi0 clock phase=0 pol=hi
//! .cell tgate (a b c_hi c_lo)
//! .node x cap=5f
//! .fet n tn gate=c_hi a=a b=b body=gnd ron=10k
//! .endcell
//! .inst u0 tgate (a=in b=out c_hi=phi0 c_lo=phi4)
//! .bus s0 k=2 phase=0 hi0=s0_h0 lo0=s0_l0 hi1=s0_h1 lo1=s0_l1
//! ```
//!
//! A constant level of `vdd` tracks the configured supply. Numbers accept SI
//! suffixes (`f p n u m k meg g`).

use std::collections::HashSet;
use std::fmt::{self, Write as _};

use thiserror::Error;

use super::{BusDecl, Cell, ConstLevel, Design, Device, FetKind, Instance, NodeDecl, Rail, RailBinding, DEFAULT_CAP, DEFAULT_RON};
use crate::timing::{Phase, Polarity};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ParseErrorKind {
    #[error("syntax error: {0}")]
    Syntax(String),
    #[error("unknown rail {0}")]
    UnknownRail(String),
    #[error("unknown node {0}")]
    UnknownNode(String),
    #[error("duplicate id {0}")]
    DuplicateId(String),
    #[error("diode element rejected (rule \"No diodes\"): {0}")]
    Diode(String),
    #[error("unsupported element {0}: only FETs are representable")]
    Unsupported(String),
}

#[derive(Debug, Clone, PartialEq, Error)]
#[error("{line}:{column}: {kind}")]
pub struct ParseError {
    pub line: usize,
    pub column: usize,
    pub kind: ParseErrorKind,
}

#[derive(Debug, Clone, Copy)]
struct Token<'a> {
    text: &'a str,
    column: usize,
}

fn tokenize(line: &str) -> Vec<Token<'_>> {
    let line = match line.find('#') {
        Some(pos) => &line[..pos],
        None => line,
    };
    let mut out = Vec::new();
    let mut start = None;
    for (i, ch) in line.char_indices() {
        let sep = ch.is_whitespace() || ch == '(' || ch == ')';
        if sep {
            if let Some(s) = start.take() {
                out.push(Token {
                    text: &line[s..i],
                    column: s + 1,
                });
            }
            if ch == '(' || ch == ')' {
                out.push(Token {
                    text: &line[i..i + 1],
                    column: i + 1,
                });
            }
        } else if start.is_none() {
            start = Some(i);
        }
    }
    if let Some(s) = start {
        out.push(Token {
            text: &line[s..],
            column: s + 1,
        });
    }
    out
}

/// Parses a number with an optional SI suffix.
pub fn parse_number(text: &str) -> Option<f64> {
    if let Ok(v) = text.parse::<f64>() {
        return Some(v);
    }
    let lower = text.to_ascii_lowercase();
    let (body, exp) = if let Some(b) = lower.strip_suffix("meg") {
        (b, 6)
    } else {
        let (b, suffix) = lower.split_at(lower.len().checked_sub(1)?);
        let exp = match suffix {
            "f" => -15,
            "p" => -12,
            "n" => -9,
            "u" => -6,
            "m" => -3,
            "k" => 3,
            "g" => 9,
            _ => return None,
        };
        (b, exp)
    };
    if body.is_empty() || body.contains(['e', 'E']) {
        return None;
    }
    // Reparse with a decimal exponent so `5f` is exactly the double `5e-15`.
    format!("{body}e{exp}").parse::<f64>().ok()
}

struct LineParser<'a> {
    line: usize,
    tokens: Vec<Token<'a>>,
    pos: usize,
}

impl<'a> LineParser<'a> {
    fn err_at(&self, column: usize, kind: ParseErrorKind) -> ParseError {
        ParseError {
            line: self.line,
            column,
            kind,
        }
    }

    fn err(&self, kind: ParseErrorKind) -> ParseError {
        let column = self
            .tokens
            .get(self.pos.saturating_sub(1))
            .or(self.tokens.last())
            .map_or(1, |t| t.column);
        self.err_at(column, kind)
    }

    fn next(&mut self, what: &str) -> Result<Token<'a>, ParseError> {
        let tok = self.tokens.get(self.pos).copied();
        self.pos += 1;
        tok.ok_or_else(|| self.err(ParseErrorKind::Syntax(format!("expected {what}"))))
    }

    fn peek(&self) -> Option<Token<'a>> {
        self.tokens.get(self.pos).copied()
    }

    fn expect(&mut self, text: &str) -> Result<(), ParseError> {
        let tok = self.next(&format!("'{text}'"))?;
        if tok.text != text {
            return Err(self.err_at(tok.column, ParseErrorKind::Syntax(format!("expected '{text}', found '{}'", tok.text))));
        }
        Ok(())
    }

    fn done(&self) -> Result<(), ParseError> {
        match self.peek() {
            None => Ok(()),
            Some(t) => Err(self.err_at(t.column, ParseErrorKind::Syntax(format!("unexpected '{}'", t.text)))),
        }
    }

    /// Remaining tokens as `key=value` pairs.
    fn key_values(&mut self) -> Result<Vec<(&'a str, &'a str, usize)>, ParseError> {
        let mut out = Vec::new();
        while let Some(tok) = self.peek() {
            if tok.text == ")" {
                break;
            }
            self.pos += 1;
            let (k, v) = tok.text.split_once('=').ok_or_else(|| {
                self.err_at(tok.column, ParseErrorKind::Syntax(format!("expected key=value, found '{}'", tok.text)))
            })?;
            if k.is_empty() || v.is_empty() {
                return Err(self.err_at(tok.column, ParseErrorKind::Syntax(format!("malformed '{}'", tok.text))));
            }
            out.push((k, v, tok.column));
        }
        Ok(out)
    }

    fn number(&self, text: &str, column: usize) -> Result<f64, ParseError> {
        parse_number(text)
            .filter(|v| v.is_finite())
            .ok_or_else(|| self.err_at(column, ParseErrorKind::Syntax(format!("invalid number '{text}'"))))
    }

    fn phase(&self, text: &str, column: usize) -> Result<Phase, ParseError> {
        text.parse::<i64>()
            .ok()
            .and_then(|p| Phase::new(p).ok())
            .ok_or_else(|| self.err_at(column, ParseErrorKind::Syntax(format!("phase must be 0..7, got '{text}'"))))
    }
}

fn valid_ident(s: &str) -> bool {
    !s.is_empty()
        && !s.contains('=')
        && s.chars().all(|c| c.is_ascii_alphanumeric() || "_.[]-$:".contains(c))
}

struct Scope {
    names: HashSet<String>,
    devices: HashSet<String>,
    instances: HashSet<String>,
    buses: HashSet<String>,
}

impl Scope {
    fn new() -> Self {
        Scope {
            names: HashSet::new(),
            devices: HashSet::new(),
            instances: HashSet::new(),
            buses: HashSet::new(),
        }
    }
}

/// Parses netlist text into a [`Design`].
pub fn parse(text: &str) -> Result<Design, ParseError> {
    let mut design = Design::default();
    design.top.name = "top".into();
    let mut current: Option<(Cell, Scope, usize)> = None;
    let mut top_scope = Scope::new();
    let mut rail_names: HashSet<String> = HashSet::new();
    // Names are checked against rails and local declarations after the whole
    // cell is read, so cells may reference nodes declared later in the body.
    let mut pending: Vec<(String, usize, usize, String)> = Vec::new();
    let mut pending_rails: Vec<(String, usize, usize)> = Vec::new();

    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let tokens = tokenize(raw);
        if tokens.is_empty() {
            continue;
        }
        let mut p = LineParser { line, tokens, pos: 0 };
        let head = p.next("directive")?;
        let directive = head.text.to_ascii_lowercase();
        match directive.as_str() {
            ".diode" | ".d" => return Err(p.err_at(head.column, ParseErrorKind::Diode(head.text.into()))),
            ".res" | ".r" | ".cap" | ".c" | ".ind" | ".l" | ".vsrc" | ".v" | ".isrc" | ".i" | ".bjt" | ".q" => {
                return Err(p.err_at(head.column, ParseErrorKind::Unsupported(head.text.into())))
            }
            d if !d.starts_with('.') => {
                let kind = match d.chars().next() {
                    Some('d') => ParseErrorKind::Diode(head.text.into()),
                    Some('r' | 'c' | 'l' | 'v' | 'i' | 'q') => ParseErrorKind::Unsupported(head.text.into()),
                    _ => ParseErrorKind::Syntax(format!("unknown statement '{}'", head.text)),
                };
                return Err(p.err_at(head.column, kind));
            }
            ".ref" | ".rail" => {
                if current.is_some() {
                    return Err(p.err_at(head.column, ParseErrorKind::Syntax("rails must be declared outside cells".into())));
                }
                let name = p.next("rail name")?;
                if !valid_ident(name.text) {
                    return Err(p.err_at(name.column, ParseErrorKind::Syntax(format!("invalid name '{}'", name.text))));
                }
                if !rail_names.insert(name.text.to_string()) || top_scope.names.contains(name.text) {
                    return Err(p.err_at(name.column, ParseErrorKind::DuplicateId(name.text.into())));
                }
                let binding = if directive == ".ref" {
                    p.expect("const")?;
                    let level = p.next("level")?;
                    let level = if level.text.eq_ignore_ascii_case("vdd") {
                        ConstLevel::Supply
                    } else {
                        ConstLevel::Volts(p.number(level.text, level.column)?)
                    };
                    RailBinding::Const(level)
                } else {
                    p.expect("clock")?;
                    let mut phase = None;
                    let mut polarity = None;
                    for (k, v, col) in p.key_values()? {
                        match k {
                            "phase" => phase = Some(p.phase(v, col)?),
                            "pol" => {
                                polarity = Some(match v {
                                    "hi" => Polarity::Hi,
                                    "lo" => Polarity::Lo,
                                    _ => return Err(p.err_at(col, ParseErrorKind::Syntax(format!("pol must be hi|lo, got '{v}'")))),
                                })
                            }
                            _ => return Err(p.err_at(col, ParseErrorKind::Syntax(format!("unknown key '{k}'")))),
                        }
                    }
                    match (phase, polarity) {
                        (Some(phase), Some(polarity)) => RailBinding::Clock { phase, polarity },
                        _ => return Err(p.err(ParseErrorKind::Syntax("clock rail needs phase= and pol=".into()))),
                    }
                };
                p.done()?;
                design.rails.push(Rail {
                    name: name.text.into(),
                    binding,
                });
            }
            ".cell" => {
                if current.is_some() {
                    return Err(p.err_at(head.column, ParseErrorKind::Syntax("nested .cell".into())));
                }
                let name = p.next("cell name")?;
                if design.cells.contains_key(name.text) {
                    return Err(p.err_at(name.column, ParseErrorKind::DuplicateId(name.text.into())));
                }
                let mut cell = Cell::new(name.text);
                let mut scope = Scope::new();
                p.expect("(")?;
                loop {
                    let tok = p.next("port or ')'")?;
                    if tok.text == ")" {
                        break;
                    }
                    if !valid_ident(tok.text) {
                        return Err(p.err_at(tok.column, ParseErrorKind::Syntax(format!("invalid port '{}'", tok.text))));
                    }
                    if !scope.names.insert(tok.text.into()) {
                        return Err(p.err_at(tok.column, ParseErrorKind::DuplicateId(tok.text.into())));
                    }
                    cell.ports.push(tok.text.into());
                }
                p.done()?;
                current = Some((cell, scope, line));
            }
            ".endcell" => {
                p.done()?;
                let (cell, scope, _) = current
                    .take()
                    .ok_or_else(|| p.err_at(head.column, ParseErrorKind::Syntax(".endcell without .cell".into())))?;
                check_pending(&mut pending, &mut pending_rails, &scope, &rail_names, &design)?;
                design.cells.insert(cell.name.clone(), cell);
            }
            ".node" => {
                let name = p.next("node name")?;
                if !valid_ident(name.text) {
                    return Err(p.err_at(name.column, ParseErrorKind::Syntax(format!("invalid name '{}'", name.text))));
                }
                let mut cap = DEFAULT_CAP;
                for (k, v, col) in p.key_values()? {
                    match k {
                        "cap" => cap = p.number(v, col)?,
                        _ => return Err(p.err_at(col, ParseErrorKind::Syntax(format!("unknown key '{k}'")))),
                    }
                }
                p.done()?;
                if cap < 0.0 {
                    return Err(p.err_at(name.column, ParseErrorKind::Syntax("capacitance must be non-negative".into())));
                }
                let (cell, scope) = target(&mut current, &mut design, &mut top_scope);
                if !scope.names.insert(name.text.into()) || rail_names.contains(name.text) {
                    return Err(p.err_at(name.column, ParseErrorKind::DuplicateId(name.text.into())));
                }
                cell.nodes.push(NodeDecl {
                    name: name.text.into(),
                    cap,
                });
            }
            ".fet" => {
                let kind_tok = p.next("n|p")?;
                let kind = match kind_tok.text {
                    "n" | "nfet" => FetKind::N,
                    "p" | "pfet" => FetKind::P,
                    other => return Err(p.err_at(kind_tok.column, ParseErrorKind::Syntax(format!("FET kind must be n|p, got '{other}'")))),
                };
                let id = p.next("device id")?;
                if !valid_ident(id.text) {
                    return Err(p.err_at(id.column, ParseErrorKind::Syntax(format!("invalid id '{}'", id.text))));
                }
                let (mut gate, mut a, mut b, mut body) = (None, None, None, None);
                let mut r_on = DEFAULT_RON;
                let mut vt = None;
                for (k, v, col) in p.key_values()? {
                    match k {
                        "gate" => gate = Some((v, col)),
                        "a" => a = Some((v, col)),
                        "b" => b = Some((v, col)),
                        "body" => body = Some((v, col)),
                        "ron" => r_on = p.number(v, col)?,
                        "vt" => vt = Some(p.number(v, col)?),
                        _ => return Err(p.err_at(col, ParseErrorKind::Syntax(format!("unknown key '{k}'")))),
                    }
                }
                p.done()?;
                fn need<'s>(p: &LineParser<'_>, x: Option<(&'s str, usize)>, key: &str) -> Result<(&'s str, usize), ParseError> {
                    x.ok_or_else(|| p.err(ParseErrorKind::Syntax(format!("missing {key}="))))
                }
                let gate = need(&p, gate, "gate")?;
                let a = need(&p, a, "a")?;
                let b = need(&p, b, "b")?;
                let body = need(&p, body, "body")?;
                if r_on <= 0.0 {
                    return Err(p.err(ParseErrorKind::Syntax("ron must be positive".into())));
                }
                let (cell, scope) = target(&mut current, &mut design, &mut top_scope);
                if !scope.devices.insert(id.text.into()) {
                    return Err(p.err_at(id.column, ParseErrorKind::DuplicateId(id.text.into())));
                }
                for (n, col) in [gate, a, b] {
                    pending.push((n.to_string(), line, col, cell.name.clone()));
                }
                pending_rails.push((body.0.to_string(), line, body.1));
                cell.devices.push(Device {
                    id: id.text.into(),
                    kind,
                    gate: gate.0.into(),
                    a: a.0.into(),
                    b: b.0.into(),
                    body: body.0.into(),
                    r_on,
                    vt,
                });
            }
            ".inst" => {
                let id = p.next("instance id")?;
                let cell_name = p.next("cell name")?;
                if !valid_ident(id.text) {
                    return Err(p.err_at(id.column, ParseErrorKind::Syntax(format!("invalid id '{}'", id.text))));
                }
                p.expect("(")?;
                let kvs = p.key_values()?;
                p.expect(")")?;
                p.done()?;
                let (cell, scope) = target(&mut current, &mut design, &mut top_scope);
                if !scope.instances.insert(id.text.into()) {
                    return Err(p.err_at(id.column, ParseErrorKind::DuplicateId(id.text.into())));
                }
                let mut seen = HashSet::new();
                let mut bindings = Vec::new();
                for (k, v, col) in kvs {
                    if !seen.insert(k) {
                        return Err(p.err_at(col, ParseErrorKind::DuplicateId(k.into())));
                    }
                    pending.push((v.to_string(), line, col, cell.name.clone()));
                    bindings.push((k.to_string(), v.to_string()));
                }
                cell.instances.push(Instance {
                    id: id.text.into(),
                    cell: cell_name.text.into(),
                    bindings,
                });
            }
            ".bus" => {
                let name = p.next("bus name")?;
                let mut k = None;
                let mut phase = None;
                let mut rails: Vec<(usize, bool, String, usize)> = Vec::new();
                for (key, v, col) in p.key_values()? {
                    match key {
                        "k" => {
                            k = Some(v.parse::<usize>().ok().filter(|&k| k >= 1).ok_or_else(|| {
                                p.err_at(col, ParseErrorKind::Syntax(format!("k must be a positive integer, got '{v}'")))
                            })?)
                        }
                        "phase" => phase = Some(p.phase(v, col)?),
                        _ => {
                            let (hi, idx) = if let Some(i) = key.strip_prefix("hi") {
                                (true, i)
                            } else if let Some(i) = key.strip_prefix("lo") {
                                (false, i)
                            } else {
                                return Err(p.err_at(col, ParseErrorKind::Syntax(format!("unknown key '{key}'"))));
                            };
                            let idx = idx
                                .parse::<usize>()
                                .map_err(|_| p.err_at(col, ParseErrorKind::Syntax(format!("unknown key '{key}'"))))?;
                            rails.push((idx, hi, v.to_string(), col));
                        }
                    }
                }
                p.done()?;
                let (k, phase) = match (k, phase) {
                    (Some(k), Some(phase)) => (k, phase),
                    _ => return Err(p.err(ParseErrorKind::Syntax(".bus needs k= and phase=".into()))),
                };
                let mut pairs = vec![(None, None); k];
                for (idx, hi, node, col) in rails {
                    let slot = pairs
                        .get_mut(idx)
                        .ok_or_else(|| p.err_at(col, ParseErrorKind::Syntax(format!("symbol {idx} out of range for k={k}"))))?;
                    let target = if hi { &mut slot.0 } else { &mut slot.1 };
                    if target.replace((node, col)).is_some() {
                        return Err(p.err_at(col, ParseErrorKind::DuplicateId(format!("{}{idx}", if hi { "hi" } else { "lo" }))));
                    }
                }
                let mut resolved = Vec::new();
                let (cell, scope) = target(&mut current, &mut design, &mut top_scope);
                if !scope.buses.insert(name.text.into()) {
                    return Err(p.err_at(name.column, ParseErrorKind::DuplicateId(name.text.into())));
                }
                for (i, pair) in pairs.into_iter().enumerate() {
                    match pair {
                        (Some((h, hc)), Some((l, lc))) => {
                            pending.push((h.clone(), line, hc, cell.name.clone()));
                            pending.push((l.clone(), line, lc, cell.name.clone()));
                            resolved.push((h, l));
                        }
                        _ => {
                            return Err(p.err_at(
                                name.column,
                                ParseErrorKind::Syntax(format!("bus {} is missing the rail pair for symbol {i}", name.text)),
                            ))
                        }
                    }
                }
                cell.buses.push(BusDecl {
                    name: name.text.into(),
                    phase,
                    pairs: resolved,
                });
            }
            _ => {
                return Err(p.err_at(
                    head.column,
                    ParseErrorKind::Syntax(format!("unknown directive '{}'", head.text)),
                ))
            }
        }
    }
    if let Some((cell, _, line)) = current {
        return Err(ParseError {
            line,
            column: 1,
            kind: ParseErrorKind::Syntax(format!("cell {} is missing .endcell", cell.name)),
        });
    }
    check_pending(&mut pending, &mut pending_rails, &top_scope, &rail_names, &design)?;
    Ok(design)
}

fn target<'c>(
    current: &'c mut Option<(Cell, Scope, usize)>,
    design: &'c mut Design,
    top_scope: &'c mut Scope,
) -> (&'c mut Cell, &'c mut Scope) {
    match current {
        Some((cell, scope, _)) => (cell, scope),
        None => (&mut design.top, top_scope),
    }
}

fn check_pending(
    pending: &mut Vec<(String, usize, usize, String)>,
    pending_rails: &mut Vec<(String, usize, usize)>,
    scope: &Scope,
    rails: &HashSet<String>,
    design: &Design,
) -> Result<(), ParseError> {
    for (name, line, column) in pending_rails.drain(..) {
        if !rails.contains(&name) {
            return Err(ParseError {
                line,
                column,
                kind: ParseErrorKind::UnknownRail(name),
            });
        }
    }
    for (name, line, column, _) in pending.drain(..) {
        if !scope.names.contains(&name) && !rails.contains(&name) {
            let kind = if design.rails.is_empty() && (name == "gnd" || name == "vdd") {
                ParseErrorKind::UnknownRail(name)
            } else {
                ParseErrorKind::UnknownNode(name)
            };
            return Err(ParseError { line, column, kind });
        }
    }
    Ok(())
}

fn fmt_num(v: f64) -> String {
    format!("{v:e}")
}

fn write_body(out: &mut String, cell: &Cell) -> fmt::Result {
    for n in &cell.nodes {
        if n.cap == DEFAULT_CAP {
            writeln!(out, ".node {}", n.name)?;
        } else {
            writeln!(out, ".node {} cap={}", n.name, fmt_num(n.cap))?;
        }
    }
    for d in &cell.devices {
        write!(
            out,
            ".fet {} {} gate={} a={} b={} body={}",
            d.kind.as_str(),
            d.id,
            d.gate,
            d.a,
            d.b,
            d.body
        )?;
        if d.r_on != DEFAULT_RON {
            write!(out, " ron={}", fmt_num(d.r_on))?;
        }
        if let Some(vt) = d.vt {
            write!(out, " vt={}", fmt_num(vt))?;
        }
        out.push('\n');
    }
    for i in &cell.instances {
        let binds: Vec<String> = i.bindings.iter().map(|(p, n)| format!("{p}={n}")).collect();
        writeln!(out, ".inst {} {} ({})", i.id, i.cell, binds.join(" "))?;
    }
    for b in &cell.buses {
        write!(out, ".bus {} k={} phase={}", b.name, b.k(), b.phase)?;
        for (i, (h, l)) in b.pairs.iter().enumerate() {
            write!(out, " hi{i}={h} lo{i}={l}")?;
        }
        out.push('\n');
    }
    Ok(())
}

/// Renders a design in the netlist text format.
pub fn serialize(design: &Design) -> String {
    let mut out = String::new();
    for r in &design.rails {
        match r.binding {
            RailBinding::Const(ConstLevel::Supply) => writeln!(out, ".ref {} const vdd", r.name),
            RailBinding::Const(ConstLevel::Volts(v)) => writeln!(out, ".ref {} const {}", r.name, fmt_num(v)),
            RailBinding::Clock { phase, polarity } => {
                writeln!(out, ".rail {} clock phase={} pol={}", r.name, phase, polarity.as_str())
            }
        }
        .expect("write to String");
    }
    for cell in design.cells.values() {
        writeln!(out, ".cell {} ({})", cell.name, cell.ports.join(" ")).expect("write to String");
        write_body(&mut out, cell).expect("write to String");
        out.push_str(".endcell\n");
    }
    write_body(&mut out, &design.top).expect("write to String");
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    const SAMPLE: &str = "\
# two rails and a clock pair
.ref gnd const 0
.ref vdd const vdd
.rail phi0 clock phase=0 pol=hi
.rail phi4 clock phase=4 pol=hi
.cell tgate (a b c_hi c_lo)
.fet n tn gate=c_hi a=a b=b body=gnd
.fet p tp gate=c_lo a=a b=b body=vdd ron=20k
.endcell
.node x
.node y cap=5f
.inst u0 tgate (a=x b=y c_hi=phi0 c_lo=phi4)
.bus s k=1 phase=3 hi0=x lo0=y
";

    #[test]
    fn parses_sample() {
        let d = parse(SAMPLE).unwrap();
        assert_eq!(d.rails.len(), 4);
        assert_eq!(d.rail("vdd").unwrap().binding, RailBinding::Const(ConstLevel::Supply));
        let tg = &d.cells["tgate"];
        assert_eq!(tg.devices.len(), 2);
        assert_eq!(tg.devices[1].r_on, 20e3);
        assert_eq!(d.top.nodes[1].cap, 5e-15);
        assert_eq!(d.top.buses[0].phase, Phase::wrap(3));
        assert_eq!(d.device_count().unwrap(), 2);
    }

    #[test]
    fn round_trip() {
        let d = parse(SAMPLE).unwrap();
        let again = parse(&serialize(&d)).unwrap();
        assert_eq!(d, again);
    }

    #[test]
    fn diode_is_rejected() {
        let err = parse(".ref gnd const 0\n.diode d1 a=x b=gnd\n").unwrap_err();
        assert_eq!(err.line, 2);
        assert!(matches!(err.kind, ParseErrorKind::Diode(_)));
        assert!(err.to_string().contains("No diodes"));
        let err = parse("D1 x gnd\n").unwrap_err();
        assert!(matches!(err.kind, ParseErrorKind::Diode(_)));
        let err = parse(".res r1 a=x b=y\n").unwrap_err();
        assert!(matches!(err.kind, ParseErrorKind::Unsupported(_)));
    }

    #[test]
    fn diagnostics_carry_positions() {
        let err = parse(".ref gnd const 0\n.node x\n.fet n m gate=x a=x b=nowhere body=gnd\n").unwrap_err();
        assert_eq!((err.line, err.column), (3, 21));
        assert_eq!(err.kind, ParseErrorKind::UnknownNode("nowhere".into()));

        let err = parse(".ref gnd const 0\n.node x\n.fet n m gate=x a=x b=x body=sub\n").unwrap_err();
        assert_eq!(err.kind, ParseErrorKind::UnknownRail("sub".into()));

        let err = parse(".node x\n.node x\n").unwrap_err();
        assert_eq!(err.kind, ParseErrorKind::DuplicateId("x".into()));

        let err = parse(".rail p clock phase=9 pol=hi\n").unwrap_err();
        assert!(matches!(err.kind, ParseErrorKind::Syntax(_)));
        assert_eq!(err.column, 15);

        let err = parse(".cell c (a)\n.node z\n").unwrap_err();
        assert!(err.to_string().contains("missing .endcell"));
    }

    #[test]
    fn numbers_with_suffixes() {
        assert_eq!(parse_number("10k"), Some(10e3));
        assert_eq!(parse_number("10f"), Some(10e-15));
        assert_eq!(parse_number("1meg"), Some(1e6));
        assert_eq!(parse_number("2.5"), Some(2.5));
        assert_eq!(parse_number("1e-9"), Some(1e-9));
        assert_eq!(parse_number("abc"), None);
    }

    #[test]
    fn bus_requires_every_pair() {
        let err = parse(".node a\n.node b\n.bus s k=2 phase=0 hi0=a lo0=b\n").unwrap_err();
        assert!(err.to_string().contains("symbol 1"));
    }
}
