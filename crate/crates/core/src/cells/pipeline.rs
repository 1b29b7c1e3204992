// SPDX-License-Identifier: Apache-2.0

//! Reversible pipelines: forward stages compute each signal from its
//! predecessor, reverse stages decompute it from its successor.
//!
//! Signal `S_j` lives on phase `j mod 8`. Forward stage `F_j` (j = 1..N)
//! drives on phase `j` and passes on `j - 1`; reverse stage `R_j` drives on
//! `j + 2` and passes on `j + 3`. `S_0` is a primary input. `R_N` reads the
//! primary input bus `ret`, which must carry a copy of `S_N` one tick later,
//! so the pipeline terminates without a floating last signal.

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use super::{and_gate, buffer, empty_design, latched, or_gate, CellError};
use crate::netlist::{BusDecl, Cell, Design, Instance};
use crate::stimulus::{BusStimulus, Stimulus};
use crate::timing::{Phase, PHASES};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PipelineError {
    #[error("pipeline needs at least one stage")]
    NoStages,
    #[error("pipeline width must be at least 1")]
    ZeroWidth,
    #[error("stage {stage}: output {bit} reads input {input}, but only {width} inputs exist")]
    BadInput { stage: usize, bit: usize, input: usize, width: usize },
    #[error("stage {stage} is not invertible: two inputs map to the same output")]
    NonInvertible { stage: usize },
    #[error("stage {stage}: input {bit} cannot be recomputed by any single available gate")]
    InexpressibleInverse { stage: usize, bit: usize },
    #[error("stage {stage} has no outputs")]
    EmptyStage { stage: usize },
    #[error("stage functions over more than 16 inputs are not supported")]
    TooWide,
    #[error("phase plan covers {got} stages, pipeline has {want}")]
    PlanLength { got: usize, want: usize },
}

impl From<CellError> for PipelineError {
    fn from(e: CellError) -> Self {
        match e {
            CellError::NoStages => PipelineError::NoStages,
            _ => PipelineError::ZeroWidth,
        }
    }
}

/// One output bit as a single gate over the previous signal's bits.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum GateExpr {
    Buf(usize),
    Not(usize),
    And(usize, usize),
    Or(usize, usize),
    Nand(usize, usize),
    Nor(usize, usize),
}

impl GateExpr {
    pub fn eval(self, x: &[bool]) -> bool {
        match self {
            GateExpr::Buf(a) => x[a],
            GateExpr::Not(a) => !x[a],
            GateExpr::And(a, b) => x[a] && x[b],
            GateExpr::Or(a, b) => x[a] || x[b],
            GateExpr::Nand(a, b) => !(x[a] && x[b]),
            GateExpr::Nor(a, b) => !(x[a] || x[b]),
        }
    }

    pub fn inputs(self) -> Vec<usize> {
        match self {
            GateExpr::Buf(a) | GateExpr::Not(a) => vec![a],
            GateExpr::And(a, b) | GateExpr::Or(a, b) | GateExpr::Nand(a, b) | GateExpr::Nor(a, b) => vec![a, b],
        }
    }

    /// Base cell and input symbol per operand that produce output symbol
    /// `sym` of this expression.
    fn realization(self, sym: usize, drive: Phase) -> (Cell, Vec<(usize, usize)>) {
        let one = sym == 1;
        let (t, f) = (usize::from(one), usize::from(!one));
        match self {
            GateExpr::Buf(a) => (buffer(drive), vec![(a, t)]),
            GateExpr::Not(a) => (buffer(drive), vec![(a, f)]),
            GateExpr::And(a, b) => (if one { and_gate(drive) } else { or_gate(drive) }, vec![(a, t), (b, t)]),
            GateExpr::Or(a, b) => (if one { or_gate(drive) } else { and_gate(drive) }, vec![(a, t), (b, t)]),
            GateExpr::Nand(a, b) => (if one { or_gate(drive) } else { and_gate(drive) }, vec![(a, f), (b, f)]),
            GateExpr::Nor(a, b) => (if one { and_gate(drive) } else { or_gate(drive) }, vec![(a, f), (b, f)]),
        }
    }

    fn candidates(width: usize) -> impl Iterator<Item = GateExpr> {
        let singles = (0..width).flat_map(|a| [GateExpr::Buf(a), GateExpr::Not(a)]);
        let pairs = (0..width).flat_map(move |a| {
            (a + 1..width).flat_map(move |b| {
                [
                    GateExpr::And(a, b),
                    GateExpr::Or(a, b),
                    GateExpr::Nand(a, b),
                    GateExpr::Nor(a, b),
                ]
            })
        });
        singles.chain(pairs)
    }
}

impl fmt::Display for GateExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            GateExpr::Buf(a) => write!(f, "b{a}"),
            GateExpr::Not(a) => write!(f, "!b{a}"),
            GateExpr::And(a, b) => write!(f, "b{a}&b{b}"),
            GateExpr::Or(a, b) => write!(f, "b{a}|b{b}"),
            GateExpr::Nand(a, b) => write!(f, "!(b{a}&b{b})"),
            GateExpr::Nor(a, b) => write!(f, "!(b{a}|b{b})"),
        }
    }
}

impl FromStr for GateExpr {
    type Err = String;

    /// Accepts `b0`, `!b0`, `b0&b1`, `b0|b1`, `!(b0&b1)`, `!(b0|b1)`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || format!("bad gate expression '{s}'");
        let bit = |t: &str| t.trim().strip_prefix('b').and_then(|n| n.parse::<usize>().ok()).ok_or_else(bad);
        let s = s.trim();
        let (neg, body) = match s.strip_prefix('!') {
            Some(rest) => (true, rest.trim()),
            None => (false, s),
        };
        let body = body.strip_prefix('(').and_then(|b| b.strip_suffix(')')).unwrap_or(body);
        if let Some((a, b)) = body.split_once('&') {
            let (a, b) = (bit(a)?, bit(b)?);
            return Ok(if neg { GateExpr::Nand(a, b) } else { GateExpr::And(a, b) });
        }
        if let Some((a, b)) = body.split_once('|') {
            let (a, b) = (bit(a)?, bit(b)?);
            return Ok(if neg { GateExpr::Nor(a, b) } else { GateExpr::Or(a, b) });
        }
        let a = bit(body)?;
        Ok(if neg { GateExpr::Not(a) } else { GateExpr::Buf(a) })
    }
}

/// Map from one signal word to the next, one expression per output bit.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StageFunction {
    pub outputs: Vec<GateExpr>,
}

impl StageFunction {
    pub fn new(outputs: Vec<GateExpr>) -> Self {
        StageFunction { outputs }
    }

    pub fn identity(width: usize) -> Self {
        StageFunction::new((0..width).map(GateExpr::Buf).collect())
    }

    pub fn width(&self) -> usize {
        self.outputs.len()
    }

    pub fn apply(&self, x: &[bool]) -> Vec<bool> {
        self.outputs.iter().map(|e| e.eval(x)).collect()
    }

    /// Inverse expressed over this stage's outputs, for inputs of width
    /// `in_width`.
    pub fn inverse(&self, in_width: usize, stage: usize) -> Result<StageFunction, PipelineError> {
        if in_width > 16 {
            return Err(PipelineError::TooWide);
        }
        let domain: Vec<Vec<bool>> = (0..1u32 << in_width)
            .map(|v| (0..in_width).map(|b| v >> b & 1 == 1).collect())
            .collect();
        let image: Vec<Vec<bool>> = domain.iter().map(|x| self.apply(x)).collect();
        let mut seen = std::collections::HashSet::new();
        if !image.iter().all(|y| seen.insert(y.clone())) {
            return Err(PipelineError::NonInvertible { stage });
        }
        let mut outputs = Vec::with_capacity(in_width);
        for bit in 0..in_width {
            let found = GateExpr::candidates(self.width())
                .find(|e| domain.iter().zip(&image).all(|(x, y)| e.eval(y) == x[bit]))
                .ok_or(PipelineError::InexpressibleInverse { stage, bit })?;
            outputs.push(found);
        }
        Ok(StageFunction::new(outputs))
    }
}

impl FromStr for StageFunction {
    type Err = String;

    /// Comma-separated output expressions, e.g. `b1,b0`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        s.split(',').map(str::parse).collect::<Result<Vec<_>, _>>().map(StageFunction::new)
    }
}

/// Drive and pass phases of every stage.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PhasePlan {
    /// `(drive, pass)` of `F_1..F_N`.
    pub forward: Vec<(Phase, Phase)>,
    /// `(drive, pass)` of `R_1..R_N`.
    pub reverse: Vec<(Phase, Phase)>,
}

impl PhasePlan {
    pub fn standard(stages: usize) -> Self {
        let forward = (1..=stages as i64).map(|j| (Phase::wrap(j), Phase::wrap(j - 1))).collect();
        let reverse = (1..=stages as i64).map(|j| (Phase::wrap(j + 2), Phase::wrap(j + 3))).collect();
        PhasePlan { forward, reverse }
    }

    pub fn stages(&self) -> usize {
        self.forward.len()
    }
}

/// Summary of a built pipeline.
#[derive(Debug, Clone, PartialEq)]
pub struct PipelineReport {
    /// Inverse used by `R_j`, over `S_{j+1}`; the last entry is the identity
    /// on `ret`.
    pub inverses: Vec<StageFunction>,
    /// Cells that exist only to keep the false symbol of each bit available
    /// to later stages.
    pub complement_cells: usize,
    pub devices: usize,
}

pub(crate) fn bus_name(signal: usize, bit: usize) -> String {
    format!("s{signal}_{bit}")
}

fn rail(bus: &str, hi: bool, sym: usize) -> String {
    format!("{bus}_{}{sym}", if hi { "h" } else { "l" })
}

fn declare_bus(d: &mut Design, name: &str, phase: Phase, k: usize) {
    let mut pairs = Vec::new();
    for sym in 0..k {
        let (h, l) = (rail(name, true, sym), rail(name, false, sym));
        d.top.add_node(h.clone());
        d.top.add_node(l.clone());
        pairs.push((h, l));
    }
    d.top.buses.push(BusDecl {
        name: name.into(),
        phase,
        pairs,
    });
}

/// Adds one latched cell instance reading `inputs` (bus, symbol) per operand
/// and driving symbol `sym` of bus `out`.
fn place(d: &mut Design, id: String, base: Cell, pass: Phase, inputs: &[(String, usize)], out: &str, sym: usize) {
    let cell = latched(&base, pass);
    let mut bindings = Vec::new();
    for (port, (bus, s)) in ["a", "b"].iter().zip(inputs) {
        bindings.push((format!("{port}_hi"), rail(bus, true, *s)));
        bindings.push((format!("{port}_lo"), rail(bus, false, *s)));
    }
    bindings.push(("q_hi".into(), rail(out, true, sym)));
    bindings.push(("q_lo".into(), rail(out, false, sym)));
    d.top.instances.push(Instance {
        id,
        cell: cell.name.clone(),
        bindings,
    });
    if !d.cells.contains_key(&cell.name) {
        d.add_cell(cell);
    }
}

fn ret_phase(stages: usize) -> Phase {
    Phase::wrap(stages as i64 + 1)
}

/// Shift register of `stages` stages on one bus of `k` symbols, with the
/// standard phase assignment.
pub fn shift_register(stages: usize, k: usize) -> Result<Design, CellError> {
    shift_register_with(k, &PhasePlan::standard(stages))
}

/// Shift register with an explicit (possibly illegal) phase plan.
pub fn shift_register_with(k: usize, plan: &PhasePlan) -> Result<Design, CellError> {
    let n = plan.stages();
    if n == 0 || plan.reverse.len() != n {
        return Err(CellError::NoStages);
    }
    if k == 0 {
        return Err(CellError::ZeroWidth);
    }
    let mut d = empty_design();
    for j in 0..=n {
        declare_bus(&mut d, &bus_name(j, 0), Phase::wrap(j as i64), k);
    }
    declare_bus(&mut d, "ret_0", ret_phase(n), k);
    for j in 1..=n {
        let (fd, fp) = plan.forward[j - 1];
        let (rd, rp) = plan.reverse[j - 1];
        let src = bus_name(j - 1, 0);
        let dst = bus_name(j, 0);
        let back = if j == n { "ret_0".to_string() } else { bus_name(j + 1, 0) };
        for sym in 0..k {
            place(&mut d, format!("f{j}_0_{sym}"), buffer(fd), fp, &[(src.clone(), sym)], &dst, sym);
        }
        for sym in 0..k {
            place(&mut d, format!("r{j}_0_{sym}"), buffer(rd), rp, &[(back.clone(), sym)], &dst, sym);
        }
    }
    Ok(d)
}

/// Builds a pipeline over an input word of `width` bits; `functions[j-1]`
/// computes `S_j` from `S_{j-1}`. `plan` defaults to the standard phases.
pub fn pipeline(
    width: usize,
    functions: &[StageFunction],
    plan: Option<&PhasePlan>,
) -> Result<(Design, PipelineReport), PipelineError> {
    let n = functions.len();
    if n == 0 {
        return Err(PipelineError::NoStages);
    }
    if width == 0 {
        return Err(PipelineError::ZeroWidth);
    }
    let standard = PhasePlan::standard(n);
    let plan = plan.unwrap_or(&standard);
    if plan.stages() != n || plan.reverse.len() != n {
        return Err(PipelineError::PlanLength {
            got: plan.stages().min(plan.reverse.len()),
            want: n,
        });
    }
    let mut widths = vec![width];
    for (j, f) in functions.iter().enumerate() {
        let stage = j + 1;
        if f.width() == 0 {
            return Err(PipelineError::EmptyStage { stage });
        }
        let w = widths[j];
        for (bit, e) in f.outputs.iter().enumerate() {
            if let Some(&input) = e.inputs().iter().find(|&&i| i >= w) {
                return Err(PipelineError::BadInput { stage, bit, input, width: w });
            }
        }
        widths.push(f.width());
    }
    let mut inverses = Vec::with_capacity(n);
    for j in 1..n {
        inverses.push(functions[j].inverse(widths[j], j + 1)?);
    }
    // the inverses are checked for stage 1 too, so a non-injective first
    // stage is rejected even though nothing decomputes S_0
    functions[0].inverse(widths[0], 1)?;
    inverses.push(StageFunction::identity(widths[n]));

    let mut d = empty_design();
    for (j, w) in widths.iter().enumerate() {
        for bit in 0..*w {
            declare_bus(&mut d, &bus_name(j, bit), Phase::wrap(j as i64), 2);
        }
    }
    for bit in 0..widths[n] {
        declare_bus(&mut d, &format!("ret_{bit}"), ret_phase(n), 2);
    }
    let mut complement_cells = 0;
    for j in 1..=n {
        let (fd, fp) = plan.forward[j - 1];
        let (rd, rp) = plan.reverse[j - 1];
        for (bit, e) in functions[j - 1].outputs.iter().enumerate() {
            for sym in 0..2 {
                let (base, ops) = e.realization(sym, fd);
                let inputs: Vec<(String, usize)> = ops.iter().map(|&(b, s)| (bus_name(j - 1, b), s)).collect();
                place(&mut d, format!("f{j}_{bit}_{sym}"), base, fp, &inputs, &bus_name(j, bit), sym);
                complement_cells += usize::from(sym == 0);
            }
        }
        for (bit, e) in inverses[j - 1].outputs.iter().enumerate() {
            for sym in 0..2 {
                let (base, ops) = e.realization(sym, rd);
                let inputs: Vec<(String, usize)> = ops
                    .iter()
                    .map(|&(b, s)| {
                        let bus = if j == n { format!("ret_{b}") } else { bus_name(j + 1, b) };
                        (bus, s)
                    })
                    .collect();
                place(&mut d, format!("r{j}_{bit}_{sym}"), base, rp, &inputs, &bus_name(j, bit), sym);
                complement_cells += usize::from(sym == 0);
            }
        }
    }
    let devices = d.device_count().expect("generated pipeline flattens");
    Ok((
        d,
        PipelineReport {
            inverses,
            complement_cells,
            devices,
        },
    ))
}

/// Stimulus for the primary inputs of a pipeline: `inputs[c]` is the word
/// injected into `S_0` in cycle `c` (`None` rests every bit). The `ret`
/// buses carry the resulting `S_N`, aligned to their phase.
pub fn return_stimulus(width: usize, functions: &[StageFunction], inputs: &[Option<Vec<bool>>]) -> Stimulus {
    let n = functions.len();
    let mut stim = Stimulus::default();
    for bit in 0..width {
        let syms = inputs.iter().map(|w| w.as_ref().map(|w| usize::from(w[bit]))).collect();
        stim.push(BusStimulus::new(bus_name(0, bit), Phase::wrap(0), syms));
    }
    let finals: Vec<Option<Vec<bool>>> = inputs
        .iter()
        .map(|w| w.as_ref().map(|w| functions.iter().fold(w.clone(), |x, f| f.apply(&x))))
        .collect();
    let out_width = functions.last().map_or(width, StageFunction::width);
    let shift = (n + 1) / PHASES as usize;
    for bit in 0..out_width {
        let mut syms = vec![None; shift];
        syms.extend(finals.iter().map(|w| w.as_ref().map(|w| usize::from(w[bit]))));
        stim.push(BusStimulus::new(format!("ret_{bit}"), ret_phase(n), syms));
    }
    stim
}

/// Stimulus for a `k`-symbol shift register: `symbols` enters `S_0` and the
/// same stream, shifted to the return phase, feeds `ret_0`.
pub fn shift_register_stimulus(stages: usize, symbols: &[Option<usize>]) -> Stimulus {
    let shift = (stages + 1) / PHASES as usize;
    let mut back = vec![None; shift];
    back.extend_from_slice(symbols);
    Stimulus::new(vec![
        BusStimulus::new(bus_name(0, 0), Phase::wrap(0), symbols.to_vec()),
        BusStimulus::new("ret_0", ret_phase(stages), back),
    ])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::netlist::{flatten, serialize, validate};

    #[test]
    fn shift_register_counts() {
        for n in 1..=9 {
            let d = shift_register(n, 1).unwrap();
            assert_eq!(d.device_count().unwrap(), 20 * n);
            let d = shift_register(n, 2).unwrap();
            assert_eq!(d.device_count().unwrap(), 40 * n);
            assert!(validate(&flatten(&d).unwrap()).is_empty());
        }
    }

    #[test]
    fn every_signal_has_two_isolated_sources() {
        let d = shift_register(8, 2).unwrap();
        let flat = flatten(&d).unwrap();
        for j in 1..=8 {
            for sym in 0..2 {
                let node = flat.node_index(&format!("s{j}_0_h{sym}")).unwrap();
                let drivers: Vec<&str> = flat
                    .devices
                    .iter()
                    .filter(|dv| dv.a == node || dv.b == node)
                    .map(|dv| dv.id.as_str())
                    .collect();
                assert_eq!(drivers.len(), 4, "{drivers:?}");
                assert!(drivers.iter().all(|id| id.contains("/pass_hi")));
                assert_eq!(drivers.iter().filter(|id| id.starts_with('f')).count(), 2);
                assert_eq!(drivers.iter().filter(|id| id.starts_with('r')).count(), 2);
            }
        }
    }

    #[test]
    fn identity_pipeline_is_the_shift_register() {
        let a = shift_register(5, 2).unwrap();
        let (b, rep) = pipeline(1, &vec![StageFunction::identity(1); 5], None).unwrap();
        assert_eq!(serialize(&a), serialize(&b));
        assert_eq!(rep.devices, 200);
    }

    #[test]
    fn swap_inverse() {
        let swap = StageFunction::new(vec![GateExpr::Buf(1), GateExpr::Buf(0)]);
        assert_eq!(swap.inverse(2, 1).unwrap(), swap);
        let not = StageFunction::new(vec![GateExpr::Not(0)]);
        assert_eq!(not.inverse(1, 1).unwrap(), not);
    }

    #[test]
    fn and_is_not_invertible() {
        let and = StageFunction::new(vec![GateExpr::And(0, 1)]);
        assert_eq!(
            pipeline(2, &[and], None).unwrap_err(),
            PipelineError::NonInvertible { stage: 1 }
        );
    }

    #[test]
    fn inexpressible_inverse() {
        // injective, but input 1 is y0 | (y1 & !y2): no single gate
        let f = StageFunction::new(vec![GateExpr::And(0, 1), GateExpr::Or(0, 1), GateExpr::Buf(0)]);
        assert_eq!(f.inverse(2, 4), Err(PipelineError::InexpressibleInverse { stage: 4, bit: 1 }));
        let g = StageFunction::new(vec![GateExpr::And(0, 1), GateExpr::Or(0, 1)]);
        assert_eq!(g.inverse(2, 1), Err(PipelineError::NonInvertible { stage: 1 }));
    }

    #[test]
    fn expression_syntax() {
        for s in ["b0", "!b1", "b0&b1", "b2|b0", "!(b0&b1)", "!(b1|b3)"] {
            let e: GateExpr = s.parse().unwrap();
            assert_eq!(e.to_string(), s);
        }
        assert!("c0".parse::<GateExpr>().is_err());
        let f: StageFunction = "b1,b0".parse().unwrap();
        assert_eq!(f.width(), 2);
    }

    #[test]
    fn return_stream_is_shifted() {
        let s = shift_register_stimulus(8, &[Some(1), None]);
        assert_eq!(s.bus("ret_0").unwrap().symbols, vec![None, Some(1), None]);
        assert_eq!(s.bus("ret_0").unwrap().phase, Phase::wrap(1));
        let s = shift_register_stimulus(3, &[Some(1)]);
        assert_eq!(s.bus("ret_0").unwrap().symbols, vec![Some(1)]);
    }
}
