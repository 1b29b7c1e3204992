// SPDX-License-Identifier: Apache-2.0

//! Circuit data model.
//!
//! Only four-terminal FETs exist as elements; capacitance lives on nodes.
//! Reference rails (constant supplies and clock phases) are declared once per
//! design and are visible from every cell. Cells may instantiate other cells;
//! [`flatten`] expands a hierarchy into a [`FlatNetlist`] with `/`-separated
//! instance paths.

mod parse;
mod validate;

use std::collections::{HashMap, HashSet};
use std::fmt;

use indexmap::IndexMap;
use thiserror::Error;

use crate::timing::{Phase, Polarity};

pub use parse::{parse, parse_number, serialize, ParseError, ParseErrorKind};
pub use validate::{validate, Finding, FindingKind};

pub const DEFAULT_CAP: f64 = 10e-15;
pub const DEFAULT_RON: f64 = 10e3;
/// Medium-impedance band for an on-state device, in ohms.
pub const MEDIUM_IMPEDANCE: (f64, f64) = (100.0, 100e3);

/// Level of a constant reference.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ConstLevel {
    Volts(f64),
    /// Tracks the configured supply voltage.
    Supply,
}

impl ConstLevel {
    pub fn volts(self, vdd: f64) -> f64 {
        match self {
            ConstLevel::Volts(v) => v,
            ConstLevel::Supply => vdd,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RailBinding {
    Const(ConstLevel),
    Clock { phase: Phase, polarity: Polarity },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Rail {
    pub name: String,
    pub binding: RailBinding,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NodeDecl {
    pub name: String,
    pub cap: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FetKind {
    N,
    P,
}

impl FetKind {
    pub fn as_str(self) -> &'static str {
        match self {
            FetKind::N => "n",
            FetKind::P => "p",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Device {
    pub id: String,
    pub kind: FetKind,
    pub gate: String,
    pub a: String,
    pub b: String,
    pub body: String,
    pub r_on: f64,
    /// Per-device threshold override.
    pub vt: Option<f64>,
}

impl Device {
    pub fn nfet(id: impl Into<String>, gate: &str, a: &str, b: &str) -> Self {
        Device {
            id: id.into(),
            kind: FetKind::N,
            gate: gate.into(),
            a: a.into(),
            b: b.into(),
            body: "gnd".into(),
            r_on: DEFAULT_RON,
            vt: None,
        }
    }

    pub fn pfet(id: impl Into<String>, gate: &str, a: &str, b: &str) -> Self {
        Device {
            id: id.into(),
            kind: FetKind::P,
            gate: gate.into(),
            a: a.into(),
            b: b.into(),
            body: "vdd".into(),
            r_on: DEFAULT_RON,
            vt: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Instance {
    pub id: String,
    pub cell: String,
    /// `(port, node)` pairs.
    pub bindings: Vec<(String, String)>,
}

/// A quad-rail bus: `k` symbols, each carried by an (active-high,
/// active-low) node pair, valid on the schedule of `phase`.
#[derive(Debug, Clone, PartialEq)]
pub struct BusDecl {
    pub name: String,
    pub phase: Phase,
    pub pairs: Vec<(String, String)>,
}

impl BusDecl {
    pub fn k(&self) -> usize {
        self.pairs.len()
    }

    pub fn nodes(&self) -> impl Iterator<Item = &str> {
        self.pairs.iter().flat_map(|(h, l)| [h.as_str(), l.as_str()])
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Cell {
    pub name: String,
    pub ports: Vec<String>,
    pub nodes: Vec<NodeDecl>,
    pub devices: Vec<Device>,
    pub instances: Vec<Instance>,
    pub buses: Vec<BusDecl>,
}

impl Cell {
    pub fn new(name: impl Into<String>) -> Self {
        Cell {
            name: name.into(),
            ..Default::default()
        }
    }

    pub fn with_ports(name: impl Into<String>, ports: &[&str]) -> Self {
        Cell {
            name: name.into(),
            ports: ports.iter().map(|p| p.to_string()).collect(),
            ..Default::default()
        }
    }

    pub fn add_node(&mut self, name: impl Into<String>) {
        self.nodes.push(NodeDecl {
            name: name.into(),
            cap: DEFAULT_CAP,
        });
    }

    pub fn remove_device(&mut self, id: &str) -> Option<Device> {
        let pos = self.devices.iter().position(|d| d.id == id)?;
        Some(self.devices.remove(pos))
    }

    pub fn device(&self, id: &str) -> Option<&Device> {
        self.devices.iter().find(|d| d.id == id)
    }
}

/// A parsed or generated design: global rails, a cell library, and the
/// top-level netlist.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Design {
    pub rails: Vec<Rail>,
    pub cells: IndexMap<String, Cell>,
    pub top: Cell,
}

impl Design {
    pub fn rail(&self, name: &str) -> Option<&Rail> {
        self.rails.iter().find(|r| r.name == name)
    }

    pub fn add_cell(&mut self, cell: Cell) {
        self.cells.insert(cell.name.clone(), cell);
    }

    /// Number of devices after flattening the top netlist.
    pub fn device_count(&self) -> Result<usize, FlattenError> {
        flatten(self).map(|f| f.devices.len())
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FlattenError {
    #[error("instance {instance}: unknown cell {cell}")]
    UnknownCell { instance: String, cell: String },
    #[error("instance {instance}: unresolved port {port} of cell {cell}")]
    UnresolvedPort { instance: String, cell: String, port: String },
    #[error("instance {instance}: cell {cell} has no port {port}")]
    NoSuchPort { instance: String, cell: String, port: String },
    #[error("recursive instantiation of cell {0}")]
    Recursive(String),
    #[error("{scope}: unknown node {name}")]
    UnknownNode { scope: String, name: String },
    #[error("{scope}: body of device {device} must be a reference rail, got {name}")]
    BodyNotRail { scope: String, device: String, name: String },
    #[error("duplicate id {0} after flattening")]
    Duplicate(String),
}

#[derive(Debug, Clone, PartialEq)]
pub enum FlatNodeKind {
    Internal { cap: f64 },
    Rail(RailBinding),
}

#[derive(Debug, Clone, PartialEq)]
pub struct FlatNode {
    pub name: String,
    pub kind: FlatNodeKind,
}

impl FlatNode {
    pub fn is_rail(&self) -> bool {
        matches!(self.kind, FlatNodeKind::Rail(_))
    }

    pub fn cap(&self) -> f64 {
        match self.kind {
            FlatNodeKind::Internal { cap } => cap,
            FlatNodeKind::Rail(_) => 0.0,
        }
    }

    /// Instance path owning this node; `top` for top-level nodes.
    pub fn owner(&self) -> &str {
        owner_of(&self.name)
    }
}

pub fn owner_of(name: &str) -> &str {
    match name.rfind('/') {
        Some(pos) => &name[..pos],
        None => "top",
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FlatDevice {
    pub id: String,
    pub kind: FetKind,
    pub gate: usize,
    pub a: usize,
    pub b: usize,
    /// Index of the body rail node.
    pub body: usize,
    pub r_on: f64,
    pub vt: Option<f64>,
}

/// Flattened netlist: one node table (rails first, then internal nodes) and
/// devices referring to it by index.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct FlatNetlist {
    pub nodes: Vec<FlatNode>,
    pub devices: Vec<FlatDevice>,
    /// Top-level buses with node indices.
    pub buses: Vec<FlatBus>,
    /// Port nodes of the flattened cell.
    pub ports: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FlatBus {
    pub name: String,
    pub phase: Phase,
    pub pairs: Vec<(usize, usize)>,
}

impl FlatNetlist {
    pub fn node_index(&self, name: &str) -> Option<usize> {
        self.nodes.iter().position(|n| n.name == name)
    }

    pub fn bus(&self, name: &str) -> Option<&FlatBus> {
        self.buses.iter().find(|b| b.name == name)
    }

    /// Nodes touched by at least one device channel.
    pub fn channel_nodes(&self) -> HashSet<usize> {
        self.devices.iter().flat_map(|d| [d.a, d.b]).collect()
    }

    /// Buses none of whose rails can be driven by a device channel; they
    /// must be supplied by stimuli.
    pub fn input_buses(&self) -> Vec<&FlatBus> {
        let driven = self.channel_nodes();
        self.buses
            .iter()
            .filter(|b| b.pairs.iter().all(|(h, l)| !driven.contains(h) && !driven.contains(l)))
            .collect()
    }
}

impl fmt::Display for FlatNetlist {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} nodes, {} devices", self.nodes.len(), self.devices.len())
    }
}

struct Flattener<'a> {
    design: &'a Design,
    out: FlatNetlist,
    index: HashMap<String, usize>,
    device_ids: HashSet<String>,
    stack: Vec<String>,
}

impl<'a> Flattener<'a> {
    fn intern(&mut self, name: String, kind: FlatNodeKind) -> Result<usize, FlattenError> {
        if self.index.contains_key(&name) {
            return Err(FlattenError::Duplicate(name));
        }
        let idx = self.out.nodes.len();
        self.index.insert(name.clone(), idx);
        self.out.nodes.push(FlatNode { name, kind });
        Ok(idx)
    }

    fn expand(&mut self, cell: &Cell, path: &str, scope: HashMap<String, usize>) -> Result<(), FlattenError> {
        if self.stack.contains(&cell.name) {
            return Err(FlattenError::Recursive(cell.name.clone()));
        }
        self.stack.push(cell.name.clone());
        let mangle = |name: &str| {
            if path.is_empty() {
                name.to_string()
            } else {
                format!("{path}/{name}")
            }
        };
        let mut scope = scope;
        for node in &cell.nodes {
            let idx = self.intern(mangle(&node.name), FlatNodeKind::Internal { cap: node.cap })?;
            scope.insert(node.name.clone(), idx);
        }
        let scope_name = if path.is_empty() { cell.name.clone() } else { path.to_string() };
        let design = self.design;
        let resolve = |name: &str, scope: &HashMap<String, usize>, index: &HashMap<String, usize>| {
            scope
                .get(name)
                .copied()
                .or_else(|| design.rail(name).and_then(|_| index.get(name).copied()))
                .ok_or_else(|| FlattenError::UnknownNode {
                    scope: scope_name.clone(),
                    name: name.to_string(),
                })
        };
        for dev in &cell.devices {
            let gate = resolve(&dev.gate, &scope, &self.index)?;
            let a = resolve(&dev.a, &scope, &self.index)?;
            let b = resolve(&dev.b, &scope, &self.index)?;
            let body = match design.rail(&dev.body) {
                Some(_) => self.index[&dev.body],
                None => {
                    return Err(FlattenError::BodyNotRail {
                        scope: scope_name.clone(),
                        device: dev.id.clone(),
                        name: dev.body.clone(),
                    })
                }
            };
            let id = mangle(&dev.id);
            if !self.device_ids.insert(id.clone()) {
                return Err(FlattenError::Duplicate(id));
            }
            self.out.devices.push(FlatDevice {
                id,
                kind: dev.kind,
                gate,
                a,
                b,
                body,
                r_on: dev.r_on,
                vt: dev.vt,
            });
        }
        for inst in &cell.instances {
            let child = design.cells.get(&inst.cell).ok_or_else(|| FlattenError::UnknownCell {
                instance: mangle(&inst.id),
                cell: inst.cell.clone(),
            })?;
            let mut child_scope = HashMap::new();
            for (port, node) in &inst.bindings {
                if !child.ports.contains(port) {
                    return Err(FlattenError::NoSuchPort {
                        instance: mangle(&inst.id),
                        cell: child.name.clone(),
                        port: port.clone(),
                    });
                }
                child_scope.insert(port.clone(), resolve(node, &scope, &self.index)?);
            }
            if let Some(port) = child.ports.iter().find(|p| !child_scope.contains_key(*p)) {
                return Err(FlattenError::UnresolvedPort {
                    instance: mangle(&inst.id),
                    cell: child.name.clone(),
                    port: port.clone(),
                });
            }
            self.expand(child, &mangle(&inst.id), child_scope)?;
        }
        self.stack.pop();
        Ok(())
    }
}

/// Flattens the design's top netlist.
pub fn flatten(design: &Design) -> Result<FlatNetlist, FlattenError> {
    flatten_cell(design, &design.top)
}

/// Flattens `cell` as the top of a hierarchy; its ports become top-level
/// internal nodes.
pub fn flatten_cell(design: &Design, cell: &Cell) -> Result<FlatNetlist, FlattenError> {
    let mut fl = Flattener {
        design,
        out: FlatNetlist::default(),
        index: HashMap::new(),
        device_ids: HashSet::new(),
        stack: Vec::new(),
    };
    for rail in &design.rails {
        fl.intern(rail.name.clone(), FlatNodeKind::Rail(rail.binding))?;
    }
    let mut scope = HashMap::new();
    for port in &cell.ports {
        let idx = fl.intern(port.clone(), FlatNodeKind::Internal { cap: DEFAULT_CAP })?;
        scope.insert(port.clone(), idx);
        fl.out.ports.push(idx);
    }
    fl.expand(cell, "", scope)?;
    let mut buses = Vec::new();
    for bus in &cell.buses {
        let mut pairs = Vec::new();
        for (h, l) in &bus.pairs {
            let find = |n: &str| {
                fl.index.get(n).copied().ok_or_else(|| FlattenError::UnknownNode {
                    scope: cell.name.clone(),
                    name: n.to_string(),
                })
            };
            pairs.push((find(h)?, find(l)?));
        }
        buses.push(FlatBus {
            name: bus.name.clone(),
            phase: bus.phase,
            pairs,
        });
    }
    fl.out.buses = buses;
    Ok(fl.out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rails() -> Vec<Rail> {
        vec![
            Rail {
                name: "gnd".into(),
                binding: RailBinding::Const(ConstLevel::Volts(0.0)),
            },
            Rail {
                name: "vdd".into(),
                binding: RailBinding::Const(ConstLevel::Supply),
            },
        ]
    }

    fn inverter_like() -> Cell {
        let mut c = Cell::with_ports("pair", &["x", "y", "g"]);
        c.add_node("mid");
        c.devices.push(Device::nfet("n0", "g", "x", "mid"));
        c.devices.push(Device::pfet("p0", "g", "mid", "y"));
        c
    }

    #[test]
    fn empty_cell_has_no_devices() {
        let d = Design {
            rails: rails(),
            ..Default::default()
        };
        assert_eq!(flatten(&d).unwrap().devices.len(), 0);
    }

    #[test]
    fn flatten_mangles_and_counts() {
        let mut d = Design {
            rails: rails(),
            ..Default::default()
        };
        d.add_cell(inverter_like());
        for n in ["a", "b", "c", "g"] {
            d.top.add_node(n);
        }
        for (i, (x, y)) in [("a", "b"), ("b", "c")].iter().enumerate() {
            d.top.instances.push(Instance {
                id: format!("u{i}"),
                cell: "pair".into(),
                bindings: vec![("x".into(), x.to_string()), ("y".into(), y.to_string()), ("g".into(), "g".into())],
            });
        }
        let flat = flatten(&d).unwrap();
        assert_eq!(flat.devices.len(), 4);
        assert!(flat.node_index("u1/mid").is_some());
        assert_eq!(flat.devices[2].id, "u1/n0");
        assert_eq!(flat.nodes[flat.devices[2].a].name, "b");
        assert_eq!(flat.nodes[flat.devices[0].body].name, "gnd");
    }

    #[test]
    fn unresolved_port_is_an_error() {
        let mut d = Design {
            rails: rails(),
            ..Default::default()
        };
        d.add_cell(inverter_like());
        d.top.add_node("a");
        d.top.instances.push(Instance {
            id: "u0".into(),
            cell: "pair".into(),
            bindings: vec![("x".into(), "a".into())],
        });
        assert!(matches!(flatten(&d), Err(FlattenError::UnresolvedPort { .. })));
    }

    #[test]
    fn recursion_is_rejected() {
        let mut d = Design {
            rails: rails(),
            ..Default::default()
        };
        let mut c = Cell::with_ports("loop", &["x"]);
        c.instances.push(Instance {
            id: "again".into(),
            cell: "loop".into(),
            bindings: vec![("x".into(), "x".into())],
        });
        d.add_cell(c);
        d.top.add_node("a");
        d.top.instances.push(Instance {
            id: "u".into(),
            cell: "loop".into(),
            bindings: vec![("x".into(), "a".into())],
        });
        assert_eq!(flatten(&d), Err(FlattenError::Recursive("loop".into())));
    }
}
