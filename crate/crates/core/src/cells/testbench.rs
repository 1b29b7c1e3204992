// SPDX-License-Identifier: Apache-2.0

//! Full two-symbol test benches around single gates.

use std::fmt;
use std::str::FromStr;

use super::{and_gate, buffer, empty_design, nand_gate, nor_gate, not_gate, or_gate};
use crate::netlist::{BusDecl, Cell, Design, Instance};
use crate::timing::Phase;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum GateKind {
    Buffer,
    Not,
    And,
    Or,
    Nand,
    Nor,
}

impl GateKind {
    pub const ALL: [GateKind; 6] = [
        GateKind::Buffer,
        GateKind::Not,
        GateKind::And,
        GateKind::Or,
        GateKind::Nand,
        GateKind::Nor,
    ];

    pub fn inputs(self) -> usize {
        match self {
            GateKind::Buffer | GateKind::Not => 1,
            _ => 2,
        }
    }

    /// Boolean semantics; `b` is ignored for one-input gates.
    pub fn eval(self, a: bool, b: bool) -> bool {
        match self {
            GateKind::Buffer => a,
            GateKind::Not => !a,
            GateKind::And => a && b,
            GateKind::Or => a || b,
            GateKind::Nand => !(a && b),
            GateKind::Nor => !(a || b),
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            GateKind::Buffer => "buffer",
            GateKind::Not => "not",
            GateKind::And => "and",
            GateKind::Or => "or",
            GateKind::Nand => "nand",
            GateKind::Nor => "nor",
        }
    }
}

impl fmt::Display for GateKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for GateKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        GateKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s || (s == "buf" && *k == GateKind::Buffer))
            .ok_or_else(|| format!("unknown gate '{s}'"))
    }
}

fn bus_node(bus: &str, hi: bool, sym: usize) -> String {
    format!("{bus}_{}{sym}", if hi { "h" } else { "l" })
}

/// Binds a dual-rail base cell (`a_*`, `b_*`, `q_*`) to bus symbols.
fn bind_dual(cell: &Cell, id: &str, inputs: &[(&str, usize)], out_sym: usize) -> Instance {
    let mut bindings = Vec::new();
    for (port, (bus, sym)) in ["a", "b"].iter().zip(inputs) {
        bindings.push((format!("{port}_hi"), bus_node(bus, true, *sym)));
        bindings.push((format!("{port}_lo"), bus_node(bus, false, *sym)));
    }
    bindings.push(("q_hi".into(), bus_node("q", true, out_sym)));
    bindings.push(("q_lo".into(), bus_node("q", false, out_sym)));
    Instance {
        id: id.into(),
        cell: cell.name.clone(),
        bindings,
    }
}

/// Binds a derived gate (`a1_* a0_* b1_* b0_* q_*`) to the full buses.
fn bind_full(cell: &Cell, id: &str, out_sym: usize) -> Instance {
    let mut bindings = Vec::new();
    for port in &cell.ports {
        let node = if let Some(rest) = port.strip_prefix("q_") {
            bus_node("q", rest == "hi", out_sym)
        } else {
            let (bus, tail) = port.split_at(1);
            let sym: usize = tail[..1].parse().expect("two-symbol port");
            bus_node(bus, tail.ends_with("_hi"), sym)
        };
        bindings.push((port.clone(), node));
    }
    Instance {
        id: id.into(),
        cell: cell.name.clone(),
        bindings,
    }
}

/// Two-symbol test bench for `kind` driven on `drive`.
///
/// Input buses `a` (and `b`) sit on the preceding phase; the output bus `q`
/// carries both symbols, each produced by its own cell. Instance `g1`
/// produces the true symbol and `g0` the false one.
pub fn gate_testbench(kind: GateKind, drive: Phase) -> Design {
    let mut d = empty_design();
    let in_phase = drive.offset(-1);
    let inputs: &[&str] = if kind.inputs() == 1 { &["a"] } else { &["a", "b"] };
    for bus in inputs.iter().chain(&["q"]) {
        let mut pairs = Vec::new();
        for sym in 0..2 {
            let (h, l) = (bus_node(bus, true, sym), bus_node(bus, false, sym));
            d.top.add_node(h.clone());
            d.top.add_node(l.clone());
            pairs.push((h, l));
        }
        d.top.buses.push(BusDecl {
            name: bus.to_string(),
            phase: if *bus == "q" { drive } else { in_phase },
            pairs,
        });
    }
    let pair = |sym| [("a", sym), ("b", sym)];
    let (g1, g0) = match kind {
        GateKind::Buffer => {
            let c = buffer(drive);
            let i1 = bind_dual(&c, "g1", &[("a", 1)], 1);
            let i0 = bind_dual(&c, "g0", &[("a", 0)], 0);
            d.add_cell(c);
            (i1, i0)
        }
        GateKind::Not => {
            let (n, b) = (not_gate(drive), buffer(drive));
            let i1 = bind_full(&n, "g1", 1);
            let i0 = bind_dual(&b, "g0", &[("a", 1)], 0);
            d.add_cell(n);
            d.add_cell(b);
            (i1, i0)
        }
        GateKind::And | GateKind::Or => {
            let (c1, c0) = if kind == GateKind::And {
                (and_gate(drive), or_gate(drive))
            } else {
                (or_gate(drive), and_gate(drive))
            };
            let i1 = bind_dual(&c1, "g1", &pair(1), 1);
            let i0 = bind_dual(&c0, "g0", &pair(0), 0);
            d.add_cell(c1);
            d.add_cell(c0);
            (i1, i0)
        }
        GateKind::Nand | GateKind::Nor => {
            let (c1, c0) = if kind == GateKind::Nand {
                (nand_gate(drive), and_gate(drive))
            } else {
                (nor_gate(drive), or_gate(drive))
            };
            let i1 = bind_full(&c1, "g1", 1);
            let i0 = bind_dual(&c0, "g0", &pair(1), 0);
            d.add_cell(c1);
            d.add_cell(c0);
            (i1, i0)
        }
    };
    d.top.instances.push(g1);
    d.top.instances.push(g0);
    d
}
