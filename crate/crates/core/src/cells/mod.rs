// SPDX-License-Identifier: Apache-2.0

//! Cell generators.
//!
//! Every generated design uses the same rail set: `gnd` at 0 V, `vdd` at the
//! configured supply, and one active-high clock network `phi0..phi7` per
//! phase. The active-low clock of phase `i` is the active-high network of
//! phase `i + 4`, so no separate active-low rails exist.
//!
//! Dual-rail ports are named `<x>_hi` / `<x>_lo`. Cells built on two-symbol
//! inputs use `<x>1_*` for the true symbol and `<x>0_*` for the false one.

mod pipeline;
mod testbench;

use thiserror::Error;

use crate::netlist::{BusDecl, Cell, ConstLevel, Design, Device, Instance, Rail, RailBinding};
use crate::timing::{Phase, Polarity};

pub use pipeline::{
    pipeline, return_stimulus, shift_register, shift_register_stimulus, shift_register_with, GateExpr, PhasePlan, PipelineError, PipelineReport,
    StageFunction,
};
pub use testbench::{gate_testbench, GateKind};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CellError {
    #[error("pass phase {pass} must differ from drive phase {drive} and from its complement")]
    InvalidPass { drive: u8, pass: u8 },
    #[error("shift register needs at least one stage")]
    NoStages,
    #[error("bus width must be at least 1")]
    ZeroWidth,
}

pub const GND: &str = "gnd";
pub const VDD: &str = "vdd";

/// Name of the active-high clock network of `phase`.
pub fn clock(phase: Phase) -> String {
    format!("phi{}", phase.index())
}

/// Name of the active-low clock of `phase`, which is an active-high network.
pub fn clock_lo(phase: Phase) -> String {
    clock(phase.complement())
}

pub fn standard_rails() -> Vec<Rail> {
    let mut rails = vec![
        Rail {
            name: GND.into(),
            binding: RailBinding::Const(ConstLevel::Volts(0.0)),
        },
        Rail {
            name: VDD.into(),
            binding: RailBinding::Const(ConstLevel::Supply),
        },
    ];
    rails.extend(Phase::all().map(|p| Rail {
        name: clock(p),
        binding: RailBinding::Clock {
            phase: p,
            polarity: Polarity::Hi,
        },
    }));
    rails
}

/// Empty design carrying the standard rails.
pub fn empty_design() -> Design {
    let mut d = Design {
        rails: standard_rails(),
        ..Default::default()
    };
    d.top.name = "top".into();
    d
}

fn hi(x: &str) -> String {
    format!("{x}_hi")
}

fn lo(x: &str) -> String {
    format!("{x}_lo")
}

/// Adds an nFET/pFET pair between `a` and `b`; the pair conducts when the
/// `ctl` signal pair is active.
pub(crate) fn add_tgate(cell: &mut Cell, id: &str, a: &str, b: &str, ctl_hi: &str, ctl_lo: &str) {
    cell.devices.push(Device::nfet(format!("{id}n"), ctl_hi, a, b));
    cell.devices.push(Device::pfet(format!("{id}p"), ctl_lo, a, b));
}

/// Bare transmission gate: ports `a`, `b` and control pair `c_hi`/`c_lo`.
pub fn tgate() -> Cell {
    let mut c = Cell::with_ports("tgate", &["a", "b", "c_hi", "c_lo"]);
    add_tgate(&mut c, "t", "a", "b", "c_hi", "c_lo");
    c
}

fn buffer_devices(c: &mut Cell, drive: Phase, a: &str, q: &str) {
    let (phi, phi_lo) = (clock(drive), clock_lo(drive));
    add_tgate(c, "t_hi", &phi, &hi(q), &hi(a), &lo(a));
    add_tgate(c, "t_lo", &phi_lo, &lo(q), &hi(a), &lo(a));
    c.devices.push(Device::nfet("h_hi", &lo(a), &hi(q), GND));
    c.devices.push(Device::pfet("h_lo", &hi(a), &lo(q), VDD));
}

/// Unlatched buffer driven by phase `drive`: ports `a_hi a_lo q_hi q_lo`.
pub fn buffer(drive: Phase) -> Cell {
    let mut c = Cell::with_ports(format!("buf_p{}", drive.index()), &["a_hi", "a_lo", "q_hi", "q_lo"]);
    buffer_devices(&mut c, drive, "a", "q");
    c
}

/// AND driven by `drive`: ports `a_* b_* q_*`.
pub fn and_gate(drive: Phase) -> Cell {
    let mut c = Cell::with_ports(
        format!("and_p{}", drive.index()),
        &["a_hi", "a_lo", "b_hi", "b_lo", "q_hi", "q_lo"],
    );
    c.add_node("x_hi");
    c.add_node("x_lo");
    let (phi, phi_lo) = (clock(drive), clock_lo(drive));
    add_tgate(&mut c, "ta_hi", &phi, "x_hi", "a_hi", "a_lo");
    add_tgate(&mut c, "tb_hi", "x_hi", "q_hi", "b_hi", "b_lo");
    c.devices.push(Device::nfet("hx_hi", "a_lo", "x_hi", GND));
    c.devices.push(Device::nfet("ha_hi", "a_lo", "q_hi", GND));
    c.devices.push(Device::nfet("hb_hi", "b_lo", "q_hi", GND));
    add_tgate(&mut c, "ta_lo", &phi_lo, "x_lo", "a_hi", "a_lo");
    add_tgate(&mut c, "tb_lo", "x_lo", "q_lo", "b_hi", "b_lo");
    c.devices.push(Device::pfet("hx_lo", "a_hi", "x_lo", VDD));
    c.devices.push(Device::pfet("ha_lo", "a_hi", "q_lo", VDD));
    c.devices.push(Device::pfet("hb_lo", "b_hi", "q_lo", VDD));
    c
}

/// OR driven by `drive`: ports `a_* b_* q_*`.
pub fn or_gate(drive: Phase) -> Cell {
    let mut c = Cell::with_ports(
        format!("or_p{}", drive.index()),
        &["a_hi", "a_lo", "b_hi", "b_lo", "q_hi", "q_lo"],
    );
    c.add_node("y_hi");
    c.add_node("y_lo");
    let (phi, phi_lo) = (clock(drive), clock_lo(drive));
    add_tgate(&mut c, "ta_hi", &phi, "q_hi", "a_hi", "a_lo");
    add_tgate(&mut c, "tb_hi", &phi, "q_hi", "b_hi", "b_lo");
    c.devices.push(Device::nfet("hb_hi", "b_lo", "q_hi", "y_hi"));
    c.devices.push(Device::nfet("ha_hi", "a_lo", "y_hi", GND));
    add_tgate(&mut c, "ty_hi", &phi, "y_hi", "a_hi", "a_lo");
    add_tgate(&mut c, "ta_lo", &phi_lo, "q_lo", "a_hi", "a_lo");
    add_tgate(&mut c, "tb_lo", &phi_lo, "q_lo", "b_hi", "b_lo");
    c.devices.push(Device::pfet("hb_lo", "b_hi", "q_lo", "y_lo"));
    c.devices.push(Device::pfet("ha_lo", "a_hi", "y_lo", VDD));
    add_tgate(&mut c, "ty_lo", &phi_lo, "y_lo", "a_hi", "a_lo");
    c
}

/// Rebinds `base`'s dual-rail inputs onto two-symbol ports. `map` pairs each
/// base input (`a`, `b`) with the full-bus port prefix feeding it.
fn rebind(base: Cell, name: String, inputs: &[&str], map: &[(&str, &str)]) -> Cell {
    let mut ports = Vec::new();
    for x in inputs {
        for sym in ["1", "0"] {
            ports.push(format!("{x}{sym}_hi"));
            ports.push(format!("{x}{sym}_lo"));
        }
    }
    ports.push("q_hi".into());
    ports.push("q_lo".into());
    let rename = |n: &str| {
        for (from, to) in map {
            for pol in ["_hi", "_lo"] {
                if n == format!("{from}{pol}") {
                    return format!("{to}{pol}");
                }
            }
        }
        n.to_string()
    };
    let mut c = Cell::new(name);
    c.ports = ports;
    c.nodes = base.nodes;
    c.devices = base
        .devices
        .into_iter()
        .map(|mut d| {
            d.gate = rename(&d.gate);
            d.a = rename(&d.a);
            d.b = rename(&d.b);
            d
        })
        .collect();
    c
}

/// NOT of the true symbol: a buffer reading the false symbol.
pub fn not_gate(drive: Phase) -> Cell {
    rebind(buffer(drive), format!("not_p{}", drive.index()), &["a"], &[("a", "a0")])
}

/// NAND of the true symbols: OR over the false symbols.
pub fn nand_gate(drive: Phase) -> Cell {
    rebind(
        or_gate(drive),
        format!("nand_p{}", drive.index()),
        &["a", "b"],
        &[("a", "a0"), ("b", "b0")],
    )
}

/// NOR of the true symbols: AND over the false symbols.
pub fn nor_gate(drive: Phase) -> Cell {
    rebind(
        and_gate(drive),
        format!("nor_p{}", drive.index()),
        &["a", "b"],
        &[("a", "a0"), ("b", "b0")],
    )
}

/// Wraps `base` (outputs `q_*`) so its outputs pass through T-gates clocked
/// by `pass` before reaching the ports.
pub fn latched(base: &Cell, pass: Phase) -> Cell {
    let mut c = base.clone();
    c.name = format!("{}_l{}", base.name, pass.index());
    let rename = |n: &mut String| {
        if n == "q_hi" {
            *n = "qi_hi".into();
        } else if n == "q_lo" {
            *n = "qi_lo".into();
        }
    };
    for d in &mut c.devices {
        rename(&mut d.gate);
        rename(&mut d.a);
        rename(&mut d.b);
    }
    c.add_node("qi_hi");
    c.add_node("qi_lo");
    let (phi, phi_lo) = (clock(pass), clock_lo(pass));
    add_tgate(&mut c, "pass_hi", "qi_hi", "q_hi", &phi, &phi_lo);
    add_tgate(&mut c, "pass_lo", "qi_lo", "q_lo", &phi, &phi_lo);
    c
}

/// Latching buffer: drive phase `drive`, output T-gates on phase `pass`.
pub fn latching_buffer(drive: Phase, pass: Phase) -> Result<Cell, CellError> {
    if pass == drive || pass == drive.complement() {
        return Err(CellError::InvalidPass {
            drive: drive.index(),
            pass: pass.index(),
        });
    }
    Ok(latching_buffer_unchecked(drive, pass))
}

/// Latching buffer without the phase check, for fault studies.
pub fn latching_buffer_unchecked(drive: Phase, pass: Phase) -> Cell {
    latched(&buffer(drive), pass)
}

/// Standalone design around one cell: each port becomes a top node and port
/// groups `<x>_hi/_lo` or `<x><sym>_hi/_lo` become buses. Inputs sit on the
/// phase before `drive`; the output bus `q` on `drive`.
pub fn standalone(cell: Cell, drive: Phase) -> Design {
    let mut d = empty_design();
    let mut groups: Vec<(String, Vec<(usize, String, String)>)> = Vec::new();
    for port in &cell.ports {
        d.top.add_node(port.clone());
        let Some(stem) = port.strip_suffix("_hi") else { continue };
        let digits = stem.trim_start_matches(|c: char| c.is_ascii_alphabetic()).len();
        let (bus, sym) = stem.split_at(stem.len() - digits);
        let sym = sym.parse::<usize>().unwrap_or(0);
        let pair = (sym, port.clone(), lo(stem));
        match groups.iter_mut().find(|(b, _)| b == bus) {
            Some((_, v)) => v.push(pair),
            None => groups.push((bus.to_string(), vec![pair])),
        }
    }
    for (bus, mut pairs) in groups {
        pairs.sort();
        let phase = if bus == "q" { drive } else { drive.offset(-1) };
        d.top.buses.push(BusDecl {
            name: bus,
            phase,
            pairs: pairs.into_iter().map(|(_, h, l)| (h, l)).collect(),
        });
    }
    d.top.instances.push(Instance {
        id: "u0".into(),
        cell: cell.name.clone(),
        bindings: cell.ports.iter().map(|p| (p.clone(), p.clone())).collect(),
    });
    d.add_cell(cell);
    d
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::netlist::{flatten, flatten_cell, validate};

    fn count(cell: &Cell) -> usize {
        flatten_cell(&empty_design(), cell).unwrap().devices.len()
    }

    #[test]
    fn device_counts() {
        let p = Phase::wrap(0);
        assert_eq!(count(&tgate()), 2);
        assert_eq!(count(&buffer(p)), 6);
        assert_eq!(count(&latching_buffer(p, Phase::wrap(7)).unwrap()), 10);
        assert_eq!(count(&and_gate(p)), 14);
        assert_eq!(count(&or_gate(p)), 16);
        assert_eq!(count(&not_gate(p)), 6);
        assert_eq!(count(&nand_gate(p)), 16);
        assert_eq!(count(&nor_gate(p)), 14);
    }

    #[test]
    fn tgate_terminals() {
        let flat = flatten_cell(&empty_design(), &tgate()).unwrap();
        let mut terms: Vec<usize> = flat.devices.iter().flat_map(|d| [d.gate, d.a, d.b]).collect();
        terms.sort();
        terms.dedup();
        // a, b and the two controls; the channel pair is shared
        let channel: std::collections::HashSet<_> = flat.devices.iter().flat_map(|d| [d.a, d.b]).collect();
        assert_eq!(channel.len(), 2);
        assert_eq!(terms.len(), 4);
    }

    #[test]
    fn pass_phase_rules() {
        for i in 0..8 {
            let d = Phase::wrap(i);
            assert!(latching_buffer(d, d).is_err());
            assert!(latching_buffer(d, d.complement()).is_err());
            for j in 0..8 {
                let p = Phase::wrap(j);
                if p != d && p != d.complement() {
                    assert!(latching_buffer(d, p).is_ok());
                }
            }
        }
    }

    #[test]
    fn generated_cells_validate_clean() {
        for i in 0..8 {
            let p = Phase::wrap(i);
            for cell in [
                buffer(p),
                latching_buffer(p, p.offset(-1)).unwrap(),
                and_gate(p),
                or_gate(p),
                not_gate(p),
                nand_gate(p),
                nor_gate(p),
            ] {
                let d = standalone(cell, p);
                let f = validate(&flatten(&d).unwrap());
                assert!(f.is_empty(), "{f:?}");
            }
        }
    }

    #[test]
    fn standalone_buses() {
        let d = standalone(nand_gate(Phase::wrap(2)), Phase::wrap(2));
        let a = d.top.buses.iter().find(|b| b.name == "a").unwrap();
        assert_eq!(a.phase, Phase::wrap(1));
        assert_eq!(a.pairs[0], ("a0_hi".to_string(), "a0_lo".to_string()));
        assert_eq!(a.pairs[1], ("a1_hi".to_string(), "a1_lo".to_string()));
        let q = d.top.buses.iter().find(|b| b.name == "q").unwrap();
        assert_eq!(q.phase, Phase::wrap(2));
        assert_eq!(q.pairs.len(), 1);
    }

    #[test]
    fn derived_gates_keep_internal_names() {
        let p = Phase::wrap(0);
        let (n, o) = (nand_gate(p), or_gate(p));
        assert_eq!(n.nodes, o.nodes);
        let ids = |c: &Cell| c.devices.iter().map(|d| d.id.clone()).collect::<Vec<_>>();
        assert_eq!(ids(&n), ids(&o));
        assert!(n.devices.iter().all(|d| !d.gate.starts_with("a_") && !d.gate.starts_with("b_")));
    }
}
