// SPDX-License-Identifier: Apache-2.0

//! Structural checks on a flattened netlist.

use std::collections::HashSet;
use std::fmt;

use super::{ConstLevel, FetKind, FlatNetlist, FlatNodeKind, RailBinding, MEDIUM_IMPEDANCE};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FindingKind {
    /// On-resistance outside the medium-impedance band.
    ImpedanceBand,
    /// nFET body not on a constant rail at or below ground, or pFET body not
    /// on the supply.
    BodyBinding,
    /// Gate node that nothing can drive.
    FloatingGate,
    /// Both channel terminals on the same node.
    DegenerateChannel,
}

impl FindingKind {
    pub fn as_str(self) -> &'static str {
        match self {
            FindingKind::ImpedanceBand => "impedance-band",
            FindingKind::BodyBinding => "body-binding",
            FindingKind::FloatingGate => "floating-gate",
            FindingKind::DegenerateChannel => "degenerate-channel",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Finding {
    pub kind: FindingKind,
    /// Device or node id the finding is about.
    pub subject: String,
    pub message: String,
}

impl fmt::Display for Finding {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {}: {}", self.kind.as_str(), self.subject, self.message)
    }
}

/// Returns every structural finding; empty means clean.
pub fn validate(net: &FlatNetlist) -> Vec<Finding> {
    let mut out = Vec::new();
    let channel = net.channel_nodes();
    let externally_driven: HashSet<usize> = net
        .ports
        .iter()
        .copied()
        .chain(net.buses.iter().flat_map(|b| b.pairs.iter().flat_map(|&(h, l)| [h, l])))
        .collect();
    let mut reported_gates = HashSet::new();

    for d in &net.devices {
        let (lo, hi) = MEDIUM_IMPEDANCE;
        if !(lo..=hi).contains(&d.r_on) {
            out.push(Finding {
                kind: FindingKind::ImpedanceBand,
                subject: d.id.clone(),
                message: format!("r_on {} ohm outside medium-impedance band [{lo}, {hi}]", d.r_on),
            });
        }

        let body = &net.nodes[d.body];
        let body_ok = match (&body.kind, d.kind) {
            (FlatNodeKind::Rail(RailBinding::Const(ConstLevel::Volts(v))), FetKind::N) => *v <= 0.0,
            (FlatNodeKind::Rail(RailBinding::Const(ConstLevel::Supply)), FetKind::P) => true,
            (FlatNodeKind::Rail(RailBinding::Const(ConstLevel::Volts(v))), FetKind::P) => *v > 0.0,
            _ => false,
        };
        if !body_ok {
            let expect = match d.kind {
                FetKind::N => "a constant rail at or below ground",
                FetKind::P => "the supply rail",
            };
            out.push(Finding {
                kind: FindingKind::BodyBinding,
                subject: d.id.clone(),
                message: format!("{}fet body bound to {}, expected {expect}", d.kind.as_str(), body.name),
            });
        }

        if d.a == d.b {
            out.push(Finding {
                kind: FindingKind::DegenerateChannel,
                subject: d.id.clone(),
                message: format!("both channel terminals on {}", net.nodes[d.a].name),
            });
        }

        let gate = d.gate;
        if !net.nodes[gate].is_rail()
            && !channel.contains(&gate)
            && !externally_driven.contains(&gate)
            && reported_gates.insert(gate)
        {
            out.push(Finding {
                kind: FindingKind::FloatingGate,
                subject: net.nodes[gate].name.clone(),
                message: format!("gate of {} is not connected to any driver", d.id),
            });
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::super::{flatten, parse};
    use super::*;

    const RAILS: &str = ".ref gnd const 0\n.ref vdd const vdd\n.rail phi0 clock phase=0 pol=hi\n";

    fn findings(body: &str) -> Vec<Finding> {
        let d = parse(&format!("{RAILS}{body}")).unwrap();
        validate(&flatten(&d).unwrap())
    }

    #[test]
    fn clean_pair() {
        let f = findings(".node a\n.node b\n.fet n m0 gate=phi0 a=a b=gnd body=gnd\n.fet p m1 gate=phi0 a=b b=vdd body=vdd\n");
        assert!(f.is_empty(), "{f:?}");
    }

    #[test]
    fn ron_out_of_band() {
        let f = findings(".node a\n.fet n m0 gate=phi0 a=a b=gnd body=gnd ron=10meg\n");
        assert_eq!(f.len(), 1);
        assert_eq!(f[0].kind, FindingKind::ImpedanceBand);
        assert!(f[0].message.contains("outside medium-impedance band"));
    }

    #[test]
    fn nfet_body_on_supply() {
        let f = findings(".node a\n.fet n m0 gate=phi0 a=a b=gnd body=vdd\n");
        assert_eq!(f[0].kind, FindingKind::BodyBinding);
        let f = findings(".node a\n.fet p m0 gate=phi0 a=a b=vdd body=gnd\n");
        assert_eq!(f[0].kind, FindingKind::BodyBinding);
        let f = findings(".node a\n.fet n m0 gate=a a=phi0 b=gnd body=phi0\n");
        assert!(f.iter().any(|x| x.kind == FindingKind::BodyBinding));
    }

    #[test]
    fn floating_gate() {
        let f = findings(".node a\n.node g\n.fet n m0 gate=g a=a b=gnd body=gnd\n");
        assert_eq!(f.len(), 1);
        assert_eq!(f[0].kind, FindingKind::FloatingGate);
        assert_eq!(f[0].subject, "g");
    }

    #[test]
    fn degenerate_channel() {
        let f = findings(".node a\n.fet n m0 gate=phi0 a=a b=a body=gnd\n");
        assert!(f.iter().any(|x| x.kind == FindingKind::DegenerateChannel));
    }
}
