// SPDX-License-Identifier: Apache-2.0

mod common;

use common::{decode, valid_tick};
use s2lal::cells::{gate_testbench, GateKind};
use s2lal::checker::check_trace;
use s2lal::engine::{run, Circuit, SimConfig, Trace};
use s2lal::netlist::flatten;
use s2lal::stimulus::{BusStimulus, Stimulus};
use s2lal::timing::Phase;

const COMBOS: [(bool, bool); 4] = [(false, false), (true, false), (false, true), (true, true)];

fn bench(kind: GateKind, a: &[Option<bool>], b: &[Option<bool>]) -> (Circuit, Trace) {
    let net = flatten(&gate_testbench(kind, Phase::wrap(1))).unwrap();
    let mut buses = vec![BusStimulus::from_bits("a", Phase::wrap(0), a)];
    if kind.inputs() == 2 {
        buses.push(BusStimulus::from_bits("b", Phase::wrap(0), b));
    }
    let ticks = 8 * (a.len() as u64 + 1);
    run(&net, &Stimulus::new(buses), &SimConfig { ticks, ..Default::default() }).unwrap()
}

#[test]
fn truth_tables() {
    for kind in GateKind::ALL {
        let a: Vec<Option<bool>> = COMBOS.iter().map(|c| Some(c.0)).chain([None]).collect();
        let b: Vec<Option<bool>> = COMBOS.iter().map(|c| Some(c.1)).chain([None]).collect();
        let (c, trace) = bench(kind, &a, &b);
        let v = check_trace(&c, &trace);
        assert!(v.is_empty(), "{kind}: {}", v[0]);
        for (cycle, &(x, y)) in COMBOS.iter().enumerate() {
            let want = usize::from(kind.eval(x, y));
            let got = decode(&c, &trace, "q", 2, valid_tick(1, cycle as u64));
            assert_eq!(got, Some(want), "{kind}({x}, {y})");
        }
        // resting inputs leave the output at rest
        assert_eq!(decode(&c, &trace, "q", 2, valid_tick(1, 4)), None, "{kind}");
    }
}

#[test]
fn outputs_pulse_once_per_active_cycle() {
    let (c, trace) = bench(GateKind::Buffer, &[Some(true), None], &[]);
    let q = c.net.node_index("q_h1").unwrap();
    let rises: Vec<u64> = trace.charges.iter().filter(|e| e.node == q).map(|e| e.end).collect();
    // up during tick 1, down during tick 5
    assert_eq!(rises, vec![32, 96]);
}

fn swap_input_rails(name: &str) -> String {
    for bus in ["a", "b"] {
        for rail in ["h", "l"] {
            for (from, to) in [("1", "0"), ("0", "1")] {
                if name == format!("{bus}_{rail}{from}") {
                    return format!("{bus}_{rail}{to}");
                }
            }
        }
    }
    name.to_string()
}

fn demorgan_pair(inverting: GateKind, plain: GateKind) {
    let a: Vec<Option<bool>> = COMBOS.iter().map(|c| Some(c.0)).collect();
    let b: Vec<Option<bool>> = COMBOS.iter().map(|c| Some(c.1)).collect();
    let not = |v: &[Option<bool>]| v.iter().map(|x| x.map(|x| !x)).collect::<Vec<_>>();
    let (c1, t1) = bench(inverting, &a, &b);
    let (c2, t2) = bench(plain, &not(&a), &not(&b));
    assert_eq!(c1.node_count(), c2.node_count());
    for n in 0..c1.node_count() {
        let other = c2.net.node_index(&swap_input_rails(c1.node_name(n))).unwrap();
        for k in 0..t1.len() {
            assert_eq!(t1.voltage(n, k), t2.voltage(other, k), "{} at step {k}", c1.node_name(n));
        }
    }
}

#[test]
fn nand_is_or_of_complements() {
    demorgan_pair(GateKind::Nand, GateKind::Or);
}

#[test]
fn nor_is_and_of_complements() {
    demorgan_pair(GateKind::Nor, GateKind::And);
}
