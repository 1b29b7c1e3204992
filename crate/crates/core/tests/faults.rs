// SPDX-License-Identifier: Apache-2.0

//! Single-fault mutations of generated circuits must be caught quickly.

use s2lal::cells::{gate_testbench, shift_register_stimulus, shift_register_with, GateKind, PhasePlan};
use s2lal::checker::{check_trace, Violation, ViolationKind};
use s2lal::engine::{simulate_partial, Circuit, SimConfig};
use s2lal::netlist::{flatten, Design};
use s2lal::stimulus::{BusStimulus, Stimulus};
use s2lal::timing::Phase;

const TWO_PERIODS: u64 = 16;

fn violations(d: &Design, stim: &Stimulus, ticks: u64) -> Vec<Violation> {
    let net = flatten(d).unwrap();
    let config = SimConfig { ticks, ..Default::default() };
    let c = Circuit::compile(&net, stim, &config).unwrap();
    // a badly broken circuit may stop settling; what was seen up to then counts
    let (trace, _) = simulate_partial(&c, &config).unwrap();
    check_trace(&c, &trace)
}

fn register(plan: &PhasePlan) -> Vec<Violation> {
    let d = shift_register_with(2, plan).unwrap();
    let stim = shift_register_stimulus(plan.stages(), &[Some(1), Some(0), Some(1)]);
    violations(&d, &stim, TWO_PERIODS)
}

fn and_bench_without(device: &str) -> Vec<Violation> {
    let mut d = gate_testbench(GateKind::And, Phase::wrap(1));
    d.cells.get_mut("and_p1").unwrap().remove_device(device).unwrap();
    let stim = Stimulus::new(vec![
        BusStimulus::new("a", Phase::wrap(0), vec![Some(0), Some(1), Some(0), Some(1)]),
        BusStimulus::new("b", Phase::wrap(0), vec![Some(0), Some(0), Some(1), Some(1)]),
    ]);
    violations(&d, &stim, 32)
}

#[test]
fn standard_plan_is_clean() {
    assert!(register(&PhasePlan::standard(4)).is_empty());
}

#[test]
fn every_forbidden_forward_pass_phase_is_flagged() {
    for p in (0..8).filter(|&p| p != 1) {
        let mut plan = PhasePlan::standard(4);
        plan.forward[1].1 = Phase::wrap(p);
        let v = register(&plan);
        assert!(!v.is_empty(), "F2 pass {p}");
        assert!(v[0].time.tick < TWO_PERIODS);
    }
}

#[test]
fn early_pass_cut_floats_without_squelch() {
    // pass on phi0 drops S_2 one tick before R_2 takes over, at a flat level
    let mut plan = PhasePlan::standard(4);
    plan.forward[1].1 = Phase::wrap(0);
    let v = register(&plan);
    assert_eq!(v[0].kind, ViolationKind::Float);
    assert_eq!(v[0].time.tick, 4);
    assert!(v[0].nodes.iter().all(|n| n.starts_with("s2_")));
    assert!(v.iter().all(|v| v.kind != ViolationKind::Squelch));
}

#[test]
fn shifted_reverse_drive_is_flagged() {
    for shift in [-1, 1] {
        let mut plan = PhasePlan::standard(4);
        plan.reverse[1].0 = plan.reverse[1].0.offset(shift);
        let v = register(&plan);
        assert!(!v.is_empty(), "R2 drive {shift:+}");
        assert!(v[0].time.tick < TWO_PERIODS);
    }
}

#[test]
fn missing_and_holds_are_flagged() {
    for dev in ["hx_hi", "hx_lo", "hb_hi", "hb_lo"] {
        let v = and_bench_without(dev);
        assert!(!v.is_empty(), "{dev}");
        assert!(v[0].time.tick < TWO_PERIODS, "{dev}");
        assert!(v.iter().any(|v| v.kind == ViolationKind::Float), "{dev}");
    }
}

#[test]
fn a_side_hold_is_backed_by_the_inner_hold() {
    // with A inactive and B active, Q still reaches the rail through the B
    // T-gate and the inner hold FET
    assert!(and_bench_without("ha_hi").is_empty());
    assert!(and_bench_without("ha_lo").is_empty());
}
