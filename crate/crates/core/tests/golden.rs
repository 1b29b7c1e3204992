// SPDX-License-Identifier: Apache-2.0

mod common;

use common::{decode, valid_tick};
use s2lal::cells::{shift_register, shift_register_stimulus};
use s2lal::checker::check_trace;
use s2lal::engine::{run, Drive, SimConfig};
use s2lal::netlist::flatten;

#[test]
fn eight_stage_register_runs_clean() {
    let input = [Some(1), Some(0), Some(1), Some(1), Some(0), None];
    let net = flatten(&shift_register(8, 2).unwrap()).unwrap();
    let stim = shift_register_stimulus(8, &input);
    let config = SimConfig::default();
    let (c, trace) = run(&net, &stim, &config).unwrap();
    assert_eq!(trace.len(), 48 * 16 + 1);

    let violations = check_trace(&c, &trace);
    let shown: Vec<String> = violations.iter().take(20).map(|v| v.to_string()).collect();
    assert!(violations.is_empty(), "{} violations:\n{}", violations.len(), shown.join("\n"));

    for snap in &trace.snapshots {
        for (n, s) in snap.status.iter().enumerate() {
            if !c.is_ref(n) {
                assert_eq!(s.drive, Drive::Driven, "{} at {}", c.node_name(n), snap.time);
            }
        }
    }

    for cycle in 0..5u64 {
        let at_input = decode(&c, &trace, "s0_0", 2, valid_tick(0, cycle));
        assert_eq!(at_input, input[cycle as usize]);
        let at_output = decode(&c, &trace, "s8_0", 2, valid_tick(8, cycle));
        assert_eq!(at_output, input[cycle as usize], "cycle {cycle}");
    }
}
