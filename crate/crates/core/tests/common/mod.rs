// SPDX-License-Identifier: Apache-2.0
#![allow(dead_code)]

use s2lal::engine::{Circuit, Trace};

/// Active symbol of a quad-rail bus at the start of `tick`, asserting every
/// rail sits exactly at a rest or valid level.
pub fn decode(c: &Circuit, trace: &Trace, bus: &str, k: usize, tick: u64) -> Option<usize> {
    let step = (tick * trace.config.substeps as u64) as usize;
    let vdd = trace.config.spec.vdd;
    let mut active = None;
    for sym in 0..k {
        let h = c.net.node_index(&format!("{bus}_h{sym}")).unwrap();
        let l = c.net.node_index(&format!("{bus}_l{sym}")).unwrap();
        let (vh, vl) = (trace.voltage(h, step), trace.voltage(l, step));
        if vh == vdd && vl == 0.0 {
            assert!(active.is_none(), "two active symbols on {bus} at tick {tick}");
            active = Some(sym);
        } else {
            assert!(vh == 0.0 && vl == vdd, "{bus} symbol {sym} at tick {tick}: ({vh}, {vl})");
        }
    }
    active
}

/// Tick in the middle of the valid window of a signal on `phase`, `cycle`.
pub fn valid_tick(phase: u64, cycle: u64) -> u64 {
    8 * cycle + phase + 3
}
