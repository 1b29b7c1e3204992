// SPDX-License-Identifier: Apache-2.0

mod common;

use common::{decode, valid_tick};
use s2lal::cells::{pipeline, return_stimulus, shift_register, shift_register_stimulus, StageFunction};
use s2lal::checker::check_trace;
use s2lal::engine::{run, SimConfig};
use s2lal::netlist::flatten;

fn word(bits: u32, width: usize) -> Vec<bool> {
    (0..width).map(|i| bits >> i & 1 == 1).collect()
}

#[test]
fn registers_of_any_length_delay_by_their_length() {
    let input = [Some(1), Some(0), Some(0), Some(1)];
    for stages in [1usize, 2, 5, 9] {
        let net = flatten(&shift_register(stages, 2).unwrap()).unwrap();
        let stim = shift_register_stimulus(stages, &input);
        let ticks = 8 * (input.len() as u64 + 2);
        let (c, trace) = run(&net, &stim, &SimConfig { ticks, ..Default::default() }).unwrap();
        let v = check_trace(&c, &trace);
        assert!(v.is_empty(), "N={stages}: {}", v[0]);
        for (cycle, sym) in input.iter().enumerate() {
            for j in [0, stages] {
                let got = decode(&c, &trace, &format!("s{j}_0"), 2, valid_tick(j as u64, cycle as u64));
                assert_eq!(got, *sym, "N={stages} signal {j} cycle {cycle}");
            }
        }
    }
}

#[test]
fn three_symbol_register() {
    let input = [Some(2), Some(0), None, Some(1)];
    let net = flatten(&shift_register(3, 3).unwrap()).unwrap();
    let stim = shift_register_stimulus(3, &input);
    let (c, trace) = run(&net, &stim, &SimConfig { ticks: 40, ..Default::default() }).unwrap();
    assert!(check_trace(&c, &trace).is_empty());
    for (cycle, sym) in input.iter().enumerate() {
        assert_eq!(decode(&c, &trace, "s3_0", 3, valid_tick(3, cycle as u64)), *sym);
    }
}

#[test]
fn swap_stage_crosses_the_bits() {
    let functions: Vec<StageFunction> = ["b0,b1", "b1,b0", "b0,b1"].iter().map(|f| f.parse().unwrap()).collect();
    let (d, report) = pipeline(2, &functions, None).unwrap();
    assert_eq!(report.inverses[0], "b1,b0".parse().unwrap());
    let inputs: Vec<Option<Vec<bool>>> = [1u32, 2, 3, 0].iter().map(|&w| Some(word(w, 2))).collect();
    let stim = return_stimulus(2, &functions, &inputs);
    let net = flatten(&d).unwrap();
    let (c, trace) = run(&net, &stim, &SimConfig { ticks: 48, ..Default::default() }).unwrap();
    let v = check_trace(&c, &trace);
    assert!(v.is_empty(), "{}", v[0]);
    for (cycle, w) in inputs.iter().enumerate() {
        let w = w.as_ref().unwrap();
        let mut state = w.clone();
        for (j, f) in functions.iter().enumerate() {
            state = f.apply(&state);
            for (bit, &value) in state.iter().enumerate() {
                let bus = format!("s{}_{bit}", j + 1);
                let got = decode(&c, &trace, &bus, 2, valid_tick(j as u64 + 1, cycle as u64));
                assert_eq!(got, Some(usize::from(value)), "{bus} cycle {cycle}");
            }
        }
    }
}

#[test]
fn inverting_stage_uses_complement_cells() {
    let functions: Vec<StageFunction> = ["!b0,b1", "b1,!b0"].iter().map(|f| f.parse().unwrap()).collect();
    let (d, report) = pipeline(2, &functions, None).unwrap();
    let inputs: Vec<Option<Vec<bool>>> = (0..4u32).map(|w| Some(word(w, 2))).collect();
    let stim = return_stimulus(2, &functions, &inputs);
    let (c, trace) = run(&flatten(&d).unwrap(), &stim, &SimConfig { ticks: 48, ..Default::default() }).unwrap();
    assert!(report.complement_cells > 0);
    let v = check_trace(&c, &trace);
    assert!(v.is_empty(), "{}", v[0]);
    for (cycle, w) in inputs.iter().enumerate() {
        let out = functions[1].apply(&functions[0].apply(w.as_ref().unwrap()));
        for (bit, &value) in out.iter().enumerate() {
            let got = decode(&c, &trace, &format!("s2_{bit}"), 2, valid_tick(2, cycle as u64));
            assert_eq!(got, Some(usize::from(value)));
        }
    }
}
