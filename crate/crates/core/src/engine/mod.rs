// SPDX-License-Identifier: Apache-2.0

//! Quasi-static switch-level simulation.
//!
//! Each substep sets every reference to its waveform value, resolves device
//! states and connectivity to a fixed point, and assigns node voltages:
//! driven nodes take the level of their lowest-resistance reference, floating
//! nodes keep their charge. RC lag is not integrated; it is accounted for
//! energetically from the recorded path resistances.

mod circuit;
mod connectivity;

use thiserror::Error;

pub use circuit::{device_state, Circuit, Source, THRESHOLD_SLACK};
pub use connectivity::{connectivity, Drive, NodeStatus, NO_COMPONENT};

use crate::netlist::{FlatNetlist, FlattenError};
use crate::stimulus::Stimulus;
use crate::timing::{SimTime, TimingError, TrapezoidSpec};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimError {
    #[error(transparent)]
    Timing(#[from] TimingError),
    #[error(transparent)]
    Flatten(#[from] FlattenError),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("stimulus names bus {0}, which the netlist does not declare")]
    UnknownBus(String),
    #[error("bus {0} is driven inside the netlist and cannot take a stimulus")]
    DrivenBus(String),
    #[error("no stimulus for primary input bus {0}")]
    MissingStimulus(String),
    #[error("bus {bus}: netlist phase {netlist}, stimulus phase {stimulus}")]
    PhaseMismatch { bus: String, netlist: u8, stimulus: u8 },
    #[error("bus {bus}: symbol {symbol} out of range for k={k}")]
    BadSymbol { bus: String, symbol: usize, k: usize },
    #[error("device states did not settle at {time} after {iterations} passes; still toggling: {devices:?}")]
    Oscillation {
        time: SimTime,
        iterations: usize,
        devices: Vec<String>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimConfig {
    pub substeps: u32,
    pub ticks: u64,
    /// Floating nodes are violations when set; otherwise they hold charge.
    pub strict: bool,
    /// Level-agreement tolerance in volts; `None` means 1% of vdd.
    pub epsilon: Option<f64>,
    /// Highest path resistance that still counts as a connection.
    pub ceiling: f64,
    /// Fixed-point passes allowed per substep.
    pub max_passes: usize,
    /// Passes allowed for the initial solve from an all-zero guess.
    pub settle_passes: usize,
    pub spec: TrapezoidSpec,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            substeps: 16,
            ticks: 48,
            strict: true,
            epsilon: None,
            ceiling: 100e3,
            max_passes: 8,
            settle_passes: 64,
            spec: TrapezoidSpec::default(),
        }
    }
}

impl SimConfig {
    pub fn eps(&self) -> f64 {
        self.epsilon.unwrap_or(0.01 * self.spec.vdd)
    }

    pub fn validate(&self) -> Result<(), SimError> {
        self.spec.validate()?;
        if self.substeps < 2 {
            return Err(SimError::Config(format!("substeps must be at least 2, got {}", self.substeps)));
        }
        if !(self.eps() > 0.0) {
            return Err(SimError::Config(format!("epsilon must be positive, got {}", self.eps())));
        }
        if !(self.ceiling > 0.0) {
            return Err(SimError::Config("impedance ceiling must be positive".into()));
        }
        if self.max_passes == 0 || self.settle_passes == 0 {
            return Err(SimError::Config("pass bounds must be positive".into()));
        }
        Ok(())
    }

    /// Time in ticks of substep index `k`.
    pub fn time_of(&self, k: u64) -> f64 {
        SimTime::from_index(k, self.substeps).ticks(self.substeps)
    }

    pub fn steps(&self) -> u64 {
        self.ticks * self.substeps as u64
    }
}

/// Node voltages and device states at one instant.
#[derive(Debug, Clone, PartialEq)]
pub struct SimState {
    pub time: SimTime,
    pub voltages: Vec<f64>,
    pub on: Vec<bool>,
}

/// Everything recorded at one substep.
#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub time: SimTime,
    pub voltages: Vec<f64>,
    pub on: Vec<bool>,
    pub status: Vec<NodeStatus>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DeviceEdge {
    /// Substep index at which the new state first holds.
    pub step: u64,
    pub device: usize,
    pub on: bool,
}

/// A node swinging between the two nominal levels through a driven path.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChargeEvent {
    /// Last substep at the starting level.
    pub start: u64,
    /// First substep at the final level.
    pub end: u64,
    pub node: usize,
    /// Component of the node at `end`.
    pub component: u32,
    pub cap: f64,
    /// Worst lowest-resistance path over the swing.
    pub resistance: f64,
    pub rising: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trace {
    pub config: SimConfig,
    /// One snapshot per substep index `0..=ticks*substeps`.
    pub snapshots: Vec<Snapshot>,
    pub edges: Vec<DeviceEdge>,
    pub charges: Vec<ChargeEvent>,
}

impl Trace {
    pub fn time(&self, k: u64) -> SimTime {
        SimTime::from_index(k, self.config.substeps)
    }

    pub fn voltage(&self, node: usize, k: usize) -> f64 {
        self.snapshots[k].voltages[node]
    }

    pub fn len(&self) -> usize {
        self.snapshots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.snapshots.is_empty()
    }
}

#[derive(Debug, Clone, Copy)]
enum Swing {
    Low,
    High,
    Mid,
    Transit { from_high: bool, start: u64, r_max: f64 },
}

/// Stepwise simulator over a compiled circuit.
pub struct Engine<'c> {
    circuit: &'c Circuit,
    config: SimConfig,
    index: u64,
    voltages: Vec<f64>,
    on: Vec<bool>,
    status: Vec<NodeStatus>,
    swings: Vec<Swing>,
}

/// Result of one substep.
#[derive(Debug, Clone, PartialEq)]
pub struct StepOutput {
    pub edges: Vec<DeviceEdge>,
    pub charges: Vec<ChargeEvent>,
}

impl<'c> Engine<'c> {
    /// Solves the initial state at t = 0.
    pub fn new(circuit: &'c Circuit, config: SimConfig) -> Result<Self, SimError> {
        config.validate()?;
        // every bus starts at rest: hi rails low, lo rails high
        let mut guess = vec![0.0; circuit.node_count()];
        for bus in &circuit.net.buses {
            for &(_, l) in &bus.pairs {
                guess[l] = config.spec.vdd;
            }
        }
        let (voltages, on, status) = settle(circuit, &config, &guess)?;
        let eps = config.eps();
        let vdd = config.spec.vdd;
        let swings = voltages
            .iter()
            .map(|&v| {
                if v.abs() <= eps {
                    Swing::Low
                } else if (v - vdd).abs() <= eps {
                    Swing::High
                } else {
                    Swing::Mid
                }
            })
            .collect();
        Ok(Engine {
            circuit,
            config,
            index: 0,
            voltages,
            on,
            status,
            swings,
        })
    }

    pub fn state(&self) -> SimState {
        SimState {
            time: SimTime::from_index(self.index, self.config.substeps),
            voltages: self.voltages.clone(),
            on: self.on.clone(),
        }
    }

    pub fn snapshot(&self) -> Snapshot {
        Snapshot {
            time: SimTime::from_index(self.index, self.config.substeps),
            voltages: self.voltages.clone(),
            on: self.on.clone(),
            status: self.status.clone(),
        }
    }

    /// Advances one substep.
    pub fn step(&mut self) -> Result<StepOutput, SimError> {
        let next = self.index + 1;
        let (voltages, on, status) = solve(
            self.circuit,
            &self.config,
            next,
            &self.voltages,
            Some(&self.on),
            self.config.max_passes,
        )?;
        let edges = on
            .iter()
            .zip(&self.on)
            .enumerate()
            .filter(|(_, (a, b))| a != b)
            .map(|(device, (&now, _))| DeviceEdge {
                step: next,
                device,
                on: now,
            })
            .collect();
        let charges = self.track_swings(next, &voltages, &status);
        self.index = next;
        self.voltages = voltages;
        self.on = on;
        self.status = status;
        Ok(StepOutput { edges, charges })
    }

    fn track_swings(&mut self, k: u64, v: &[f64], status: &[NodeStatus]) -> Vec<ChargeEvent> {
        let eps = self.config.eps();
        let vdd = self.config.spec.vdd;
        let mut out = Vec::new();
        for node in 0..v.len() {
            if self.circuit.is_ref(node) {
                continue;
            }
            let low = v[node].abs() <= eps;
            let high = (v[node] - vdd).abs() <= eps;
            let r = status[node].primary().map(|(_, r)| r);
            let swing = &mut self.swings[node];
            *swing = match *swing {
                Swing::Low | Swing::High | Swing::Mid if low => Swing::Low,
                Swing::Low | Swing::High | Swing::Mid if high => Swing::High,
                Swing::Low | Swing::High => Swing::Transit {
                    from_high: matches!(swing, Swing::High),
                    start: k - 1,
                    r_max: r.unwrap_or(0.0),
                },
                Swing::Mid => Swing::Mid,
                Swing::Transit { from_high, start, r_max } => {
                    let r_max = r.map_or(r_max, |r| r.max(r_max));
                    if (from_high && low) || (!from_high && high) {
                        out.push(ChargeEvent {
                            start,
                            end: k,
                            node,
                            component: status[node].component,
                            cap: self.circuit.cap(node),
                            resistance: r_max,
                            rising: !from_high,
                        });
                        if high {
                            Swing::High
                        } else {
                            Swing::Low
                        }
                    } else if low {
                        Swing::Low
                    } else if high {
                        Swing::High
                    } else {
                        Swing::Transit { from_high, start, r_max }
                    }
                }
            };
        }
        out
    }
}

type Solved = (Vec<f64>, Vec<bool>, Vec<NodeStatus>);

/// Fixed-point solve at substep `k`, starting from the previous voltages.
///
/// A device sitting exactly at its threshold can flip every pass because
/// its own channel voltage moves with its state while its gate stays put.
/// Such devices keep their state from the previous substep (`held`) and the
/// rest is solved again; if that still fails to converge, the loop is
/// reported as an oscillation.
fn solve(
    c: &Circuit,
    config: &SimConfig,
    k: u64,
    prev: &[f64],
    held: Option<&[bool]>,
    passes: usize,
) -> Result<Solved, SimError> {
    let t = config.time_of(k);
    let eps = config.eps();
    let mut start = prev.to_vec();
    for (node, slot) in start.iter_mut().enumerate() {
        if let Some(level) = c.reference_voltage(node, t) {
            *slot = level;
        }
    }
    let mut pinned: Vec<Option<bool>> = vec![None; c.net.devices.len()];
    let states = |v: &[f64], pinned: &[Option<bool>]| {
        (0..c.net.devices.len())
            .map(|i| pinned[i].unwrap_or_else(|| c.device_on(i, v)))
            .collect::<Vec<_>>()
    };
    loop {
        let mut v = start.clone();
        let mut on = states(&v, &pinned);
        for _ in 0..passes {
            let status = connectivity(c, &on, &v, eps, config.ceiling);
            let next_v = assign_levels(c, &status, prev, &v);
            let next_on = states(&next_v, &pinned);
            if next_on == on {
                return Ok((next_v, on, status));
            }
            on = next_on;
            v = next_v;
        }
        let status = connectivity(c, &on, &v, eps, config.ceiling);
        let last_v = assign_levels(c, &status, prev, &v);
        let last_on = states(&last_v, &pinned);
        let flipping: Vec<usize> = (0..on.len()).filter(|&i| on[i] != last_on[i]).collect();
        let marginal: Vec<usize> = flipping
            .iter()
            .copied()
            .filter(|&i| v[c.device(i).gate] == last_v[c.device(i).gate])
            .collect();
        let fresh: Vec<usize> = marginal.into_iter().filter(|&i| pinned[i].is_none()).collect();
        if !fresh.is_empty() {
            for i in fresh {
                pinned[i] = Some(held.is_some_and(|h| h[i]));
            }
            continue;
        }
        return Err(SimError::Oscillation {
            time: SimTime::from_index(k, config.substeps),
            iterations: passes,
            devices: flipping.iter().map(|&i| c.device(i).id.clone()).collect(),
        });
    }
}

/// Initial state at t = 0: single relaxation passes where floating nodes
/// keep the level of the previous pass, until nothing changes.
fn settle(c: &Circuit, config: &SimConfig, guess: &[f64]) -> Result<Solved, SimError> {
    let eps = config.eps();
    let mut v = guess.to_vec();
    for (node, slot) in v.iter_mut().enumerate() {
        if let Some(level) = c.reference_voltage(node, 0.0) {
            *slot = level;
        }
    }
    let states = |v: &[f64]| (0..c.net.devices.len()).map(|i| c.device_on(i, v)).collect::<Vec<_>>();
    let mut on = states(&v);
    for _ in 0..config.settle_passes {
        let status = connectivity(c, &on, &v, eps, config.ceiling);
        let next_v = assign_levels(c, &status, &v, &v);
        let next_on = states(&next_v);
        if next_on == on && next_v == v {
            return Ok((next_v, on, status));
        }
        on = next_on;
        v = next_v;
    }
    let status = connectivity(c, &on, &v, eps, config.ceiling);
    let last_v = assign_levels(c, &status, &v, &v);
    let last_on = states(&last_v);
    Err(SimError::Oscillation {
        time: SimTime::from_index(0, config.substeps),
        iterations: config.settle_passes,
        devices: (0..on.len())
            .filter(|&i| on[i] != last_on[i])
            .map(|i| c.device(i).id.clone())
            .collect(),
    })
}

/// Node voltages for a classification: references from `current`, driven
/// nodes from their best reference, conflicted nodes from the conductance
/// weighted mean, floating nodes from the charge they held at `prev`.
pub fn assign_levels(c: &Circuit, status: &[NodeStatus], prev: &[f64], current: &[f64]) -> Vec<f64> {
    use std::collections::{BTreeMap, HashSet};

    let mut v = current.to_vec();
    let anchored: HashSet<u32> = status
        .iter()
        .filter(|s| matches!(s.drive, Drive::Driven | Drive::Conflicted))
        .map(|s| s.component)
        .collect();
    // components with no reference at all share their charge
    let mut pools: BTreeMap<u32, Vec<usize>> = BTreeMap::new();
    for (node, s) in status.iter().enumerate() {
        match s.drive {
            Drive::Reference => {}
            Drive::Driven => v[node] = current[s.refs[0].0 as usize],
            Drive::Conflicted => {
                let (num, den) = s.refs.iter().fold((0.0, 0.0), |(num, den), &(r, ohm)| {
                    (num + current[r as usize] / ohm, den + 1.0 / ohm)
                });
                v[node] = num / den;
            }
            Drive::Floating if anchored.contains(&s.component) => v[node] = prev[node],
            Drive::Floating => pools.entry(s.component).or_default().push(node),
        }
    }
    for nodes in pools.into_values() {
        if nodes.iter().all(|&n| prev[n] == prev[nodes[0]]) {
            for n in nodes {
                v[n] = prev[n];
            }
            continue;
        }
        let cap: f64 = nodes.iter().map(|&n| c.cap(n)).sum();
        let level = if cap > 0.0 {
            nodes.iter().map(|&n| c.cap(n) * prev[n]).sum::<f64>() / cap
        } else {
            nodes.iter().map(|&n| prev[n]).sum::<f64>() / nodes.len() as f64
        };
        for n in nodes {
            v[n] = level;
        }
    }
    v
}

/// Simulates a compiled circuit over the configured ticks.
pub fn simulate(circuit: &Circuit, config: &SimConfig) -> Result<Trace, SimError> {
    match simulate_partial(circuit, config)? {
        (trace, None) => Ok(trace),
        (_, Some(err)) => Err(err),
    }
}

/// Like [`simulate`], but a failure after t = 0 still returns the trace up
/// to the last solved substep alongside the error.
pub fn simulate_partial(circuit: &Circuit, config: &SimConfig) -> Result<(Trace, Option<SimError>), SimError> {
    let mut engine = Engine::new(circuit, *config)?;
    let mut trace = Trace {
        config: *config,
        snapshots: vec![engine.snapshot()],
        edges: Vec::new(),
        charges: Vec::new(),
    };
    for _ in 0..config.steps() {
        match engine.step() {
            Ok(out) => {
                trace.edges.extend(out.edges);
                trace.charges.extend(out.charges);
                trace.snapshots.push(engine.snapshot());
            }
            Err(err) => return Ok((trace, Some(err))),
        }
    }
    Ok((trace, None))
}

/// Compiles `net` against `stimulus` and simulates it.
pub fn run(net: &FlatNetlist, stimulus: &Stimulus, config: &SimConfig) -> Result<(Circuit, Trace), SimError> {
    config.validate()?;
    let circuit = Circuit::compile(net, stimulus, config)?;
    let trace = simulate(&circuit, config)?;
    Ok((circuit, trace))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::netlist::{flatten, parse};

    fn run_text(body: &str, stim: &str, config: SimConfig) -> Result<(Circuit, Trace), SimError> {
        let text = format!(
            ".ref gnd const 0\n.ref vdd const vdd\n{}{body}",
            (0..8).map(|p| format!(".rail phi{p} clock phase={p} pol=hi\n")).collect::<String>()
        );
        let net = flatten(&parse(&text).unwrap()).unwrap();
        run(&net, &Stimulus::parse(stim).unwrap(), &config)
    }

    #[test]
    fn node_follows_clock_through_on_device() {
        let cfg = SimConfig {
            ticks: 8,
            ..Default::default()
        };
        let (c, t) = run_text(".node x\n.fet n m0 gate=vdd a=x b=phi0 body=gnd\n.fet p m1 gate=gnd a=x b=phi0 body=vdd\n", "", cfg).unwrap();
        let x = c.net.node_index("x").unwrap();
        let phi = c.net.node_index("phi0").unwrap();
        for s in &t.snapshots {
            assert_eq!(s.voltages[x], s.voltages[phi]);
        }
        // one rising and one falling swing
        assert_eq!(t.charges.len(), 2);
        assert!(t.charges[0].rising && !t.charges[1].rising);
        assert_eq!(t.charges[0].resistance, 10e3);
        assert_eq!(t.charges[0].start, 0);
        assert_eq!(t.charges[0].end, 16);
    }

    #[test]
    fn floating_node_holds() {
        let cfg = SimConfig {
            ticks: 8,
            strict: false,
            ..Default::default()
        };
        // the pass pair opens during tick 3 while phi0 is still high
        let (c, t) = run_text(
            ".node x\n.fet n m0 gate=phi7 a=x b=phi0 body=gnd\n.fet p m1 gate=phi3 a=x b=phi0 body=vdd\n",
            "",
            cfg,
        )
        .unwrap();
        let x = c.net.node_index("x").unwrap();
        let k = |tick: u64| (tick * 16) as usize;
        assert_eq!(t.voltage(x, k(2)), 1.0);
        assert_eq!(t.snapshots[k(5)].status[x].drive, Drive::Floating);
        assert_eq!(t.voltage(x, k(5)), 1.0);
        assert_eq!(t.voltage(x, k(7)), 1.0);
    }

    #[test]
    fn missing_and_stray_stimulus() {
        let body = ".node ah\n.node al\n.node q\n.fet n m0 gate=ah a=q b=gnd body=gnd\n.bus a k=1 phase=0 hi0=ah lo0=al\n";
        let err = run_text(body, "", SimConfig::default()).unwrap_err();
        assert_eq!(err, SimError::MissingStimulus("a".into()));
        let err = run_text(body, "bus zz phase=0: 0\n", SimConfig::default()).unwrap_err();
        assert_eq!(err, SimError::UnknownBus("zz".into()));
        let err = run_text(body, "bus a phase=1: 0\n", SimConfig::default()).unwrap_err();
        assert!(matches!(err, SimError::PhaseMismatch { .. }));
        let err = run_text(body, "bus a phase=0: 1\n", SimConfig::default()).unwrap_err();
        assert!(matches!(err, SimError::BadSymbol { .. }));
    }

    #[test]
    fn ring_of_three_inverters_is_caught() {
        let mut body = String::new();
        for (i, (x, y)) in [("x", "y"), ("y", "z"), ("z", "x")].iter().enumerate() {
            body += &format!(".node {x}\n.fet p p{i} gate={x} a={y} b=vdd body=vdd\n.fet n n{i} gate={x} a={y} b=gnd body=gnd\n");
        }
        let err = run_text(&body, "", SimConfig::default()).unwrap_err();
        match err {
            SimError::Oscillation { devices, .. } => assert!(!devices.is_empty()),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn self_disabling_pullup_stops_at_the_top() {
        // the pFET charges x to vdd and switches itself off; x then holds
        let (c, t) = run_text(".node x\n.fet p m0 gate=x a=x b=vdd body=vdd\n", "", SimConfig::default()).unwrap();
        let x = c.net.node_index("x").unwrap();
        assert_eq!(t.voltage(x, 0), 1.0);
        assert!(!t.snapshots[0].on[0]);
    }

    #[test]
    fn config_validation() {
        let mut c = SimConfig::default();
        assert_eq!(c.eps(), 0.01);
        c.substeps = 1;
        assert!(c.validate().is_err());
        let c = SimConfig {
            epsilon: Some(0.0),
            ..Default::default()
        };
        assert!(c.validate().is_err());
    }
}
