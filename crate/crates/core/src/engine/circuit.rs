// SPDX-License-Identifier: Apache-2.0

//! A flat netlist bound to its reference waveforms.

use super::{SimConfig, SimError};
use crate::netlist::{FetKind, FlatDevice, FlatNetlist, FlatNodeKind, RailBinding};
use crate::stimulus::Stimulus;
use crate::timing::{clock_at, signal_schedule, stimulus_waveform, Phase, Polarity, RailPairWaveform, TrapezoidSpec};

/// What sets a node's voltage.
#[derive(Debug, Clone)]
pub enum Source {
    /// Charge-holding node solved by the engine.
    Internal,
    Const(f64),
    Clock { phase: Phase, polarity: Polarity },
    /// Rail of an ideal stimulus bus; index into [`Circuit::waves`].
    Stimulus { wave: usize, polarity: Polarity },
}

#[derive(Debug, Clone)]
pub struct Circuit {
    pub net: FlatNetlist,
    pub sources: Vec<Source>,
    pub waves: Vec<RailPairWaveform>,
    /// Effective threshold per device.
    pub thresholds: Vec<f64>,
    /// Channel adjacency: `(device, other node)` per node.
    pub adjacency: Vec<Vec<(usize, usize)>>,
    pub spec: TrapezoidSpec,
}

/// Tolerance applied to threshold comparisons so exact ties count as on.
pub const THRESHOLD_SLACK: f64 = 1e-9;

/// On/off state of a FET given its terminal voltages.
pub fn device_state(kind: FetKind, vt: f64, gate: f64, a: f64, b: f64) -> bool {
    match kind {
        FetKind::N => gate - a.min(b) >= vt - THRESHOLD_SLACK,
        FetKind::P => a.max(b) - gate >= vt - THRESHOLD_SLACK,
    }
}

impl Circuit {
    /// Binds `net` to clocks, constants and `stimulus`. Every primary input
    /// bus needs a stimulus, and stimuli may only drive primary inputs.
    pub fn compile(net: &FlatNetlist, stimulus: &Stimulus, config: &SimConfig) -> Result<Self, SimError> {
        let spec = config.spec;
        spec.validate().map_err(SimError::Timing)?;
        let mut sources: Vec<Source> = net
            .nodes
            .iter()
            .map(|n| match &n.kind {
                FlatNodeKind::Internal { .. } => Source::Internal,
                FlatNodeKind::Rail(RailBinding::Const(level)) => Source::Const(level.volts(spec.vdd)),
                FlatNodeKind::Rail(RailBinding::Clock { phase, polarity }) => Source::Clock {
                    phase: *phase,
                    polarity: *polarity,
                },
            })
            .collect();
        let inputs: Vec<&str> = net.input_buses().iter().map(|b| b.name.as_str()).collect();
        for bus in &stimulus.buses {
            let decl = net.bus(&bus.name).ok_or_else(|| SimError::UnknownBus(bus.name.clone()))?;
            if !inputs.contains(&bus.name.as_str()) {
                return Err(SimError::DrivenBus(bus.name.clone()));
            }
            if decl.phase != bus.phase {
                return Err(SimError::PhaseMismatch {
                    bus: bus.name.clone(),
                    netlist: decl.phase.index(),
                    stimulus: bus.phase.index(),
                });
            }
            if let Some(&Some(s)) = bus.symbols.iter().find(|s| s.is_some_and(|s| s >= decl.pairs.len())) {
                return Err(SimError::BadSymbol {
                    bus: bus.name.clone(),
                    symbol: s,
                    k: decl.pairs.len(),
                });
            }
        }
        let mut waves = Vec::new();
        for name in &inputs {
            let bus = stimulus.bus(name).ok_or_else(|| SimError::MissingStimulus(name.to_string()))?;
            let decl = net.bus(name).expect("input bus exists");
            for (sym, &(h, l)) in decl.pairs.iter().enumerate() {
                let wave = waves.len();
                waves.push(stimulus_waveform(signal_schedule(decl.phase), &bus.activity(sym), &spec));
                sources[h] = Source::Stimulus {
                    wave,
                    polarity: Polarity::Hi,
                };
                sources[l] = Source::Stimulus {
                    wave,
                    polarity: Polarity::Lo,
                };
            }
        }
        let thresholds = net.devices.iter().map(|d| d.vt.unwrap_or(spec.vt) + spec.vb).collect();
        let mut adjacency = vec![Vec::new(); net.nodes.len()];
        for (i, d) in net.devices.iter().enumerate() {
            adjacency[d.a].push((i, d.b));
            adjacency[d.b].push((i, d.a));
        }
        Ok(Circuit {
            net: net.clone(),
            sources,
            waves,
            thresholds,
            adjacency,
            spec,
        })
    }

    pub fn is_ref(&self, node: usize) -> bool {
        !matches!(self.sources[node], Source::Internal)
    }

    pub fn node_count(&self) -> usize {
        self.sources.len()
    }

    /// Capacitance of an internal node; references hold no state.
    pub fn cap(&self, node: usize) -> f64 {
        if self.is_ref(node) {
            0.0
        } else {
            self.net.nodes[node].cap()
        }
    }

    /// Voltage of a reference node at `t` ticks; `None` for internal nodes.
    pub fn reference_voltage(&self, node: usize, t: f64) -> Option<f64> {
        match &self.sources[node] {
            Source::Internal => None,
            Source::Const(v) => Some(*v),
            Source::Clock { phase, polarity } => Some(clock_at(&self.spec, *phase, *polarity, t)),
            Source::Stimulus { wave, polarity } => Some(self.waves[*wave].at(*polarity, t)),
        }
    }

    pub fn device(&self, i: usize) -> &FlatDevice {
        &self.net.devices[i]
    }

    /// Gate drive beyond threshold; the device conducts when this reaches
    /// `-THRESHOLD_SLACK`.
    pub fn overdrive(&self, i: usize, v: &[f64]) -> f64 {
        let d = &self.net.devices[i];
        let (g, a, b) = (v[d.gate], v[d.a], v[d.b]);
        match d.kind {
            FetKind::N => g - a.min(b) - self.thresholds[i],
            FetKind::P => a.max(b) - g - self.thresholds[i],
        }
    }

    pub fn device_on(&self, i: usize, v: &[f64]) -> bool {
        let d = &self.net.devices[i];
        device_state(d.kind, self.thresholds[i], v[d.gate], v[d.a], v[d.b])
    }

    pub fn node_name(&self, node: usize) -> &str {
        &self.net.nodes[node].name
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nfet_and_pfet_thresholds() {
        assert!(device_state(FetKind::N, 0.4, 1.0, 0.0, 0.0));
        for ch in [0.0, 0.3, 0.7, 1.0] {
            assert!(!device_state(FetKind::N, 0.4, 0.0, ch, 1.0 - ch));
        }
        assert!(device_state(FetKind::P, 0.4, 0.0, 1.0, 1.0));
        assert!(!device_state(FetKind::P, 0.4, 1.0, 1.0, 0.0));
        // nFET passing a high level loses conduction near the top
        assert!(!device_state(FetKind::N, 0.4, 1.0, 0.7, 0.7));
        // ties count as on
        assert!(device_state(FetKind::N, 0.4, 0.4, 0.0, 0.0));
    }
}
