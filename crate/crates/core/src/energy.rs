// SPDX-License-Identifier: Apache-2.0

//! Analytic dissipation: ramp-charging losses per transition, spark losses,
//! and a ledger keyed by cell instance and clock period.

use std::collections::BTreeMap;
use std::fmt;

use thiserror::Error;

use crate::checker::Violation;
use crate::engine::{Circuit, Trace};
use crate::netlist::owner_of;
use crate::timing::{TrapezoidSpec, PHASES};

#[derive(Debug, Error, PartialEq)]
pub enum EnergyError {
    #[error("ramp time must be positive, got {0}")]
    NonPositiveRamp(f64),
    #[error("capacitance must be non-negative, got {0}")]
    NegativeCap(f64),
    #[error("path resistance must be positive, got {0}")]
    NonPositiveResistance(f64),
}

/// Loss of one full-swing ramp through `r_path` into `c_load`.
pub fn adiabatic_energy(c_load: f64, r_path: f64, spec: &TrapezoidSpec) -> Result<f64, EnergyError> {
    if !(spec.tau_tr > 0.0) {
        return Err(EnergyError::NonPositiveRamp(spec.tau_tr));
    }
    if !(c_load >= 0.0) {
        return Err(EnergyError::NegativeCap(c_load));
    }
    if !(r_path > 0.0) {
        return Err(EnergyError::NonPositiveResistance(r_path));
    }
    let cv2 = c_load * spec.vdd * spec.vdd;
    Ok(spec.xi_tr * cv2 * (r_path / spec.tau_tr * c_load))
}

/// Loss of abruptly connecting `c` across `dv`.
pub fn spark_energy(c: f64, dv: f64) -> f64 {
    c * dv * dv / 2.0
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct LedgerEntry {
    pub adiabatic: f64,
    pub spark: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct EnergyLedger {
    pub adiabatic: f64,
    pub spark: f64,
    /// Always zero: off devices are ideal opens.
    pub leakage: f64,
    /// Per `(cell instance, clock period)`.
    pub entries: BTreeMap<(String, u64), LedgerEntry>,
    /// Number of charge transitions accounted.
    pub transitions: usize,
}

impl EnergyLedger {
    fn add(&mut self, cell: &str, cycle: u64, adiabatic: f64, spark: f64) {
        let e = self.entries.entry((cell.to_string(), cycle)).or_default();
        e.adiabatic += adiabatic;
        e.spark += spark;
    }

    fn total(&mut self) {
        self.adiabatic = self.entries.values().map(|e| e.adiabatic).sum();
        self.spark = self.entries.values().map(|e| e.spark).sum();
    }

    pub fn total_energy(&self) -> f64 {
        self.adiabatic + self.spark + self.leakage
    }

    /// Sums over clock periods per cell.
    pub fn per_cell(&self) -> BTreeMap<&str, LedgerEntry> {
        let mut m: BTreeMap<&str, LedgerEntry> = BTreeMap::new();
        for ((cell, _), e) in &self.entries {
            let t = m.entry(cell.as_str()).or_default();
            t.adiabatic += e.adiabatic;
            t.spark += e.spark;
        }
        m
    }

    /// Machine-readable form, one `cell cycle adiabatic_J spark_J` per line.
    pub fn lines(&self) -> Vec<String> {
        self.entries
            .iter()
            .map(|((cell, cycle), e)| format!("{cell} {cycle} {:e} {:e}", e.adiabatic, e.spark))
            .collect()
    }
}

impl fmt::Display for EnergyLedger {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{:<24} {:>14} {:>14}", "cell", "adiabatic J", "spark J")?;
        for (cell, e) in self.per_cell() {
            writeln!(f, "{cell:<24} {:>14.4e} {:>14.4e}", e.adiabatic, e.spark)?;
        }
        writeln!(f, "adiabatic total {:e} J", self.adiabatic)?;
        writeln!(f, "spark total     {:e} J", self.spark)?;
        write!(f, "leakage         {:e} J (not modelled)", self.leakage)
    }
}

/// Builds the ledger from the trace's charge events and the sparks among
/// `violations`. Transitions ending in the same substep in the same
/// component are one lumped ramp: C is their summed capacitance and R the
/// worst path resistance. Energy is split back to nodes by capacitance.
pub fn attribute(c: &Circuit, trace: &Trace, violations: &[Violation]) -> Result<EnergyLedger, EnergyError> {
    let s = trace.config.substeps as u64;
    let mut groups: BTreeMap<(u64, u32), Vec<usize>> = BTreeMap::new();
    for (i, ev) in trace.charges.iter().enumerate() {
        groups.entry((ev.end, ev.component)).or_default().push(i);
    }
    let mut ledger = EnergyLedger {
        transitions: trace.charges.len(),
        ..Default::default()
    };
    for ((end, _), members) in groups {
        let cap: f64 = members.iter().map(|&i| trace.charges[i].cap).sum();
        let r = members.iter().map(|&i| trace.charges[i].resistance).fold(0.0, f64::max);
        let energy = adiabatic_energy(cap, r, &c.spec)?;
        let cycle = end / s / PHASES as u64;
        for &i in &members {
            let ev = &trace.charges[i];
            let share = if cap > 0.0 { energy * ev.cap / cap } else { 0.0 };
            ledger.add(owner_of(c.node_name(ev.node)), cycle, share, 0.0);
        }
    }
    for v in violations {
        if let Some(e) = v.energy {
            ledger.add(v.owner(), v.time.tick / PHASES as u64, 0.0, e);
        }
    }
    ledger.total();
    Ok(ledger)
}
