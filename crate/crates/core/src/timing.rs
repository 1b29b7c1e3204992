// SPDX-License-Identifier: Apache-2.0

//! Tick arithmetic, the 8-phase quasi-trapezoidal power-clock, and the
//! validity schedules of quad-rail data signals.
//!
//! Time is counted in ticks. One tick is the longest an adiabatic transition
//! may take, and a clock period is [`PHASES`] ticks. Clock phase `i` ramps up
//! during tick `i`, holds high for three ticks, ramps down during tick `i + 4`
//! and holds low for three ticks (all mod 8). Because the duty cycle is
//! symmetric, the active-low rail of phase `i` is the active-high rail of
//! phase `i + 4`, so eight clock networks carry all sixteen rails.

use std::fmt;

use thiserror::Error;

/// Number of clock phases, and ticks per clock period.
pub const PHASES: u8 = 8;

/// Ticks a clock rail holds at its active level between ramps.
pub const ACTIVE_HOLD_TICKS: u8 = 3;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TimingError {
    #[error("phase {0} out of range 0..8")]
    PhaseOutOfRange(i64),
    #[error("invalid timing parameters: {0}")]
    InvalidSpec(String),
    #[error("time must be non-negative, got {0}")]
    NegativeTime(f64),
}

/// One of the eight clock phases.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Phase(u8);

impl Phase {
    pub fn new(index: i64) -> Result<Self, TimingError> {
        if (0..PHASES as i64).contains(&index) {
            Ok(Phase(index as u8))
        } else {
            Err(TimingError::PhaseOutOfRange(index))
        }
    }

    /// Reduces any integer mod 8.
    pub fn wrap(index: i64) -> Self {
        Phase(index.rem_euclid(PHASES as i64) as u8)
    }

    pub fn index(self) -> u8 {
        self.0
    }

    pub fn offset(self, by: i64) -> Self {
        Phase::wrap(self.0 as i64 + by)
    }

    /// The phase whose active-high rail is this phase's active-low rail.
    pub fn complement(self) -> Self {
        self.offset((PHASES / 2) as i64)
    }

    pub fn all() -> impl Iterator<Item = Phase> {
        (0..PHASES).map(Phase)
    }
}

impl fmt::Display for Phase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// `(i + 4) mod 8`.
pub fn complement_phase(i: u8) -> u8 {
    (i + PHASES / 2) % PHASES
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Polarity {
    /// Pulses high when active.
    Hi,
    /// Pulses low when active.
    Lo,
}

impl Polarity {
    pub fn as_str(self) -> &'static str {
        match self {
            Polarity::Hi => "hi",
            Polarity::Lo => "lo",
        }
    }
}

/// Global voltage and timing parameters shared by every rail.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrapezoidSpec {
    /// Logic-high supply level in volts.
    pub vdd: f64,
    /// Threshold magnitude in volts, before any body bias.
    pub vt: f64,
    /// Body-bias offset in volts; raises the effective threshold by this much.
    pub vb: f64,
    /// Actual ramp duration in seconds.
    pub tau_tr: f64,
    /// Tick length in seconds; ramps never exceed it.
    pub tick: f64,
    /// Ramp shape factor, 1 for an ideal linear ramp.
    pub xi_tr: f64,
}

impl Default for TrapezoidSpec {
    fn default() -> Self {
        TrapezoidSpec {
            vdd: 1.0,
            vt: 0.4,
            vb: 0.0,
            tau_tr: 1e-9,
            tick: 1e-9,
            xi_tr: 1.0,
        }
    }
}

impl TrapezoidSpec {
    /// Full-tick ramps of length `tau_tr`.
    pub fn with_tau_tr(mut self, tau_tr: f64) -> Self {
        self.tau_tr = tau_tr;
        self.tick = tau_tr;
        self
    }

    pub fn with_vdd(mut self, vdd: f64) -> Self {
        self.vdd = vdd;
        self
    }

    pub fn validate(&self) -> Result<(), TimingError> {
        let bad = |msg: String| Err(TimingError::InvalidSpec(msg));
        if !(self.vdd > 0.0) || !self.vdd.is_finite() {
            return bad(format!("vdd must be positive, got {}", self.vdd));
        }
        if !(self.vt > 0.0) || self.vb < 0.0 {
            return bad(format!("vt must be positive and vb non-negative (vt={}, vb={})", self.vt, self.vb));
        }
        if self.vdd < 2.0 * self.effective_vt() {
            return bad(format!(
                "vdd {} is below twice the effective threshold {}",
                self.vdd,
                self.effective_vt()
            ));
        }
        if !(self.tau_tr > 0.0) || !self.tau_tr.is_finite() {
            return bad(format!("tau_tr must be positive, got {}", self.tau_tr));
        }
        if self.tick < self.tau_tr {
            return bad(format!("ramp time {} exceeds the tick {}", self.tau_tr, self.tick));
        }
        if !(self.xi_tr >= 1.0) {
            return bad(format!("shape factor must be >= 1, got {}", self.xi_tr));
        }
        Ok(())
    }

    /// Threshold including the body-bias shift.
    pub fn effective_vt(&self) -> f64 {
        self.vt + self.vb
    }

    pub fn n_phases(&self) -> u8 {
        PHASES
    }

    /// Clock period in seconds.
    pub fn period(&self) -> f64 {
        PHASES as f64 * self.tick
    }

    pub fn frequency(&self) -> f64 {
        1.0 / self.period()
    }

    /// Active hold time of a clock pulse in seconds.
    pub fn active_hold(&self) -> f64 {
        ACTIVE_HOLD_TICKS as f64 * self.tick
    }

    /// Fraction of a tick occupied by a ramp.
    pub fn ramp_fraction(&self) -> f64 {
        (self.tau_tr / self.tick).min(1.0)
    }

    /// Maximum permitted slew, in volts per tick.
    pub fn max_slew_per_tick(&self) -> f64 {
        self.vdd / self.ramp_fraction()
    }

    /// Rising-edge level `frac` of the way through a ramp tick.
    pub fn rise_level(&self, frac: f64) -> f64 {
        let r = self.ramp_fraction();
        if frac >= r {
            return self.vdd;
        }
        let v = self.vdd * (frac / r);
        // Below mid-swing, snap to a value whose distance from vdd is exact,
        // so that vdd - (vdd - v) == v and complementary rails agree bitwise.
        if v < 0.5 * self.vdd {
            self.vdd - (self.vdd - v)
        } else {
            v
        }
    }

    /// Falling-edge level; always `vdd - rise_level(frac)`.
    pub fn fall_level(&self, frac: f64) -> f64 {
        self.vdd - self.rise_level(frac)
    }
}

/// A point on the simulation time grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct SimTime {
    pub tick: u64,
    pub substep: u32,
}

impl SimTime {
    pub fn from_index(index: u64, substeps: u32) -> Self {
        SimTime {
            tick: index / substeps as u64,
            substep: (index % substeps as u64) as u32,
        }
    }

    pub fn index(self, substeps: u32) -> u64 {
        self.tick * substeps as u64 + self.substep as u64
    }

    pub fn ticks(self, substeps: u32) -> f64 {
        self.tick as f64 + self.substep as f64 / substeps as f64
    }

    /// The clock period (cycle) this instant falls in.
    pub fn cycle(self) -> u64 {
        self.tick / PHASES as u64
    }
}

impl fmt::Display for SimTime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}.{}", self.tick, self.substep)
    }
}

/// Splits a time in ticks into (tick index, fraction within the tick).
fn split_ticks(t: f64) -> (i64, f64) {
    let whole = t.floor();
    (whole as i64, t - whole)
}

/// Level of an active-high clock at `local` ticks after its rise began.
fn clock_level_local(spec: &TrapezoidSpec, local_tick: i64, frac: f64) -> f64 {
    match local_tick.rem_euclid(PHASES as i64) {
        0 => spec.rise_level(frac),
        1..=3 => spec.vdd,
        4 => spec.fall_level(frac),
        _ => 0.0,
    }
}

/// Voltage of clock rail `(phase, polarity)` at time `t` (in ticks).
pub fn clock_voltage(spec: &TrapezoidSpec, phase: u8, polarity: Polarity, t: f64) -> Result<f64, TimingError> {
    let phase = Phase::new(phase as i64)?;
    if t < 0.0 {
        return Err(TimingError::NegativeTime(t));
    }
    Ok(clock_at(spec, phase, polarity, t))
}

/// Infallible form of [`clock_voltage`] for an already-checked phase.
pub fn clock_at(spec: &TrapezoidSpec, phase: Phase, polarity: Polarity, t: f64) -> f64 {
    let phase = match polarity {
        Polarity::Hi => phase,
        Polarity::Lo => phase.complement(),
    };
    let (tick, frac) = split_ticks(t);
    clock_level_local(spec, tick - phase.index() as i64, frac)
}

/// Where a data signal sits within its 8-tick cycle.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Region {
    Rise,
    Valid,
    Fall,
    Rest,
}

/// Validity schedule of a signal computed on a given phase.
///
/// The four regions are kept distinct: the two transition ticks are
/// neither valid nor resting.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SignalSchedule {
    pub phase: Phase,
    pub rise: u8,
    pub valid: [u8; 5],
    pub fall: u8,
    pub rest: u8,
}

pub fn signal_schedule(phase: Phase) -> SignalSchedule {
    let at = |k: i64| phase.offset(k).index();
    SignalSchedule {
        phase,
        rise: at(0),
        valid: [at(1), at(2), at(3), at(4), at(5)],
        fall: at(6),
        rest: at(7),
    }
}

impl SignalSchedule {
    /// Region of absolute tick `tick` (taken mod 8).
    pub fn region(&self, tick: i64) -> Region {
        match (tick - self.phase.index() as i64).rem_euclid(PHASES as i64) {
            0 => Region::Rise,
            1..=5 => Region::Valid,
            6 => Region::Fall,
            _ => Region::Rest,
        }
    }

    /// Index of the cycle whose pulse occupies absolute tick `tick`, or
    /// `None` before the first cycle starts.
    pub fn cycle_of(&self, tick: i64) -> Option<u64> {
        let rel = tick - self.phase.index() as i64;
        (rel >= 0).then(|| (rel / PHASES as i64) as u64)
    }

    /// Absolute tick at which cycle `cycle`'s pulse begins to rise.
    pub fn rise_tick_of(&self, cycle: u64) -> u64 {
        cycle * PHASES as u64 + self.phase.index() as u64
    }
}

/// A complementary pair of rail waveforms driven from a schedule and a
/// per-cycle activity pattern.
#[derive(Debug, Clone)]
pub struct RailPairWaveform {
    pub schedule: SignalSchedule,
    pub active: Vec<bool>,
    pub spec: TrapezoidSpec,
}

impl RailPairWaveform {
    /// Active-high rail at `t` ticks.
    pub fn hi(&self, t: f64) -> f64 {
        let (tick, frac) = split_ticks(t);
        let active = self
            .schedule
            .cycle_of(tick)
            .and_then(|c| self.active.get(c as usize).copied())
            .unwrap_or(false);
        if !active {
            return 0.0;
        }
        match self.schedule.region(tick) {
            Region::Rise => self.spec.rise_level(frac),
            Region::Valid => self.spec.vdd,
            Region::Fall => self.spec.fall_level(frac),
            Region::Rest => 0.0,
        }
    }

    /// Active-low rail: exactly `vdd - hi(t)`.
    pub fn lo(&self, t: f64) -> f64 {
        self.spec.vdd - self.hi(t)
    }

    pub fn at(&self, polarity: Polarity, t: f64) -> f64 {
        match polarity {
            Polarity::Hi => self.hi(t),
            Polarity::Lo => self.lo(t),
        }
    }
}

/// Waveforms for one signal pair that is active in the cycles marked `true`.
pub fn stimulus_waveform(schedule: SignalSchedule, active: &[bool], spec: &TrapezoidSpec) -> RailPairWaveform {
    RailPairWaveform {
        schedule,
        active: active.to_vec(),
        spec: *spec,
    }
}


#[cfg(test)]
mod props {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        #[test]
        fn lo_is_exact_complement(phase in 0u8..8, t in 0.0f64..64.0, vdd in 0.8f64..3.0) {
            let s = TrapezoidSpec { vdd, ..TrapezoidSpec::default() };
            let hi = clock_voltage(&s, phase, Polarity::Hi, t).unwrap();
            let lo = clock_voltage(&s, phase, Polarity::Lo, t).unwrap();
            prop_assert_eq!(lo, s.vdd - hi);
            prop_assert_eq!(hi, s.vdd - lo);
            prop_assert!((0.0..=s.vdd).contains(&hi));
        }

        #[test]
        fn periodic(phase in 0u8..8, k in 0u32..512) {
            let s = TrapezoidSpec::default();
            let t = k as f64 / 16.0;
            prop_assert_eq!(
                clock_voltage(&s, phase, Polarity::Hi, t).unwrap(),
                clock_voltage(&s, phase, Polarity::Hi, t + 8.0).unwrap()
            );
        }

        #[test]
        fn one_rising_one_falling(k in 0u32..128) {
            // strictly inside a tick, exactly one hi rail rises and one falls
            let s = TrapezoidSpec::default();
            let t = k as f64 / 16.0 + 1.0 / 32.0;
            let dt = 1.0 / 64.0;
            let (mut up, mut down) = (0, 0);
            for p in 0..8 {
                let a = clock_voltage(&s, p, Polarity::Hi, t).unwrap();
                let b = clock_voltage(&s, p, Polarity::Hi, t + dt).unwrap();
                let slew = (b - a) / dt;
                prop_assert!(slew.abs() <= s.max_slew_per_tick() * (1.0 + 1e-12));
                if b > a { up += 1 }
                if b < a { down += 1 }
            }
            prop_assert_eq!((up, down), (1, 1));
        }
    }
}
