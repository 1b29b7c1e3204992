// SPDX-License-Identifier: Apache-2.0

//! Rule checks over a recorded trace.
//!
//! All checks are pure functions of the compiled circuit and the trace, so
//! re-checking a stored trace reproduces the same list.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use crate::engine::{assign_levels, connectivity, Circuit, Drive, Source, Trace, THRESHOLD_SLACK};
use crate::energy::spark_energy;
use crate::netlist::owner_of;
use crate::timing::{SimTime, TrapezoidSpec};

/// Alternative paths within this factor of the lost path's resistance keep
/// a turn-off from counting as a squelch.
pub const SQUELCH_RATIO: f64 = 10.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ViolationKind {
    Spark,
    Squelch,
    Float,
    Short,
    HandoffLevelMismatch,
    ClockShape,
}

impl ViolationKind {
    pub const ALL: [ViolationKind; 6] = [
        ViolationKind::Spark,
        ViolationKind::Squelch,
        ViolationKind::Float,
        ViolationKind::Short,
        ViolationKind::HandoffLevelMismatch,
        ViolationKind::ClockShape,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ViolationKind::Spark => "spark",
            ViolationKind::Squelch => "squelch",
            ViolationKind::Float => "float",
            ViolationKind::Short => "short",
            ViolationKind::HandoffLevelMismatch => "handoff-level-mismatch",
            ViolationKind::ClockShape => "clock-shape",
        }
    }
}

impl fmt::Display for ViolationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    pub kind: ViolationKind,
    pub time: SimTime,
    /// Substep index in the trace (0 for waveform-only checks).
    pub step: u64,
    pub devices: Vec<String>,
    pub nodes: Vec<String>,
    pub delta_v: Option<f64>,
    pub resistance: Option<f64>,
    /// Levels involved, e.g. disagreeing reference voltages.
    pub levels: Vec<f64>,
    pub energy: Option<f64>,
    pub detail: String,
}

impl Violation {
    fn new(kind: ViolationKind, time: SimTime, step: u64) -> Self {
        Violation {
            kind,
            time,
            step,
            devices: Vec::new(),
            nodes: Vec::new(),
            delta_v: None,
            resistance: None,
            levels: Vec::new(),
            energy: None,
            detail: String::new(),
        }
    }

    /// Instance owning the first culprit, or `top`.
    pub fn owner(&self) -> &str {
        self.devices
            .first()
            .or(self.nodes.first())
            .map_or("top", |id| owner_of(id))
    }

    /// Machine-readable form: `kind tick substep ids dV energy`.
    pub fn line(&self) -> String {
        let ids: Vec<&str> = self.devices.iter().chain(&self.nodes).map(String::as_str).collect();
        let ids = if ids.is_empty() { "-".to_string() } else { ids.join(",") };
        let num = |x: Option<f64>| x.map_or("-".to_string(), |v| format!("{v:e}"));
        format!(
            "{} {} {} {} {} {}",
            self.kind,
            self.time.tick,
            self.time.substep,
            ids,
            num(self.delta_v),
            num(self.energy)
        )
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} at {}", self.kind, self.time)?;
        if !self.devices.is_empty() {
            write!(f, " devices [{}]", self.devices.join(", "))?;
        }
        if !self.nodes.is_empty() {
            write!(f, " nodes [{}]", self.nodes.join(", "))?;
        }
        if let Some(dv) = self.delta_v {
            write!(f, " dV={dv:.4} V")?;
        }
        if let Some(r) = self.resistance {
            write!(f, " R={r:.0} ohm")?;
        }
        if let Some(e) = self.energy {
            write!(f, " E={e:e} J")?;
        }
        if !self.detail.is_empty() {
            write!(f, ": {}", self.detail)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum Side {
    Reference(usize),
    Component(u32),
}

/// Channel terminal levels of device `i` at the instant it crosses its
/// threshold, with every level moving linearly from `from` to `to` over the
/// substep.
fn turn_on_levels(c: &Circuit, i: usize, from: &[f64], to: &[f64]) -> (f64, f64) {
    let d = c.device(i);
    let nodes = [d.gate, d.a, d.b];
    let lerp = |theta: f64| {
        let mut v = from.to_vec();
        for &n in &nodes {
            v[n] = from[n] + theta * (to[n] - from[n]);
        }
        v
    };
    let conducts = |theta: f64| c.overdrive(i, &lerp(theta)) >= -THRESHOLD_SLACK;
    let theta = if conducts(0.0) || !conducts(1.0) {
        if conducts(0.0) {
            0.0
        } else {
            1.0
        }
    } else {
        let (mut lo, mut hi) = (0.0, 1.0);
        for _ in 0..64 {
            let mid = 0.5 * (lo + hi);
            if conducts(mid) {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        hi
    };
    let v = lerp(theta);
    (v[d.a], v[d.b])
}

/// Devices turning on across a voltage difference between substeps `k` and
/// `k + 1`. The difference is read at the threshold crossing inside the
/// substep, so it does not depend on the substep length.
pub fn check_spark(c: &Circuit, trace: &Trace, k: usize) -> Vec<Violation> {
    let (before, after) = (&trace.snapshots[k], &trace.snapshots[k + 1]);
    let rising: Vec<usize> = (0..after.on.len()).filter(|&i| after.on[i] && !before.on[i]).collect();
    if rising.is_empty() {
        return Vec::new();
    }
    let cfg = &trace.config;
    let eps = cfg.eps();
    // configuration just before the new devices conduct
    let held: Vec<bool> = before.on.iter().zip(&after.on).map(|(a, b)| *a && *b).collect();
    let pre = connectivity(c, &held, &after.voltages, eps, cfg.ceiling);
    let v = assign_levels(c, &pre, &before.voltages, &after.voltages);
    let side = |n: usize| {
        if c.is_ref(n) {
            Side::Reference(n)
        } else {
            Side::Component(pre[n].component)
        }
    };
    let side_cap = |s: Side| match s {
        Side::Reference(_) => f64::INFINITY,
        Side::Component(id) => (0..pre.len())
            .filter(|&n| !c.is_ref(n) && pre[n].component == id)
            .map(|n| c.cap(n))
            .sum(),
    };
    let mut groups: BTreeMap<(Side, Side), Vec<usize>> = BTreeMap::new();
    for &i in &rising {
        let d = c.device(i);
        let (x, y) = (side(d.a), side(d.b));
        if x == y {
            continue;
        }
        groups.entry((x.min(y), x.max(y))).or_default().push(i);
    }
    let mut out = Vec::new();
    for ((x, y), devs) in groups {
        let at_turn_on: Vec<(f64, f64)> = devs.iter().map(|&i| turn_on_levels(c, i, &before.voltages, &v)).collect();
        let dv = at_turn_on.iter().map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        if dv <= eps {
            continue;
        }
        let cap = side_cap(x).min(side_cap(y));
        let cap = if cap.is_finite() { cap } else { 0.0 };
        let d0 = c.device(devs[0]);
        let mut viol = Violation::new(ViolationKind::Spark, trace.time(k as u64 + 1), k as u64 + 1);
        viol.devices = devs.iter().map(|&i| c.device(i).id.clone()).collect();
        viol.nodes = vec![c.node_name(d0.a).to_string(), c.node_name(d0.b).to_string()];
        viol.delta_v = Some(dv);
        viol.levels = vec![at_turn_on[0].0, at_turn_on[0].1];
        viol.energy = Some(spark_energy(cap, dv));
        viol.detail = format!("turned on across {dv:.4} V, C={cap:e} F");
        out.push(viol);
    }
    out
}

/// Devices turning off while they carry the only comparable path from a
/// node to a ramping reference, between substeps `k` and `k + 1`.
pub fn check_squelch(c: &Circuit, trace: &Trace, k: usize) -> Vec<Violation> {
    let (before, after) = (&trace.snapshots[k], &trace.snapshots[k + 1]);
    let falling: Vec<usize> = (0..after.on.len()).filter(|&i| before.on[i] && !after.on[i]).collect();
    if falling.is_empty() {
        return Vec::new();
    }
    let mut hits: BTreeMap<u32, (Vec<usize>, f64)> = BTreeMap::new();
    for n in 0..before.status.len() {
        let s = &before.status[n];
        if !matches!(s.drive, Drive::Driven | Drive::Conflicted) {
            continue;
        }
        let Some((r, ohm)) = s.primary() else { continue };
        if before.voltages[r] == after.voltages[r] {
            continue;
        }
        let kept = after.status[n].resistance_to(r);
        if kept.is_some_and(|k| k <= SQUELCH_RATIO * ohm) {
            continue;
        }
        let entry = hits.entry(s.component).or_insert((Vec::new(), ohm));
        entry.0.push(n);
        entry.1 = entry.1.max(ohm);
    }
    let mut out = Vec::new();
    for (comp, (nodes, ohm)) in hits {
        let culprits: Vec<usize> = falling
            .iter()
            .copied()
            .filter(|&i| {
                let d = c.device(i);
                [d.a, d.b].iter().any(|&t| !c.is_ref(t) && before.status[t].component == comp)
            })
            .collect();
        if culprits.is_empty() {
            continue;
        }
        let mut viol = Violation::new(ViolationKind::Squelch, trace.time(k as u64 + 1), k as u64 + 1);
        viol.devices = culprits.iter().map(|&i| c.device(i).id.clone()).collect();
        viol.nodes = nodes.iter().map(|&n| c.node_name(n).to_string()).collect();
        viol.resistance = Some(ohm);
        viol.detail = "turned off while the only medium-impedance path to a ramping reference".into();
        out.push(viol);
    }
    out
}

fn ref_set(trace: &Trace, k: usize, n: usize) -> BTreeSet<usize> {
    trace.snapshots[k].status[n].refs.iter().map(|&(r, _)| r as usize).collect()
}

fn spread(trace: &Trace, k: usize, refs: &BTreeSet<usize>) -> (f64, f64) {
    refs.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &r| {
        let v = trace.snapshots[k].voltages[r];
        (lo.min(v), hi.max(v))
    })
}

/// Float and short episodes starting at substep `k`, and handoffs between
/// references at different levels.
pub fn check_static(c: &Circuit, trace: &Trace, k: usize) -> Vec<Violation> {
    let cfg = &trace.config;
    let eps = cfg.eps();
    let snap = &trace.snapshots[k];
    let prev = k.checked_sub(1).map(|p| &trace.snapshots[p]);
    let mut floats: BTreeMap<u32, Vec<usize>> = BTreeMap::new();
    let mut shorts: BTreeMap<u32, Vec<usize>> = BTreeMap::new();
    let mut out = Vec::new();
    for n in 0..snap.status.len() {
        let s = &snap.status[n];
        let was = prev.map(|p| p.status[n].drive);
        match s.drive {
            Drive::Floating if cfg.strict && was != Some(Drive::Floating) => {
                floats.entry(s.component).or_default().push(n)
            }
            Drive::Conflicted if was != Some(Drive::Conflicted) => shorts.entry(s.component).or_default().push(n),
            _ => {}
        }
    }
    let time = trace.time(k as u64);
    for (_, nodes) in floats {
        let mut v = Violation::new(ViolationKind::Float, time, k as u64);
        v.nodes = nodes.iter().map(|&n| c.node_name(n).to_string()).collect();
        v.levels = nodes.iter().map(|&n| snap.voltages[n]).collect();
        v.detail = "no reference within the impedance ceiling".into();
        out.push(v);
    }
    for (_, nodes) in shorts {
        let refs: BTreeSet<usize> = nodes.iter().flat_map(|&n| ref_set(trace, k, n)).collect();
        let (lo, hi) = spread(trace, k, &refs);
        let mut v = Violation::new(ViolationKind::Short, time, k as u64);
        v.nodes = nodes.iter().map(|&n| c.node_name(n).to_string()).collect();
        v.nodes.extend(refs.iter().map(|&r| c.node_name(r).to_string()));
        v.delta_v = Some(hi - lo);
        v.levels = refs.iter().map(|&r| snap.voltages[r]).collect();
        v.detail = "references at different levels share a component".into();
        out.push(v);
    }
    let Some(_) = prev else { return out };
    let s = cfg.substeps as usize;
    let tick = (k - 1) / s;
    let window = tick * s..=((tick + 1) * s).min(trace.snapshots.len() - 1);
    let mut seen: BTreeSet<BTreeSet<usize>> = BTreeSet::new();
    for n in 0..snap.status.len() {
        if c.is_ref(n) {
            continue;
        }
        let (old, new) = (ref_set(trace, k - 1, n), ref_set(trace, k, n));
        if old == new || old.is_empty() || new.is_empty() {
            continue;
        }
        let union: BTreeSet<usize> = old.union(&new).copied().collect();
        if union.len() < 2 || !seen.insert(union.clone()) {
            continue;
        }
        let (lo, hi) = spread(trace, k, &union);
        let reading = if hi - lo > eps {
            Some(("instant", hi - lo))
        } else {
            window
                .clone()
                .map(|j| {
                    let (lo, hi) = spread(trace, j, &union);
                    hi - lo
                })
                .find(|d| *d > eps)
                .map(|d| ("whole-tick", d))
        };
        if let Some((which, dv)) = reading {
            let mut v = Violation::new(ViolationKind::HandoffLevelMismatch, time, k as u64);
            v.nodes = std::iter::once(n)
                .chain(union.iter().copied())
                .map(|x| c.node_name(x).to_string())
                .collect();
            v.delta_v = Some(dv);
            v.levels = union.iter().map(|&r| snap.voltages[r]).collect();
            v.detail = format!("{which} reading: references differ by {dv:.4} V during handoff");
            out.push(v);
        }
    }
    out
}

/// Shape rules for a sampled power-clock: slew bound, flat plateaus at every
/// extremum, and range within `[0, vdd]`. `samples` are `(ticks, volts)`.
pub fn check_clock_shape(rail: &str, samples: &[(f64, f64)], spec: &TrapezoidSpec, substeps: u32) -> Vec<Violation> {
    let tol = 1e-9 * spec.vdd.max(1.0);
    let when = |t: f64| {
        let tick = t.floor().max(0.0);
        let sub = ((t - tick) * substeps as f64).round() as u32;
        let (tick, sub) = if sub >= substeps { (tick as u64 + 1, 0) } else { (tick as u64, sub) };
        (SimTime { tick, substep: sub }, tick * substeps as u64 + sub as u64)
    };
    let mut out = Vec::new();
    let mut flag = |kind_detail: String, t: f64, v: Option<f64>| {
        let (time, step) = when(t);
        let mut viol = Violation::new(ViolationKind::ClockShape, time, step);
        viol.nodes = vec![rail.to_string()];
        viol.levels = v.into_iter().collect();
        viol.detail = kind_detail;
        out.push(viol);
    };
    for &(t, v) in samples {
        if v < -tol || v > spec.vdd + tol {
            flag(format!("level {v} outside [0, {}]", spec.vdd), t, Some(v));
        }
    }
    let limit = spec.max_slew_per_tick() * (1.0 + 1e-9);
    for w in samples.windows(2) {
        let ((t0, v0), (t1, v1)) = (w[0], w[1]);
        let dt = t1 - t0;
        let dv = v1 - v0;
        if dv.abs() > tol && (dt <= 0.0 || dv.abs() / dt > limit) {
            let slew = if dt > 0.0 { dv.abs() / dt } else { f64::INFINITY };
            flag(format!("slew {slew:.4} V/tick exceeds {:.4}", spec.max_slew_per_tick()), t1, Some(v1));
        }
    }
    // plateaus: runs of equal samples; every interior extremum needs one
    // spanning nonzero time
    let mut runs: Vec<(f64, f64, f64)> = Vec::new();
    for &(t, v) in samples {
        match runs.last_mut() {
            Some(last) if (last.2 - v).abs() <= tol => last.1 = t,
            _ => runs.push((t, t, v)),
        }
    }
    for w in runs.windows(3) {
        let (a, b, cc) = (w[0], w[1], w[2]);
        let peak = b.2 > a.2 && b.2 > cc.2;
        let trough = b.2 < a.2 && b.2 < cc.2;
        if (peak || trough) && b.1 - b.0 <= 0.0 {
            let what = if peak { "top" } else { "bottom" };
            flag(format!("no flat {what} at {} V", b.2), b.0, Some(b.2));
        }
    }
    out
}

/// Shape check of every clock rail as sampled in `trace`.
pub fn check_clocks(c: &Circuit, trace: &Trace) -> Vec<Violation> {
    let s = trace.config.substeps;
    let mut out = Vec::new();
    for n in 0..c.node_count() {
        if !matches!(c.sources[n], Source::Clock { .. }) {
            continue;
        }
        let samples: Vec<(f64, f64)> = trace
            .snapshots
            .iter()
            .map(|snap| (snap.time.ticks(s), snap.voltages[n]))
            .collect();
        out.extend(check_clock_shape(c.node_name(n), &samples, &c.spec, s));
    }
    out
}

/// Every check over the whole trace, ordered by substep, then kind.
pub fn check_trace(c: &Circuit, trace: &Trace) -> Vec<Violation> {
    let mut out = Vec::new();
    for k in 0..trace.snapshots.len() {
        out.extend(check_static(c, trace, k));
        if k + 1 < trace.snapshots.len() {
            out.extend(check_spark(c, trace, k));
            out.extend(check_squelch(c, trace, k));
        }
    }
    out.extend(check_clocks(c, trace));
    out.sort_by(|a, b| a.step.cmp(&b.step).then(a.kind.cmp(&b.kind)));
    out
}

/// Violation counts per kind, in kind order.
pub fn summarize(violations: &[Violation]) -> BTreeMap<ViolationKind, usize> {
    let mut m = BTreeMap::new();
    for v in violations {
        *m.entry(v.kind).or_insert(0) += 1;
    }
    m
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::{run, SimConfig};
    use crate::netlist::{flatten, parse};
    use crate::stimulus::Stimulus;

    fn run_text(body: &str, config: SimConfig) -> (Circuit, Trace) {
        let text = format!(
            ".ref gnd const 0\n.ref vdd const vdd\n{}{body}",
            (0..8).map(|p| format!(".rail phi{p} clock phase={p} pol=hi\n")).collect::<String>()
        );
        let net = flatten(&parse(&text).unwrap()).unwrap();
        run(&net, &Stimulus::default(), &config).unwrap()
    }

    fn cfg(ticks: u64) -> SimConfig {
        SimConfig {
            ticks,
            strict: false,
            ..Default::default()
        }
    }

    #[test]
    fn tgate_between_equal_levels_is_quiet() {
        let (c, t) = run_text(
            ".node x\n.node y\n.fet n h0 gate=vdd a=x b=gnd body=gnd\n.fet n h1 gate=vdd a=y b=gnd body=gnd\n.fet n t0 gate=phi0 a=x b=y body=gnd\n",
            cfg(8),
        );
        assert!(check_trace(&c, &t).is_empty());
    }

    #[test]
    fn spark_across_full_swing() {
        // x is tied to vdd, y floats at 0 until a pFET gated by phi5 joins
        // them: a 1 V step with 1 fF on each side
        let (c, t) = run_text(
            ".node x cap=1f\n.node y cap=1f\n.fet p hx gate=gnd a=x b=vdd body=vdd\n.fet p t0 gate=phi5 a=x b=y body=vdd\n",
            cfg(8),
        );
        let v = check_trace(&c, &t);
        let sparks: Vec<_> = v.iter().filter(|v| v.kind == ViolationKind::Spark).collect();
        assert_eq!(sparks.len(), 1, "{v:#?}");
        assert_eq!(sparks[0].devices, vec!["t0"]);
        assert_eq!(sparks[0].delta_v, Some(1.0));
        assert_eq!(sparks[0].energy, Some(0.5e-15));
    }

    #[test]
    fn squelch_when_cut_mid_ramp() {
        // x follows phi3 through one nFET gated by phi7, which falls while
        // phi3 is still rising
        let (c, t) = run_text(".node x\n.fet n m0 gate=phi7 a=x b=phi3 body=gnd\n", cfg(4));
        let v = check_trace(&c, &t);
        let squelch: Vec<_> = v.iter().filter(|v| v.kind == ViolationKind::Squelch).collect();
        assert_eq!(squelch.len(), 1, "{v:#?}");
        assert_eq!(squelch[0].devices, vec!["m0"]);
        assert_eq!(squelch[0].nodes, vec!["x"]);
        assert_eq!(squelch[0].time.tick, 3);
    }

    #[test]
    fn handoff_between_mismatched_levels() {
        // x moves from a gnd tie to a vdd tie with both briefly on: a short
        // at the overlap, and a handoff across the full swing
        let (c, t) = run_text(
            ".node x\n.fet n m0 gate=phi4 a=x b=gnd body=gnd\n.fet p m1 gate=phi4 a=x b=vdd body=vdd\n",
            cfg(8),
        );
        let v = check_trace(&c, &t);
        let kinds = summarize(&v);
        assert!(kinds.contains_key(&ViolationKind::HandoffLevelMismatch), "{v:#?}");
    }

    #[test]
    fn clock_shapes() {
        let spec = TrapezoidSpec::default();
        let trapezoid: Vec<(f64, f64)> = (0..=64)
            .map(|k| {
                let t = k as f64 / 8.0;
                (t, crate::timing::clock_at(&spec, crate::timing::Phase::wrap(0), crate::timing::Polarity::Hi, t))
            })
            .collect();
        assert!(check_clock_shape("phi0", &trapezoid, &spec, 8).is_empty());

        let square: Vec<(f64, f64)> = (0..=64)
            .map(|k| {
                let t = k as f64 / 8.0;
                (t, if (t % 8.0) < 4.0 { 1.0 } else { 0.0 })
            })
            .collect();
        let v = check_clock_shape("sq", &square, &spec, 8);
        assert!(v.iter().any(|v| v.detail.starts_with("slew")));

        let saw: Vec<(f64, f64)> = (0..=64).map(|k| (k as f64 / 8.0, (k % 8) as f64 / 8.0)).collect();
        let v = check_clock_shape("saw", &saw, &spec, 8);
        assert!(v.iter().any(|v| v.detail.starts_with("no flat top")));

        let high = [(0.0, 0.0), (1.0, 1.0), (2.0, 1.2), (3.0, 1.2)];
        assert!(check_clock_shape("x", &high, &spec, 8).iter().any(|v| v.detail.contains("outside")));
    }

    #[test]
    fn line_format() {
        let mut v = Violation::new(ViolationKind::Spark, SimTime { tick: 3, substep: 4 }, 52);
        v.devices = vec!["f1/t_hin".into()];
        v.delta_v = Some(1.0);
        v.energy = Some(5e-16);
        assert_eq!(v.line(), "spark 3 4 f1/t_hin 1e0 5e-16");
        assert_eq!(v.owner(), "f1");
        let w = Violation::new(ViolationKind::Float, SimTime { tick: 0, substep: 0 }, 0);
        assert_eq!(w.line(), "float 0 0 - - -");
    }
}
