// SPDX-License-Identifier: Apache-2.0

//! Components of the on-device graph and per-node drive classification.
//!
//! References are path endpoints only: a path never passes through a rail or
//! stimulus node, so two nodes tied to the same rail through separate
//! devices belong to separate components.

use std::cmp::{Ordering, Reverse};
use std::collections::BinaryHeap;

use super::circuit::Circuit;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Drive {
    /// The node is itself a reference.
    Reference,
    /// Every reachable reference sits within the tolerance of one level.
    Driven,
    /// Reachable references disagree by more than the tolerance.
    Conflicted,
    /// No reference within the impedance ceiling.
    Floating,
}

impl Drive {
    pub fn as_str(self) -> &'static str {
        match self {
            Drive::Reference => "reference",
            Drive::Driven => "driven",
            Drive::Conflicted => "conflicted",
            Drive::Floating => "floating",
        }
    }
}

/// Connectivity facts about one node at one instant.
#[derive(Debug, Clone, PartialEq)]
pub struct NodeStatus {
    pub drive: Drive,
    /// Dense component id; `u32::MAX` for references.
    pub component: u32,
    /// Reachable references within the ceiling as `(node, min path ohms)`,
    /// ordered by resistance then node index.
    pub refs: Vec<(u32, f64)>,
}

impl NodeStatus {
    /// Reference with the lowest path resistance.
    pub fn primary(&self) -> Option<(usize, f64)> {
        self.refs.first().map(|&(n, r)| (n as usize, r))
    }

    pub fn resistance_to(&self, reference: usize) -> Option<f64> {
        self.refs.iter().find(|&&(n, _)| n as usize == reference).map(|&(_, r)| r)
    }
}

pub const NO_COMPONENT: u32 = u32::MAX;

#[derive(Clone, Copy, PartialEq)]
struct Dist(f64);

impl Eq for Dist {}

impl PartialOrd for Dist {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Dist {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0.total_cmp(&other.0)
    }
}

fn find(parent: &mut [usize], mut x: usize) -> usize {
    while parent[x] != x {
        parent[x] = parent[parent[x]];
        x = parent[x];
    }
    x
}

/// Classifies every node given device states `on` and reference levels in
/// `v`. Levels of internal nodes in `v` are not read.
pub fn connectivity(c: &Circuit, on: &[bool], v: &[f64], eps: f64, ceiling: f64) -> Vec<NodeStatus> {
    let n = c.node_count();
    let mut parent: Vec<usize> = (0..n).collect();
    for (i, d) in c.net.devices.iter().enumerate() {
        if on[i] && !c.is_ref(d.a) && !c.is_ref(d.b) {
            let (ra, rb) = (find(&mut parent, d.a), find(&mut parent, d.b));
            if ra != rb {
                let (lo, hi) = if ra < rb { (ra, rb) } else { (rb, ra) };
                parent[hi] = lo;
            }
        }
    }
    let mut comp_id = vec![NO_COMPONENT; n];
    let mut members: Vec<Vec<usize>> = Vec::new();
    for x in 0..n {
        if c.is_ref(x) {
            continue;
        }
        let root = find(&mut parent, x);
        if comp_id[root] == NO_COMPONENT {
            comp_id[root] = members.len() as u32;
            members.push(Vec::new());
        }
        comp_id[x] = comp_id[root];
        members[comp_id[x] as usize].push(x);
    }

    let mut status: Vec<NodeStatus> = (0..n)
        .map(|x| NodeStatus {
            drive: if c.is_ref(x) { Drive::Reference } else { Drive::Floating },
            component: comp_id[x],
            refs: Vec::new(),
        })
        .collect();

    let mut dist = vec![f64::INFINITY; n];
    let mut heap = BinaryHeap::new();
    for nodes in &members {
        // references touching this component, with their entry edges
        let mut entries: Vec<(usize, usize, f64)> = Vec::new();
        for &x in nodes {
            for &(dev, other) in &c.adjacency[x] {
                if on[dev] && c.is_ref(other) {
                    entries.push((other, x, c.net.devices[dev].r_on));
                }
            }
        }
        if entries.is_empty() {
            continue;
        }
        entries.sort_by(|a, b| a.0.cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.total_cmp(&b.2)));
        let mut refs: Vec<usize> = entries.iter().map(|e| e.0).collect();
        refs.dedup();
        for &r in &refs {
            for &(_, x, ohm) in entries.iter().filter(|e| e.0 == r) {
                if ohm < dist[x] {
                    dist[x] = ohm;
                    heap.push(Reverse((Dist(ohm), x)));
                }
            }
            while let Some(Reverse((Dist(d), x))) = heap.pop() {
                if d > dist[x] {
                    continue;
                }
                for &(dev, y) in &c.adjacency[x] {
                    if !on[dev] || c.is_ref(y) {
                        continue;
                    }
                    let nd = d + c.net.devices[dev].r_on;
                    if nd < dist[y] {
                        dist[y] = nd;
                        heap.push(Reverse((Dist(nd), y)));
                    }
                }
            }
            for &x in nodes {
                if dist[x] <= ceiling {
                    status[x].refs.push((r as u32, dist[x]));
                }
                dist[x] = f64::INFINITY;
            }
        }
        for &x in nodes {
            let s = &mut status[x];
            s.refs.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
            if s.refs.is_empty() {
                continue;
            }
            let (lo, hi) = s.refs.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &(r, _)| {
                (lo.min(v[r as usize]), hi.max(v[r as usize]))
            });
            s.drive = if hi - lo <= eps { Drive::Driven } else { Drive::Conflicted };
        }
    }
    status
}
