// SPDX-License-Identifier: Apache-2.0

//! Deterministic synthetic interconnects for tests and benchmarks.

use std::collections::HashSet;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::model::{InterconnectGraph, NodeRecord, Segment};
use crate::netlist::spice::Netlist;

/// Supply voltage of generated pads.
pub const VDD: f64 = 1.8;

#[derive(Debug, Clone)]
pub struct GridSpec {
    pub rows: usize,
    pub cols: usize,
    /// Node spacing in grid units (1 µm each).
    pub pitch: i64,
    /// A supply pad every `pad_every` nodes in both directions.
    pub pad_every: usize,
    /// Loads are drawn uniformly from `[0, max_load]` amperes.
    pub max_load: f64,
    pub rho: f64,
    pub seed: u64,
}

impl GridSpec {
    /// A roughly square grid with about `segments` wires.
    pub fn with_segments(segments: usize, seed: u64) -> Self {
        let side = ((segments as f64 / 2.0).sqrt().round() as usize).max(2);
        Self { rows: side, cols: side, seed, ..Self::default() }
    }

    pub fn segment_count(&self) -> usize {
        self.rows * (self.cols - 1) + self.cols * (self.rows - 1)
    }
}

impl Default for GridSpec {
    fn default() -> Self {
        Self { rows: 10, cols: 10, pitch: 10, pad_every: 10, max_load: 4e-4, rho: 2.25e-8, seed: 0 }
    }
}

fn label(x: i64, y: i64) -> String {
    format!("n1_{x}_{y}")
}

/// Single-layer power mesh with supply pads and random current sinks.
/// Wire cross-sections vary between 0.25 and 4 µm².
pub fn grid_netlist(spec: &GridSpec) -> Netlist {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut net = Netlist::new();
    let p = spec.pitch;
    let length = p as f64 * 1e-6;
    let mut r = 0usize;
    for y in 0..spec.rows as i64 {
        for x in 0..spec.cols as i64 {
            let here = label(x * p, y * p);
            for (dx, dy) in [(1, 0), (0, 1)] {
                let (nx, ny) = (x + dx, y + dy);
                if nx >= spec.cols as i64 || ny >= spec.rows as i64 {
                    continue;
                }
                let area = rng.gen_range(0.25e-12..4e-12);
                r += 1;
                net.add_resistor(&format!("R{r}"), &here, &label(nx * p, ny * p), spec.rho * length / area).unwrap();
            }
        }
    }
    let mut i = 0usize;
    for y in 0..spec.rows {
        for x in 0..spec.cols {
            let here = label(x as i64 * p, y as i64 * p);
            if x % spec.pad_every == spec.pad_every / 2 && y % spec.pad_every == spec.pad_every / 2 {
                net.add_voltage_source(&format!("V{x}_{y}"), &here, "0", VDD).unwrap();
            } else {
                i += 1;
                net.add_current_source(&format!("I{i}"), &here, "0", rng.gen_range(0.0..spec.max_load)).unwrap();
            }
        }
    }
    if net.voltage_sources.is_empty() {
        net.add_voltage_source("V0", &label(0, 0), "0", VDD).unwrap();
    }
    net
}

/// Random connected single-layer structure on unique lattice points.
/// `extra_edges` additional wires beyond a spanning tree create loops.
/// Node 0 carries the supply; some other nodes sink random loads.
pub fn random_netlist(nodes: usize, extra_edges: usize, seed: u64) -> Netlist {
    assert!(nodes >= 2);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let points = lattice_points(nodes, &mut rng);
    let mut net = Netlist::new();
    let rho = 2.25e-8;
    let wire = |net: &mut Netlist, k: usize, a: usize, b: usize, rng: &mut ChaCha8Rng| {
        let (pa, pb) = (points[a], points[b]);
        let len = ((pa.0 - pb.0).abs() + (pa.1 - pb.1).abs()) as f64 * 1e-6;
        let area = rng.gen_range(0.1e-12..2e-12);
        net.add_resistor(&format!("R{k}"), &label(pa.0, pa.1), &label(pb.0, pb.1), rho * len / area).unwrap();
    };
    let mut k = 0;
    for v in 1..nodes {
        let u = rng.gen_range(0..v);
        let (a, b) = if rng.gen_bool(0.5) { (u, v) } else { (v, u) };
        k += 1;
        wire(&mut net, k, a, b, &mut rng);
    }
    for _ in 0..extra_edges {
        let a = rng.gen_range(0..nodes);
        let b = rng.gen_range(0..nodes);
        if a != b {
            k += 1;
            wire(&mut net, k, a, b, &mut rng);
        }
    }
    net.add_voltage_source("V1", &label(points[0].0, points[0].1), "0", VDD).unwrap();
    let mut loads = 0;
    for v in 1..nodes {
        if rng.gen_bool(0.5) || v == nodes - 1 {
            loads += 1;
            let i = rng.gen_range(1e-5..2e-3);
            net.add_current_source(&format!("I{loads}"), &label(points[v].0, points[v].1), "0", i).unwrap();
        }
    }
    net
}

fn lattice_points(n: usize, rng: &mut ChaCha8Rng) -> Vec<(i64, i64)> {
    let mut seen = HashSet::with_capacity(n);
    let mut points = Vec::with_capacity(n);
    let span = (n as f64).sqrt().ceil() as i64 * 40 + 40;
    while points.len() < n {
        let p = (rng.gen_range(0..span), rng.gen_range(0..span));
        if seen.insert(p) {
            points.push(p);
        }
    }
    points
}

/// Random connected graph with cycle-consistent currents derived from a
/// random potential, plus the matching node voltages for resistivity `rho`.
/// Lengths 1–100 µm, widths 0.1–2 µm, `|j|` up to about 2e10 A/m².
pub fn random_graph(nodes: usize, extra_edges: usize, rho: f64, seed: u64) -> (InterconnectGraph, Vec<f64>) {
    assert!(nodes >= 2);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut order: Vec<usize> = (0..nodes).collect();
    order[1..].shuffle(&mut rng);
    let records: Vec<NodeRecord> =
        (0..nodes).map(|i| NodeRecord { id: i, name: format!("v{i}"), layer: 1, position: None }).collect();
    let mut pairs = Vec::with_capacity(nodes - 1 + extra_edges);
    for i in 1..nodes {
        let parent = order[rng.gen_range(0..i)];
        pairs.push((parent, order[i]));
    }
    for _ in 0..extra_edges {
        let a = rng.gen_range(0..nodes);
        let b = rng.gen_range(0..nodes);
        if a != b {
            pairs.push((a, b));
        }
    }
    // Potential φ (A/m): j·l = φ_to − φ_from.
    let phi: Vec<f64> = (0..nodes).map(|_| rng.gen_range(-2e5..2e5) * (nodes as f64).sqrt().min(10.0)).collect();
    let mut segments = Vec::with_capacity(pairs.len());
    for (a, b) in pairs {
        let (a, b) = if rng.gen_bool(0.5) { (a, b) } else { (b, a) };
        let length = rng.gen_range(1e-6..1e-4);
        let width = rng.gen_range(0.1e-6..2e-6);
        let height = rng.gen_range(0.1e-6..1e-6);
        segments.push(Segment {
            id: 0,
            from_node: a,
            to_node: b,
            length,
            width,
            height,
            current_density: (phi[b] - phi[a]) / length,
        });
    }
    let voltage = phi.iter().map(|p| 1.0 + rho * p).collect();
    (InterconnectGraph::new(records, segments), voltage)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_counts() {
        let spec = GridSpec { rows: 4, cols: 5, ..Default::default() };
        let n = grid_netlist(&spec);
        assert_eq!(n.resistors.len(), spec.segment_count());
        assert_eq!(n.resistors.len(), 4 * 4 + 5 * 3);
        assert!(!n.voltage_sources.is_empty());
        assert_eq!(grid_netlist(&spec), n);
    }

    #[test]
    fn sized_grid() {
        let spec = GridSpec::with_segments(10_000, 1);
        let s = spec.segment_count();
        assert!((9_000..11_000).contains(&s), "{s}");
    }

    #[test]
    fn random_netlist_is_connected_tree_plus_extras() {
        let n = random_netlist(50, 10, 7);
        assert!(n.resistors.len() >= 49);
        assert_eq!(n.voltage_sources.len(), 1);
    }

    #[test]
    fn random_graph_is_consistent() {
        let (g, v) = random_graph(30, 10, 2.25e-8, 3);
        assert_eq!(g.component_count(), 1);
        for s in g.segments() {
            let jl = (v[s.to_node] - v[s.from_node]) / 2.25e-8;
            assert!((s.jl() - jl).abs() <= 1e-6 * jl.abs().max(1.0));
        }
    }
}
