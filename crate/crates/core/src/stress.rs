// SPDX-License-Identifier: Apache-2.0

//! Closed-form steady-state stress.
//!
//! Within a segment the steady stress is linear, `σ(x) = σ_a − β·j·x`, so a
//! unit is described by its node stresses. Two equivalent routes compute
//! them:
//!
//! * current based: Blech sums `B_i` along a spanning tree, then
//!   `σ_i = β·(Q/A − B_i)` with `A = Σ w·h·l` and
//!   `Q = Σ w·h·(ĵ·l²/2 + B_prox·l)`;
//! * voltage based: `σ_i = (β/ρ)·(Σ w·h·l·V_avg / A − V_i)`, which needs no
//!   traversal at all.

use thiserror::Error;

use crate::model::{DerivedConstants, InterconnectGraph, Method, Segment, StressResult};
use crate::sum::CompensatedSum;
use crate::topology::{count_tree_build, path_sums, CycleCheck, SpanningTree, TopologyError};
#[cfg(doc)]
use crate::topology::spanning_tree;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum StressError {
    #[error(transparent)]
    Topology(#[from] TopologyError),
    #[error("no voltage for node {node}")]
    MissingVoltage { node: String },
    #[error("unit has no segments")]
    Empty,
}

/// Blech sum `B_i` from the tree root to every node (A/m).
pub fn blech_sums(graph: &InterconnectGraph, tree: &SpanningTree) -> Vec<f64> {
    path_sums(graph, tree)
}

pub fn stress_current_based(graph: &InterconnectGraph, tree: &SpanningTree, c: &DerivedConstants) -> StressResult {
    let b = blech_sums(graph, tree);
    let mut area = CompensatedSum::new();
    let mut q = CompensatedSum::new();
    let mut in_tree = vec![false; graph.segment_count()];
    for link in tree.parent.iter().flatten() {
        let s = &graph.segments()[link.segment];
        in_tree[link.segment] = true;
        let jl = link.sign * s.jl();
        q.add(s.area() * (jl * s.length / 2.0 + b[link.parent] * s.length));
    }
    for s in graph.segments() {
        area.add(s.area() * s.length);
        // On a consistent cycle either endpoint may serve as proximal.
        if !in_tree[s.id] {
            q.add(s.area() * (s.jl() * s.length / 2.0 + b[s.from_node] * s.length));
        }
    }
    let (a, q) = (area.value(), q.value());
    let mean = q / a;
    StressResult {
        method: Method::Current,
        node_stress: b.iter().map(|bi| c.beta * (mean - bi)).collect(),
        blech_sum: Some(b),
        reference_node: tree.root,
        area_sum: a,
        q_sum: q,
    }
}

/// One traversal from the smallest node id that accumulates Blech sums, the
/// volume `A` and `Q` as it goes, then one pass over nodes. Equivalent to
/// [`spanning_tree`] followed by [`stress_current_based`] and
/// [`check_cycles`](crate::topology::check_cycles), up to rounding.
///
/// Nodes are expanded in id order where possible; a node discovered from a
/// higher id is expanded at once from a stack. Any spanning tree gives the
/// same stresses, and on spatially numbered meshes this keeps memory access
/// nearly sequential. A segment that closes a cycle is settled when it is
/// met from its second endpoint.
pub fn stress_current(graph: &InterconnectGraph, c: &DerivedConstants) -> Result<(StressResult, CycleCheck), StressError> {
    let n = graph.node_count();
    if graph.segment_count() == 0 {
        return Err(StressError::Empty);
    }
    count_tree_build();
    let segs = graph.segments();
    let mut b = vec![f64::NAN; n];
    let mut expanded = vec![false; n];
    let mut in_tree = vec![false; segs.len()];
    let mut stack = Vec::new();
    let mut area = CompensatedSum::new();
    let mut q = CompensatedSum::new();
    let mut cycle = CycleCheck { worst_segment: None, max_residual: 0.0, relative: 0.0 };
    let mut max_jl = 0.0f64;
    let mut reached = 1;
    b[0] = 0.0;
    let mut expand = |v: usize, pos: usize, b: &mut [f64], expanded: &mut [bool], stack: &mut Vec<usize>| {
        expanded[v] = true;
        let bv = b[v];
        for &(sid, w) in graph.neighbors(v) {
            if b[w].is_nan() {
                let s = &segs[sid];
                let jl = if s.from_node == v { s.jl() } else { -s.jl() };
                b[w] = bv + jl;
                in_tree[sid] = true;
                area.add(s.area() * s.length);
                q.add(s.area() * (jl * s.length / 2.0 + bv * s.length));
                max_jl = max_jl.max(jl.abs());
                reached += 1;
                // The scan has already passed `w`.
                if w < pos {
                    stack.push(w);
                }
            } else if expanded[w] && !in_tree[sid] && w != v {
                let s = &segs[sid];
                let (bf, bt) = (b[s.from_node], b[s.to_node]);
                area.add(s.area() * s.length);
                q.add(s.area() * (s.jl() * s.length / 2.0 + bf * s.length));
                max_jl = max_jl.max(s.jl().abs());
                let r = (bf + s.jl() - bt).abs();
                if r > cycle.max_residual || cycle.worst_segment.is_none() {
                    cycle.max_residual = r;
                    cycle.worst_segment = Some(s.id);
                }
            }
        }
    };
    for v in 0..n {
        if b[v].is_nan() {
            continue;
        }
        expand(v, v, &mut b, &mut expanded, &mut stack);
        while let Some(u) = stack.pop() {
            expand(u, v, &mut b, &mut expanded, &mut stack);
        }
    }
    if reached != n {
        return Err(TopologyError::Disconnected { reached, total: n }.into());
    }
    if cycle.max_residual > 0.0 {
        cycle.relative = if max_jl > 0.0 { cycle.max_residual / max_jl } else { f64::INFINITY };
    }
    let (a, q) = (area.value(), q.value());
    let mean = q / a;
    let result = StressResult {
        method: Method::Current,
        node_stress: b.iter().map(|bi| c.beta * (mean - bi)).collect(),
        blech_sum: Some(b),
        reference_node: 0,
        area_sum: a,
        q_sum: q,
    };
    Ok((result, cycle))
}

pub fn stress_voltage_based(
    graph: &InterconnectGraph,
    c: &DerivedConstants,
    node_voltage: &[f64],
) -> Result<StressResult, StressError> {
    if graph.segment_count() == 0 {
        return Err(StressError::Empty);
    }
    if let Some(missing) = (node_voltage.len()..graph.node_count()).next() {
        return Err(StressError::MissingVoltage { node: graph.nodes()[missing].name.clone() });
    }
    if let Some(bad) = node_voltage.iter().position(|v| !v.is_finite()) {
        return Err(StressError::MissingVoltage { node: graph.nodes()[bad].name.clone() });
    }
    // Voltages are taken relative to node 0 to keep the subtraction small.
    let v0 = node_voltage[0];
    let mut area = CompensatedSum::new();
    let mut weighted = CompensatedSum::new();
    for s in graph.segments() {
        let vol = s.area() * s.length;
        area.add(vol);
        weighted.add(vol * ((node_voltage[s.from_node] - v0) + (node_voltage[s.to_node] - v0)) / 2.0);
    }
    let a = area.value();
    let mean = weighted.value() / a;
    let node_stress = node_voltage[..graph.node_count()]
        .iter()
        .map(|v| c.beta_over_rho * (mean - (v - v0)))
        .collect();
    Ok(StressResult {
        method: Method::Voltage,
        node_stress,
        blech_sum: None,
        reference_node: 0,
        area_sum: a,
        q_sum: weighted.value() + v0 * a,
    })
}

/// Linear stress profile `σ(x) = σ_from + slope·x` along one segment.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SegmentProfile {
    pub sigma_from: f64,
    /// `−β·j` (Pa/m).
    pub slope: f64,
    pub length: f64,
}

impl SegmentProfile {
    pub fn at(&self, x: f64) -> f64 {
        self.sigma_from + self.slope * x
    }

    pub fn sigma_to(&self) -> f64 {
        self.at(self.length)
    }

    /// `(x, σ)` of the largest stress; always an endpoint.
    pub fn peak(&self) -> (f64, f64) {
        if self.slope > 0.0 {
            (self.length, self.sigma_to())
        } else {
            (0.0, self.sigma_from)
        }
    }

    /// `∫σ dx` over the segment.
    pub fn integral(&self) -> f64 {
        self.sigma_from * self.length + self.slope * self.length * self.length / 2.0
    }
}

pub fn segment_profile(stress: &StressResult, segment: &Segment, c: &DerivedConstants) -> SegmentProfile {
    SegmentProfile {
        sigma_from: stress.node_stress[segment.from_node],
        slope: -c.beta * segment.current_density,
        length: segment.length,
    }
}

/// `|Σ w·h·(σ_a·l − β·j·l²/2)| / (Σ w·h·l · max|σ|)`, zero when both
/// numerator and denominator vanish.
pub fn mass_conservation_residual(graph: &InterconnectGraph, stress: &StressResult, c: &DerivedConstants) -> f64 {
    let mut num = CompensatedSum::new();
    let mut vol = CompensatedSum::new();
    for s in graph.segments() {
        let sa = stress.node_stress[s.from_node];
        num.add(s.area() * (sa * s.length - c.beta * s.jl() * s.length / 2.0));
        vol.add(s.area() * s.length);
    }
    let num = num.value().abs();
    let den = vol.value() * stress.max_abs_stress();
    if num == 0.0 {
        0.0
    } else if den == 0.0 {
        f64::INFINITY
    } else {
        num / den
    }
}

/// Largest `|σ_b − σ_a + β·j·l|` over segments, relative to `max|σ|`
/// (absolute when all stress is zero).
pub fn edge_consistency(graph: &InterconnectGraph, stress: &StressResult, c: &DerivedConstants) -> f64 {
    let worst = graph.segments().iter().fold(0.0f64, |m, s| {
        let d = stress.node_stress[s.to_node] - stress.node_stress[s.from_node] + c.beta * s.jl();
        m.max(d.abs())
    });
    let scale = stress.max_abs_stress();
    if scale > 0.0 {
        worst / scale
    } else {
        worst
    }
}

/// `max|a − b| / max(max|a|, max|b|)`, or the absolute difference when both
/// are identically zero.
pub fn relative_deviation(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    let diff = a.iter().zip(b).fold(0.0f64, |m, (x, y)| m.max((x - y).abs()));
    let scale = a.iter().chain(b).fold(0.0f64, |m, x| m.max(x.abs()));
    if scale > 0.0 {
        diff / scale
    } else {
        diff
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{derive_constants, MaterialParams, NodeRecord};
    use crate::topology::spanning_tree;

    fn consts() -> DerivedConstants {
        derive_constants(&MaterialParams::cu_dual_damascene()).unwrap()
    }

    fn line(specs: &[(f64, f64, f64)]) -> InterconnectGraph {
        let n = specs.len() + 1;
        let nodes = (0..n).map(|i| NodeRecord { id: i, name: format!("v{}", i + 1), layer: 1, position: None }).collect();
        let segs = specs
            .iter()
            .enumerate()
            .map(|(i, &(l, w, j))| Segment {
                id: i,
                from_node: i,
                to_node: i + 1,
                length: l,
                width: w,
                height: 1e-6,
                current_density: j,
            })
            .collect();
        InterconnectGraph::new(nodes, segs)
    }

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
    }

    #[test]
    fn blech_sums_along_line() {
        let g = line(&[(1e-4, 1e-6, 2e10), (5e-5, 1e-6, -1e10)]);
        let t = spanning_tree(&g, 0).unwrap();
        let b = blech_sums(&g, &t);
        assert_eq!(b[0], 0.0);
        assert_eq!(b[1], 2e10 * 1e-4);
        assert_eq!(b[2], 2e10 * 1e-4 - 1e10 * 5e-5);
    }

    #[test]
    fn single_segment_closed_form() {
        let c = consts();
        let (j, l) = (1e10, 2e-5);
        let g = line(&[(l, 1e-6, j)]);
        let (r, _) = stress_current(&g, &c).unwrap();
        assert!(rel(r.node_stress[0], c.beta * j * l / 2.0) < 1e-13);
        assert!(rel(r.node_stress[1], -c.beta * j * l / 2.0) < 1e-13);
    }

    #[test]
    fn voltage_single_segment() {
        let c = consts();
        let g = line(&[(1e-5, 1e-6, 0.0)]);
        let dv = 1e-3;
        let r = stress_voltage_based(&g, &c, &[0.0, dv]).unwrap();
        assert!(rel(r.node_stress[0], c.beta_over_rho * dv / 2.0) < 1e-13);
        assert!(rel(r.node_stress[1], -c.beta_over_rho * dv / 2.0) < 1e-13);
        let flat = stress_voltage_based(&g, &c, &[1.8, 1.8]).unwrap();
        assert_eq!(flat.node_stress, vec![0.0, 0.0]);
        assert_eq!(
            stress_voltage_based(&g, &c, &[1.0]).unwrap_err(),
            StressError::MissingVoltage { node: "v2".into() }
        );
    }

    #[test]
    fn profile_peaks_at_ends() {
        let c = consts();
        let g = line(&[(1e-5, 1e-6, 1e10)]);
        let (r, _) = stress_current(&g, &c).unwrap();
        let p = segment_profile(&r, &g.segments()[0], &c);
        assert_eq!(p.peak().0, 0.0);
        assert!(rel(p.sigma_to(), r.node_stress[1]) < 1e-12);
        assert!((p.at(p.length / 2.0) - (r.node_stress[0] + r.node_stress[1]) / 2.0).abs() < 1e-6);
        let flat = SegmentProfile { sigma_from: 3.0, slope: 0.0, length: 1.0 };
        assert_eq!(flat.at(0.5), 3.0);
    }

    #[test]
    fn mass_residual() {
        let c = consts();
        let g = line(&[(1e-4, 1e-6, 2e10), (5e-5, 2e-6, -1e10), (3e-5, 1e-6, 4e9)]);
        let (mut r, _) = stress_current(&g, &c).unwrap();
        assert!(mass_conservation_residual(&g, &r, &c) < 1e-12);
        assert!(edge_consistency(&g, &r, &c) < 1e-12);
        let before = r.max_abs_stress();
        for s in &mut r.node_stress {
            *s += 1e6;
        }
        let expect = 1e6 / (before + 1e6).max(r.max_abs_stress());
        assert!(rel(mass_conservation_residual(&g, &r, &c), expect) < 1e-9);

        let zero = line(&[(1e-5, 1e-6, 0.0)]);
        let (rz, _) = stress_current(&zero, &c).unwrap();
        assert_eq!(mass_conservation_residual(&zero, &rz, &c), 0.0);
    }
}
