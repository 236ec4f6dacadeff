// SPDX-License-Identifier: Apache-2.0

//! Spanning trees and cycle consistency.
//!
//! Steady-state stress on a mesh is fully determined by any spanning tree,
//! provided that the `j·l` drops around every cycle sum to zero. The removed
//! segments are where that condition is checked.

use std::collections::VecDeque;
use std::sync::atomic::{AtomicUsize, Ordering};

use thiserror::Error;

use crate::model::{InterconnectGraph, NodeId, SegmentId};

static TREES_BUILT: AtomicUsize = AtomicUsize::new(0);

/// Number of spanning trees built by this process so far.
pub fn spanning_trees_built() -> usize {
    TREES_BUILT.load(Ordering::Relaxed)
}

pub(crate) fn count_tree_build() {
    TREES_BUILT.fetch_add(1, Ordering::Relaxed);
}

/// Relative cycle-residual tolerance, normalised by the largest `|j·l|`.
pub const CYCLE_GATE: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TreeLink {
    pub parent: NodeId,
    pub segment: SegmentId,
    /// `+1` if the segment points away from the root, else `-1`.
    pub sign: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpanningTree {
    pub root: NodeId,
    /// `None` only at the root.
    pub parent: Vec<Option<TreeLink>>,
    pub removed_segments: Vec<SegmentId>,
    /// Breadth-first visiting order, root first.
    pub order: Vec<NodeId>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TopologyError {
    #[error("root {root} out of range for {nodes} nodes")]
    InvalidRoot { root: NodeId, nodes: usize },
    #[error("graph is disconnected: reached {reached} of {total} nodes from the root")]
    Disconnected { reached: usize, total: usize },
}

/// Breadth-first spanning tree; neighbours are visited in ascending
/// segment id, so the result is deterministic.
pub fn spanning_tree(graph: &InterconnectGraph, root: NodeId) -> Result<SpanningTree, TopologyError> {
    let n = graph.node_count();
    if root >= n {
        return Err(TopologyError::InvalidRoot { root, nodes: n });
    }
    count_tree_build();
    let mut parent = vec![None; n];
    let mut seen = vec![false; n];
    let mut in_tree = vec![false; graph.segment_count()];
    let mut order = Vec::with_capacity(n);
    let mut queue = VecDeque::new();
    seen[root] = true;
    queue.push_back(root);
    while let Some(v) = queue.pop_front() {
        order.push(v);
        for &(sid, w) in graph.neighbors(v) {
            if !seen[w] {
                seen[w] = true;
                in_tree[sid] = true;
                let sign = if graph.segments()[sid].from_node == v { 1.0 } else { -1.0 };
                parent[w] = Some(TreeLink { parent: v, segment: sid, sign });
                queue.push_back(w);
            }
        }
    }
    if order.len() != n {
        return Err(TopologyError::Disconnected { reached: order.len(), total: n });
    }
    let removed_segments = (0..graph.segment_count()).filter(|&s| !in_tree[s]).collect();
    Ok(SpanningTree { root, parent, removed_segments, order })
}

/// Algebraic `ĵ·l` sum from the root to every node along the tree (A/m).
pub fn path_sums(graph: &InterconnectGraph, tree: &SpanningTree) -> Vec<f64> {
    let mut b = vec![0.0; graph.node_count()];
    for &v in &tree.order[1..] {
        let link = tree.parent[v].expect("non-root nodes have parents");
        b[v] = b[link.parent] + link.sign * graph.segments()[link.segment].jl();
    }
    b
}

/// `(segment, |B_a + j·l − B_b|)` for every removed segment `a → b`.
pub fn cycle_residuals(graph: &InterconnectGraph, tree: &SpanningTree) -> Vec<(SegmentId, f64)> {
    let b = path_sums(graph, tree);
    tree.removed_segments
        .iter()
        .map(|&sid| {
            let s = &graph.segments()[sid];
            (sid, (b[s.from_node] + s.jl() - b[s.to_node]).abs())
        })
        .collect()
}

/// Summary of [`cycle_residuals`] against [`CYCLE_GATE`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CycleCheck {
    pub worst_segment: Option<SegmentId>,
    /// Largest residual (A/m).
    pub max_residual: f64,
    /// `max_residual` divided by the largest `|j·l|` in the graph.
    pub relative: f64,
}

impl CycleCheck {
    pub fn passes(&self) -> bool {
        self.relative <= CYCLE_GATE
    }
}

pub fn check_cycles(graph: &InterconnectGraph, tree: &SpanningTree) -> CycleCheck {
    let scale = graph.segments().iter().fold(0.0f64, |m, s| m.max(s.jl().abs()));
    let mut check = CycleCheck { worst_segment: None, max_residual: 0.0, relative: 0.0 };
    for (sid, r) in cycle_residuals(graph, tree) {
        if r > check.max_residual || check.worst_segment.is_none() {
            check.max_residual = r;
            check.worst_segment = Some(sid);
        }
    }
    if check.max_residual > 0.0 {
        check.relative = if scale > 0.0 { check.max_residual / scale } else { f64::INFINITY };
    }
    check
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{NodeRecord, Segment};

    fn graph(n: usize, edges: &[(usize, usize, f64)]) -> InterconnectGraph {
        let nodes = (0..n).map(|i| NodeRecord { id: i, name: format!("v{i}"), layer: 1, position: None }).collect();
        let segs = edges
            .iter()
            .map(|&(a, b, j)| Segment {
                id: 0,
                from_node: a,
                to_node: b,
                length: 1e-5,
                width: 1e-6,
                height: 1e-6,
                current_density: j,
            })
            .collect();
        InterconnectGraph::new(nodes, segs)
    }

    #[test]
    fn path() {
        let g = graph(3, &[(0, 1, 1.0), (1, 2, 1.0)]);
        let t = spanning_tree(&g, 0).unwrap();
        assert_eq!(t.parent[1].unwrap().parent, 0);
        assert_eq!(t.parent[2].unwrap().parent, 1);
        assert!(t.removed_segments.is_empty());
        assert_eq!(t.order, vec![0, 1, 2]);
        assert!(cycle_residuals(&g, &t).is_empty());
    }

    #[test]
    fn direction_flag() {
        let g = graph(3, &[(1, 0, 2e10), (1, 2, 1e10)]);
        let t = spanning_tree(&g, 0).unwrap();
        assert_eq!(t.parent[1].unwrap().sign, -1.0);
        assert_eq!(t.parent[2].unwrap().sign, 1.0);
        let b = path_sums(&g, &t);
        assert_eq!(b, vec![0.0, -2e10 * 1e-5, -2e10 * 1e-5 + 1e10 * 1e-5]);
    }

    #[test]
    fn triangle_and_square() {
        let tri = graph(3, &[(0, 1, 0.0), (1, 2, 0.0), (2, 0, 0.0)]);
        assert_eq!(spanning_tree(&tri, 0).unwrap().removed_segments.len(), 1);
        let sq = graph(4, &[(0, 1, 0.0), (1, 2, 0.0), (2, 3, 0.0), (3, 0, 0.0)]);
        let t = spanning_tree(&sq, 0).unwrap();
        assert_eq!(t.removed_segments.len(), 1);
        assert_eq!(t.order.len(), 4);
    }

    #[test]
    fn inconsistent_loop() {
        // Each edge carries j·l = 1e9/3 in the same rotational sense.
        let j = 1e9 / 3.0 / 1e-5;
        let g = graph(3, &[(0, 1, j), (1, 2, j), (2, 0, j)]);
        let t = spanning_tree(&g, 0).unwrap();
        let r = cycle_residuals(&g, &t);
        assert_eq!(r.len(), 1);
        assert!((r[0].1 - 1e9).abs() < 1e-3);
        assert!(!check_cycles(&g, &t).passes());
    }

    #[test]
    fn consistent_loop() {
        // Potentials 0, 3, 5 around a triangle.
        let g = graph(3, &[(0, 1, 3e5), (1, 2, 2e5), (0, 2, 5e5)]);
        let t = spanning_tree(&g, 0).unwrap();
        let c = check_cycles(&g, &t);
        assert!(c.passes(), "{c:?}");
    }

    #[test]
    fn disconnected() {
        let g = graph(4, &[(0, 1, 0.0), (2, 3, 0.0)]);
        assert_eq!(spanning_tree(&g, 0).unwrap_err(), TopologyError::Disconnected { reached: 2, total: 4 });
        assert!(spanning_tree(&g, 9).is_err());
    }
}
