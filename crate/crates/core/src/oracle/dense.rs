// SPDX-License-Identifier: Apache-2.0

//! Dense solve of the per-segment stress drops plus one mass balance.
//!
//! The system has one row `σ_b − σ_a = −β·j·l` per segment of a spanning
//! forest (chosen by union-find in segment order, independent of any
//! traversal) and one row `Σ w·h·(σ_a·l − β·j·l²/2) = 0`, scaled by the
//! total volume. It is solved with LU decomposition.

use nalgebra::{DMatrix, DVector};

use super::OracleError;
use crate::model::{DerivedConstants, InterconnectGraph};

/// Largest node count accepted.
pub const DENSE_LIMIT: usize = 5000;

pub fn dense_solve(graph: &InterconnectGraph, c: &DerivedConstants) -> Result<Vec<f64>, OracleError> {
    let n = graph.node_count();
    if n == 0 || graph.segment_count() == 0 {
        return Err(OracleError::Empty);
    }
    if n > DENSE_LIMIT {
        return Err(OracleError::TooLarge { size: n, limit: DENSE_LIMIT });
    }
    let mut parent: Vec<usize> = (0..n).collect();
    fn root(p: &mut [usize], mut v: usize) -> usize {
        while p[v] != v {
            p[v] = p[p[v]];
            v = p[v];
        }
        v
    }

    let mut m = DMatrix::<f64>::zeros(n, n);
    let mut rhs = DVector::<f64>::zeros(n);
    let mut row = 0;
    for s in graph.segments() {
        let (ra, rb) = (root(&mut parent, s.from_node), root(&mut parent, s.to_node));
        if ra == rb {
            continue;
        }
        parent[ra] = rb;
        m[(row, s.from_node)] = -1.0;
        m[(row, s.to_node)] = 1.0;
        rhs[row] = -c.beta * s.jl();
        row += 1;
    }
    if row != n - 1 {
        return Err(OracleError::Disconnected);
    }
    let volume: f64 = graph.segments().iter().map(|s| s.area() * s.length).sum();
    let mut mass_rhs = 0.0;
    for s in graph.segments() {
        m[(row, s.from_node)] += s.area() * s.length / volume;
        mass_rhs += s.area() * c.beta * s.jl() * s.length / 2.0 / volume;
    }
    rhs[row] = mass_rhs;

    let x = m.clone().lu().solve(&rhs).ok_or(OracleError::Singular)?;
    let r = &m * &x - &rhs;
    let scale = rhs.amax().max(m.amax() * x.amax());
    let residual = if scale > 0.0 { r.amax() / scale } else { r.amax() };
    if residual > 1e-10 {
        return Err(OracleError::Residual(residual));
    }
    Ok(x.iter().copied().collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{derive_constants, MaterialParams, NodeRecord, Segment};

    fn line(segs: &[(f64, f64, f64)]) -> InterconnectGraph {
        let nodes = (0..=segs.len()).map(|i| NodeRecord { id: i, name: format!("v{i}"), layer: 1, position: None }).collect();
        let segments = segs
            .iter()
            .enumerate()
            .map(|(i, &(l, w, j))| Segment { id: i, from_node: i, to_node: i + 1, length: l, width: w, height: 1e-6, current_density: j })
            .collect();
        InterconnectGraph::new(nodes, segments)
    }

    #[test]
    fn two_segment_closed_form() {
        let c = derive_constants(&MaterialParams::cu_dual_damascene()).unwrap();
        let (l1, w1, j1, l2, w2, j2) = (3e-5, 1e-6, 2e10, 7e-5, 2e-6, -5e9);
        let g = line(&[(l1, w1, j1), (l2, w2, j2)]);
        let s = dense_solve(&g, &c).unwrap();
        let s1 = c.beta * (w1 * j1 * l1 * l1 + w2 * j2 * l2 * l2 + 2.0 * w2 * j1 * l1 * l2) / (2.0 * (w1 * l1 + w2 * l2));
        assert!((s[0] - s1).abs() <= 1e-10 * s1.abs());
        assert!((s[1] - (s1 - c.beta * j1 * l1)).abs() <= 1e-10 * s1.abs());
    }

    #[test]
    fn via_node() {
        let c = derive_constants(&MaterialParams::cu_dual_damascene()).unwrap();
        let (j, l) = (1e10, 1e-4);
        let g = line(&[(l, 1e-6, -2.0 * j), (l, 1e-6, -j)]);
        let s = dense_solve(&g, &c).unwrap();
        let unit = c.beta * j * l;
        for (got, want) in s.iter().zip([-1.75, 0.25, 1.25]) {
            assert!((got / unit - want).abs() < 1e-10);
        }
    }

    #[test]
    fn rejects_disconnected() {
        let c = derive_constants(&MaterialParams::cu_dual_damascene()).unwrap();
        let nodes = (0..3).map(|i| NodeRecord { id: i, name: format!("v{i}"), layer: 1, position: None }).collect();
        let seg = Segment { id: 0, from_node: 0, to_node: 1, length: 1e-5, width: 1e-6, height: 1e-6, current_density: 0.0 };
        let g = InterconnectGraph::new(nodes, vec![seg]);
        assert_eq!(dense_solve(&g, &c), Err(OracleError::Disconnected));
    }
}
