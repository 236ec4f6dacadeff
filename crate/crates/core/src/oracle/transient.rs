// SPDX-License-Identifier: Apache-2.0

//! Finite-volume integration of the stress diffusion equation
//! `∂σ/∂t = ∂/∂x[κ(∂σ/∂x + β·j)]` from `σ ≡ 0` to steady state.
//!
//! Each segment is split into `M` equal cells; every graph node carries one
//! algebraic unknown shared by all incident segments (stress continuity).
//! Node rows enforce the cross-section-weighted flux balance, which reduces
//! to a blocking boundary at termini. Faces between a cell and a node use
//! the half-cell distance. Time stepping is implicit Euler; the system
//! `D/Δt + L` is symmetric positive definite and factored once per step
//! size.

use super::OracleError;
use crate::model::{DerivedConstants, InterconnectGraph};
use crate::sparse::{CsrMatrix, EnvelopeCholesky};

/// Largest segment count accepted.
pub const TRANSIENT_LIMIT: usize = 50;

#[derive(Debug, Clone)]
pub struct TransientOptions {
    pub cells_per_segment: usize,
    /// Steady when the relative change of the solution, extrapolated to one
    /// characteristic time, falls below this.
    pub rel_change_tol: f64,
    pub max_steps: usize,
    /// First step as a fraction of the characteristic time `(Σl)²/κ`.
    pub initial_step: f64,
    /// Step growth factor until the characteristic time is reached.
    pub growth: f64,
}

impl Default for TransientOptions {
    fn default() -> Self {
        Self { cells_per_segment: 64, rel_change_tol: 1e-8, max_steps: 5000, initial_step: 1e-4, growth: 1.5 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TransientResult {
    pub node_stress: Vec<f64>,
    /// Cell-centre samples, `cells_per_segment` per segment.
    pub cell_stress: Vec<Vec<f64>>,
    pub steps: usize,
    /// Simulated time (s).
    pub time: f64,
    /// Largest `|∂σ/∂x + β·j|` at a terminus, relative to `β·max|j|`.
    pub terminus_flux_residual: f64,
    /// Largest `|Σ w·h·∫σ dx|` seen over all steps, relative to
    /// `Σ w·h·l · max|σ|`.
    pub mass_drift: f64,
}

pub fn transient_steady_state(
    graph: &InterconnectGraph,
    c: &DerivedConstants,
    options: &TransientOptions,
) -> Result<TransientResult, OracleError> {
    let ns = graph.segment_count();
    let nv = graph.node_count();
    let m = options.cells_per_segment;
    if ns == 0 {
        return Err(OracleError::Empty);
    }
    if ns > TRANSIENT_LIMIT {
        return Err(OracleError::TooLarge { size: ns, limit: TRANSIENT_LIMIT });
    }
    if m < 8 {
        return Err(OracleError::Config(format!("need at least 8 cells per segment, got {m}")));
    }
    if graph.component_count() != 1 {
        return Err(OracleError::Disconnected);
    }

    let n = nv + ns * m;
    let cell = |k: usize, i: usize| nv + k * m + i;
    let kappa = c.kappa;

    // Laplacian couplings, capacities and the constant node forcing.
    let mut lap = Vec::with_capacity(ns * (4 * m + 8));
    let mut cap = vec![0.0; n];
    let mut force = vec![0.0; n];
    let couple = |lap: &mut Vec<(usize, usize, f64)>, a: usize, b: usize, g: f64| {
        lap.extend([(a, a, g), (b, b, g), (a, b, -g), (b, a, -g)]);
    };
    for (k, s) in graph.segments().iter().enumerate() {
        let dx = s.length / m as f64;
        let wh = s.area();
        for i in 0..m {
            cap[cell(k, i)] = wh * dx;
        }
        for i in 0..m - 1 {
            couple(&mut lap, cell(k, i), cell(k, i + 1), wh * kappa / dx);
        }
        couple(&mut lap, s.from_node, cell(k, 0), 2.0 * wh * kappa / dx);
        couple(&mut lap, s.to_node, cell(k, m - 1), 2.0 * wh * kappa / dx);
        let drive = wh * kappa * c.beta * s.current_density;
        force[s.to_node] -= drive;
        force[s.from_node] += drive;
    }

    let total_length: f64 = graph.segments().iter().map(|s| s.length).sum();
    let tau = total_length * total_length / kappa;
    let volume: f64 = graph.segments().iter().map(|s| s.area() * s.length).sum();
    let mut dt = options.initial_step * tau;
    let mut factor = None;
    let mut factored_dt = f64::NAN;
    let mut sigma = vec![0.0; n];
    let mut time = 0.0;
    let mut mass_drift = 0.0f64;
    let mut steps = 0;
    let mut last_change = f64::INFINITY;

    loop {
        if steps >= options.max_steps {
            return Err(OracleError::NoConvergence { steps, change: last_change });
        }
        if dt != factored_dt {
            let mut trip = lap.clone();
            trip.extend((nv..n).map(|i| (i, i, cap[i] / dt)));
            factor = Some(EnvelopeCholesky::factor(&CsrMatrix::from_triplets(n, trip))?);
            factored_dt = dt;
        }
        let rhs: Vec<f64> = (0..n).map(|i| cap[i] / dt * sigma[i] + force[i]).collect();
        let next = factor.as_ref().unwrap().solve(&rhs);
        steps += 1;
        time += dt;

        let peak = next.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        let delta = next.iter().zip(&sigma).fold(0.0f64, |a, (x, y)| a.max((x - y).abs()));
        sigma = next;
        let held: f64 = (nv..n).map(|i| cap[i] * sigma[i]).sum();
        if peak > 0.0 {
            mass_drift = mass_drift.max(held.abs() / (volume * peak));
        }
        last_change = if peak > 0.0 { delta / peak * (tau / dt) } else { delta };
        if dt >= tau && last_change < options.rel_change_tol {
            break;
        }
        dt = (dt * options.growth).min(tau);
    }

    let max_j = graph.segments().iter().fold(0.0f64, |a, s| a.max(s.current_density.abs()));
    let mut flux = 0.0f64;
    for (k, s) in graph.segments().iter().enumerate() {
        let half = s.length / m as f64 / 2.0;
        let g = c.beta * s.current_density;
        if graph.degree(s.from_node) == 1 {
            flux = flux.max(((sigma[cell(k, 0)] - sigma[s.from_node]) / half + g).abs());
        }
        if graph.degree(s.to_node) == 1 {
            flux = flux.max(((sigma[s.to_node] - sigma[cell(k, m - 1)]) / half + g).abs());
        }
    }
    let terminus_flux_residual = if max_j > 0.0 { flux / (c.beta * max_j) } else { flux };

    Ok(TransientResult {
        node_stress: sigma[..nv].to_vec(),
        cell_stress: (0..ns).map(|k| sigma[cell(k, 0)..cell(k, 0) + m].to_vec()).collect(),
        steps,
        time,
        terminus_flux_residual,
        mass_drift,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{derive_constants, MaterialParams, NodeRecord, Segment};

    fn single(j: f64, l: f64) -> InterconnectGraph {
        let nodes = (0..2).map(|i| NodeRecord { id: i, name: format!("v{i}"), layer: 1, position: None }).collect();
        let s = Segment { id: 0, from_node: 0, to_node: 1, length: l, width: 1e-6, height: 1e-6, current_density: j };
        InterconnectGraph::new(nodes, vec![s])
    }

    #[test]
    fn single_segment_reaches_closed_form() {
        let c = derive_constants(&MaterialParams::cu_dual_damascene()).unwrap();
        let (j, l) = (1e10, 5e-5);
        let r = transient_steady_state(&single(j, l), &c, &TransientOptions::default()).unwrap();
        let want = c.beta * j * l / 2.0;
        assert!((r.node_stress[0] - want).abs() < 5e-3 * want);
        assert!((r.node_stress[1] + want).abs() < 5e-3 * want);
        assert!(r.terminus_flux_residual < 1e-6);
        assert!(r.mass_drift < 1e-6);
    }

    #[test]
    fn zero_current_stays_zero() {
        let c = derive_constants(&MaterialParams::cu_dual_damascene()).unwrap();
        let r = transient_steady_state(&single(0.0, 1e-5), &c, &TransientOptions::default()).unwrap();
        assert!(r.node_stress.iter().all(|&s| s == 0.0));
        assert!(r.cell_stress[0].iter().all(|&s| s == 0.0));
    }

    #[test]
    fn step_size_independent() {
        let c = derive_constants(&MaterialParams::cu_dual_damascene()).unwrap();
        let g = single(2e10, 3e-5);
        let a = transient_steady_state(&g, &c, &TransientOptions::default()).unwrap();
        let opts = TransientOptions { initial_step: 5e-5, growth: 1.2, ..Default::default() };
        let b = transient_steady_state(&g, &c, &opts).unwrap();
        let scale = a.node_stress[0].abs();
        assert!((a.node_stress[0] - b.node_stress[0]).abs() < 1e-6 * scale);
    }

    #[test]
    fn step_cap_is_error() {
        let c = derive_constants(&MaterialParams::cu_dual_damascene()).unwrap();
        let opts = TransientOptions { max_steps: 3, ..Default::default() };
        assert!(matches!(
            transient_steady_state(&single(1e10, 1e-5), &c, &opts),
            Err(OracleError::NoConvergence { steps: 3, .. })
        ));
    }
}
