// SPDX-License-Identifier: Apache-2.0

//! Scaling benchmark of the two stress engines on synthetic meshes.

use std::time::Instant;

use serde::Serialize;
use thiserror::Error;

use crate::dc::{solve_dc, DcError};
use crate::model::{derive_constants, MaterialParams, StressResult};
use crate::netlist::geometry::{decode_geometry, GeometryError, NamingRule};
use crate::netlist::units::{design_from_netlist, split_units, AnalysisUnit, UnitError};
use crate::stress::{relative_deviation, stress_current, stress_voltage_based};
use crate::synth::{grid_netlist, GridSpec};

pub const DEFAULT_SIZES: [usize; 3] = [10_000, 100_000, 1_000_000];

/// Allowed growth of run time relative to growth in size.
pub const SCALING_SLACK: f64 = 1.2;

#[derive(Debug, Error)]
pub enum BenchError {
    #[error(transparent)]
    Dc(#[from] DcError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Units(#[from] UnitError),
    #[error("{0}")]
    Engine(String),
}

#[derive(Debug, Clone, Serialize)]
pub struct BenchRow {
    pub size: usize,
    /// Fastest-round wall time per mesh (ms).
    pub t_current: f64,
    pub t_voltage: f64,
    pub t_dc: f64,
    /// Largest relative difference between the two engines.
    pub deviation: f64,
}

/// A synthetic mesh with about `segments` wires, solved and split.
pub fn synthetic_mesh(segments: usize, seed: u64) -> Result<(Vec<AnalysisUnit>, f64), BenchError> {
    let params = MaterialParams::cu_dual_damascene();
    let spec = GridSpec { rho: params.rho, ..GridSpec::with_segments(segments, seed) };
    let net = grid_netlist(&spec);
    let geometry = decode_geometry(&net, &NamingRule::default())?;
    let t = Instant::now();
    let dc = solve_dc(&net)?;
    let t_dc = t.elapsed().as_secs_f64() * 1e3;
    let (design, _) = design_from_netlist(&net, &geometry, &dc, params.rho, 1.0)?;
    Ok((split_units(&design).0, t_dc))
}

/// Timing rounds; each round times every size once and the fastest round
/// per size is kept.
pub const ROUNDS: usize = 9;

struct Batch {
    size: usize,
    copies: usize,
    units: Vec<AnalysisUnit>,
    t_dc: f64,
}

fn build_batch(segments: usize, working_set: usize, seed: u64) -> Result<Batch, BenchError> {
    let copies = (working_set / segments.max(1)).max(1);
    let mut units = Vec::new();
    let mut t_dc = 0.0;
    for k in 0..copies {
        let (u, t) = synthetic_mesh(segments, seed.wrapping_add(k as u64))?;
        units.extend(u);
        t_dc += t;
    }
    let size = units.iter().map(|u| u.graph.segment_count()).sum::<usize>() / copies;
    Ok(Batch { size, copies, units, t_dc: t_dc / copies as f64 })
}

fn time_ms<F: FnOnce() -> Vec<StressResult>>(f: F) -> (f64, Vec<StressResult>) {
    let t = Instant::now();
    let out = f();
    (t.elapsed().as_secs_f64() * 1e3, out)
}

/// Times both engines on meshes of about `segments` wires.
///
/// Sizes below `working_set` are timed as a batch of independent meshes
/// with about `working_set` wires in total, and the batch time is divided
/// by the batch length. Every size then streams the same amount of memory,
/// so cache capacity does not masquerade as super-linear growth.
pub fn bench_size(segments: usize, working_set: usize, seed: u64) -> Result<BenchRow, BenchError> {
    Ok(run_batches(&[build_batch(segments, working_set, seed)?])?.remove(0))
}

/// Benchmarks every size against the largest one's working set. All
/// batches are built first; the timing rounds then visit every size in
/// turn so a transient slowdown of the machine cannot favour one size.
pub fn bench_sizes(sizes: &[usize], seed: u64) -> Result<Vec<BenchRow>, BenchError> {
    let working_set = sizes.iter().copied().max().unwrap_or(0);
    let batches = sizes.iter().map(|&s| build_batch(s, working_set, seed)).collect::<Result<Vec<_>, _>>()?;
    run_batches(&batches)
}

fn run_batches(batches: &[Batch]) -> Result<Vec<BenchRow>, BenchError> {
    let c = derive_constants(&MaterialParams::cu_dual_damascene()).map_err(|e| BenchError::Engine(e.to_string()))?;
    let mut best = vec![(f64::INFINITY, f64::INFINITY); batches.len()];
    let mut deviation = vec![0.0f64; batches.len()];
    for round in 0..ROUNDS {
        for (i, b) in batches.iter().enumerate() {
            let (tc, cur) = time_ms(|| {
                b.units.iter().map(|u| stress_current(&u.graph, &c).expect("unit is connected").0).collect()
            });
            let (tv, volt) = time_ms(|| {
                b.units
                    .iter()
                    .map(|u| {
                        stress_voltage_based(&u.graph, &c, u.node_voltage.as_ref().expect("voltages present"))
                            .expect("voltages present")
                    })
                    .collect()
            });
            best[i] = (best[i].0.min(tc), best[i].1.min(tv));
            if round == 0 {
                deviation[i] = cur
                    .iter()
                    .zip(&volt)
                    .map(|(a, b)| relative_deviation(&a.node_stress, &b.node_stress))
                    .fold(0.0, f64::max);
            }
        }
    }
    Ok(batches
        .iter()
        .zip(best)
        .zip(deviation)
        .map(|((b, (tc, tv)), deviation)| {
            let n = b.copies as f64;
            BenchRow { size: b.size, t_current: tc / n, t_voltage: tv / n, t_dc: b.t_dc, deviation }
        })
        .collect())
}

#[derive(Debug, Clone, Serialize)]
pub struct ScalingCheck {
    pub engine: &'static str,
    pub from: usize,
    pub to: usize,
    pub ratio: f64,
    pub bound: f64,
    pub ok: bool,
}

/// Consecutive-size time ratios for both engines against
/// `SCALING_SLACK · size ratio`.
pub fn scaling_checks(rows: &[BenchRow]) -> Vec<ScalingCheck> {
    let mut out = Vec::new();
    for w in rows.windows(2) {
        let bound = SCALING_SLACK * w[1].size as f64 / w[0].size as f64;
        for (engine, a, b) in [("current", w[0].t_current, w[1].t_current), ("voltage", w[0].t_voltage, w[1].t_voltage)] {
            let ratio = b / a;
            out.push(ScalingCheck { engine, from: w[0].size, to: w[1].size, ratio, bound, ok: ratio <= bound });
        }
    }
    out
}

pub fn bench_csv(rows: &[BenchRow]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["size", "t_current", "t_voltage"]).unwrap();
    for r in rows {
        w.write_record([r.size.to_string(), format!("{:.6}", r.t_current), format!("{:.6}", r.t_voltage)]).unwrap();
    }
    String::from_utf8(w.into_inner().unwrap()).unwrap()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_bench_row() {
        let row = bench_size(2_000, 6_000, 1).unwrap();
        assert!(row.size > 1_500);
        assert!(row.deviation < 1e-6);
        assert!(row.t_current > 0.0 && row.t_voltage > 0.0);
        let csv = bench_csv(&[row.clone()]);
        assert_eq!(csv.lines().count(), 2);
        assert!(scaling_checks(&[row]).is_empty());
    }

    #[test]
    fn scaling_bound() {
        let rows = [
            BenchRow { size: 100, t_current: 1.0, t_voltage: 0.5, t_dc: 0.0, deviation: 0.0 },
            BenchRow { size: 1000, t_current: 11.0, t_voltage: 7.0, t_dc: 0.0, deviation: 0.0 },
        ];
        let checks = scaling_checks(&rows);
        assert!(checks[0].ok);
        assert!(!checks[1].ok);
        assert!((checks[0].bound - 12.0).abs() < 1e-12);
    }
}
