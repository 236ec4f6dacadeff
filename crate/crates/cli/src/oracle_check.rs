// SPDX-License-Identifier: Apache-2.0

use std::fmt::Write as _;
use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::Args;
use emsteady::dc::solve_dc;
use emsteady::model::{derive_constants, DerivedConstants, InterconnectGraph};
use emsteady::netlist::units::AnalysisUnit;
use emsteady::netlist::{decode_geometry, design_from_netlist, split_units, NamingRule};
use emsteady::oracle::{dense_solve, transient_steady_state, TransientOptions, DENSE_LIMIT, TRANSIENT_LIMIT};
use emsteady::stress::{mass_conservation_residual, stress_current, stress_voltage_based};
use emsteady::synth::random_netlist;
use serde::Serialize;
use serde_json::json;

use crate::ingest::{load, load_tech, InputArgs};
use crate::output::Outcome;

#[derive(Debug, Clone, Args)]
pub struct OracleArgs {
    /// Design to check; omit together with `--random`.
    #[command(flatten)]
    pub input: Option<InputArgs>,

    /// Check a random DC-solved mesh with this many nodes instead of a file.
    #[arg(long, value_name = "NODES", conflicts_with = "input")]
    pub random: Option<usize>,

    #[arg(long, default_value_t = 42)]
    pub seed: u64,

    /// Technology file used with `--random`.
    #[arg(long = "random-tech", value_name = "PATH", requires = "random")]
    pub random_tech: Option<PathBuf>,

    /// Tolerance against the dense solve, relative to the peak stress.
    #[arg(long, default_value_t = 1e-9)]
    pub dense_tol: f64,

    /// Tolerance against the transient steady state.
    #[arg(long, default_value_t = 1e-2)]
    pub transient_tol: f64,

    /// Tolerance between the current and voltage engines, and of the
    /// per-segment stress step against `β·j·l`.
    #[arg(long, default_value_t = 1e-6)]
    pub method_tol: f64,

    /// Tolerated mass-conservation residual.
    #[arg(long, default_value_t = 1e-9)]
    pub mass_tol: f64,

    /// Finite-volume cells per segment for the transient oracle.
    #[arg(long, default_value_t = 64)]
    pub cells: usize,

    /// Step cap for the transient oracle; reaching it is an error.
    #[arg(long, default_value_t = 5000)]
    pub max_steps: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct Row {
    pub unit: usize,
    pub check: &'static str,
    /// `None` when the check was skipped.
    pub deviation: Option<f64>,
    pub tolerance: f64,
    pub worst_segment: Option<String>,
    pub note: Option<String>,
}

impl Row {
    fn status(&self) -> &'static str {
        match self.deviation {
            None => "SKIP",
            Some(d) if d <= self.tolerance => "PASS",
            Some(_) => "FAIL",
        }
    }
}

/// Segment whose endpoints show the largest difference between two node
/// stress vectors.
fn worst_segment(graph: &InterconnectGraph, a: &[f64], b: &[f64]) -> Option<usize> {
    graph
        .segments()
        .iter()
        .map(|s| (s.id, (a[s.from_node] - b[s.from_node]).abs().max((a[s.to_node] - b[s.to_node]).abs())))
        .max_by(|x, y| x.1.total_cmp(&y.1))
        .map(|(id, _)| id)
}

fn deviation(a: &[f64], b: &[f64]) -> f64 {
    emsteady::stress::relative_deviation(a, b)
}

/// Worst per-segment mismatch between the stress step and `β·j·l`.
fn step_mismatch(graph: &InterconnectGraph, sigma: &[f64], c: &DerivedConstants) -> (f64, Option<usize>) {
    let scale = sigma.iter().fold(0.0f64, |m, s| m.max(s.abs()));
    let mut worst = (0.0, None);
    for s in graph.segments() {
        let d = (sigma[s.to_node] - sigma[s.from_node] + c.beta * s.jl()).abs();
        let d = if scale > 0.0 { d / scale } else { d };
        if worst.1.is_none() || d > worst.0 {
            worst = (d, Some(s.id));
        }
    }
    worst
}

fn random_units(nodes: usize, seed: u64, tech: Option<&std::path::Path>) -> Result<(Vec<AnalysisUnit>, DerivedConstants)> {
    if nodes < 2 {
        bail!("--random needs at least 2 nodes");
    }
    let tech = load_tech(tech)?;
    let c = derive_constants(&tech.params)?;
    let net = random_netlist(nodes, nodes / 5, seed);
    let geometry = decode_geometry(&net, &NamingRule::default())?;
    let dc = solve_dc(&net).context("DC solve of the random mesh")?;
    let (design, _) = design_from_netlist(&net, &geometry, &dc, tech.params.rho, 1.0)?;
    Ok((split_units(&design).0, c))
}

pub fn check_unit(u: &AnalysisUnit, c: &DerivedConstants, args: &OracleArgs) -> Result<Vec<Row>> {
    let g = &u.graph;
    let name = |s: Option<usize>| s.map(|s| u.segment_names[s].clone());
    let row = |check, deviation, tolerance, worst_segment, note: Option<String>| Row {
        unit: u.id,
        check,
        deviation,
        tolerance,
        worst_segment,
        note,
    };
    let (cur, cycles) = stress_current(g, c).with_context(|| format!("unit {}", u.id))?;
    let sigma = &cur.node_stress;
    let mut rows = vec![
        row("mass conservation", Some(mass_conservation_residual(g, &cur, c)), args.mass_tol, None, None),
        row("cycle residual", Some(cycles.relative), args.method_tol, name(cycles.worst_segment), None),
    ];

    match &u.node_voltage {
        Some(v) => {
            let volt = stress_voltage_based(g, c, v)?;
            let (step, seg) = step_mismatch(g, &volt.node_stress, c);
            rows.push(row("voltage step vs j", Some(step), args.method_tol, name(seg), None));
            let worst = worst_segment(g, sigma, &volt.node_stress);
            rows.push(row("current vs voltage", Some(deviation(sigma, &volt.node_stress)), args.method_tol, name(worst), None));
        }
        None => rows.push(row("current vs voltage", None, args.method_tol, None, Some("no node voltages".into()))),
    }

    if g.node_count() <= DENSE_LIMIT {
        let dense = dense_solve(g, c).with_context(|| format!("unit {}: dense oracle", u.id))?;
        let worst = worst_segment(g, sigma, &dense);
        rows.push(row("current vs dense", Some(deviation(sigma, &dense)), args.dense_tol, name(worst), None));
    } else {
        rows.push(row("current vs dense", None, args.dense_tol, None, Some(format!("more than {DENSE_LIMIT} nodes"))));
    }

    if g.segment_count() <= TRANSIENT_LIMIT {
        let opts = TransientOptions { cells_per_segment: args.cells, max_steps: args.max_steps, ..Default::default() };
        let tr = transient_steady_state(g, c, &opts).with_context(|| format!("unit {}: transient oracle", u.id))?;
        let worst = worst_segment(g, sigma, &tr.node_stress);
        let note = format!("{} steps", tr.steps);
        rows.push(row("current vs transient", Some(deviation(sigma, &tr.node_stress)), args.transient_tol, name(worst), Some(note)));
    } else {
        rows.push(row(
            "current vs transient",
            None,
            args.transient_tol,
            None,
            Some(format!("more than {TRANSIENT_LIMIT} segments")),
        ));
    }
    Ok(rows)
}

pub fn oracle_check(args: &OracleArgs) -> Result<Outcome> {
    let (units, c) = match (&args.input, args.random) {
        (Some(input), _) => {
            let loaded = load(input)?;
            (loaded.units, loaded.constants)
        }
        (None, Some(n)) => random_units(n, args.seed, args.random_tech.as_deref())?,
        (None, None) => bail!("give an input file or --random NODES"),
    };
    if units.is_empty() {
        bail!("nothing to check: the design has no segments");
    }
    let mut rows = Vec::new();
    for u in &units {
        rows.extend(check_unit(u, &c, args)?);
    }

    let mut summary = String::new();
    writeln!(summary, "{:>4}  {:<22} {:>12} {:>10}  {:<6} {}", "unit", "check", "deviation", "tolerance", "status", "worst segment").unwrap();
    for r in &rows {
        let dev = r.deviation.map_or("-".to_string(), |d| format!("{d:.3e}"));
        let extra = [r.worst_segment.clone(), r.note.clone()].into_iter().flatten().collect::<Vec<_>>().join("  ");
        writeln!(summary, "{:>4}  {:<22} {:>12} {:>10.1e}  {:<6} {}", r.unit, r.check, dev, r.tolerance, r.status(), extra)
            .unwrap();
    }
    let failed: Vec<&Row> = rows.iter().filter(|r| r.status() == "FAIL").collect();
    let worst = failed.iter().max_by(|a, b| {
        let ra = a.deviation.unwrap_or(0.0) / a.tolerance;
        let rb = b.deviation.unwrap_or(0.0) / b.tolerance;
        ra.total_cmp(&rb)
    });
    match worst {
        None => summary.push_str("PASS"),
        Some(r) => summary.push_str(&format!(
            "FAIL: {} on unit {} (worst segment {})",
            r.check,
            r.unit,
            r.worst_segment.as_deref().unwrap_or("?")
        )),
    }
    let warnings =
        failed.iter().map(|r| format!("unit {}: {} outside tolerance", r.unit, r.check)).collect::<Vec<_>>();
    let details = json!({ "rows": rows, "pass": failed.is_empty() });
    Ok(Outcome { code: if failed.is_empty() { 0 } else { 2 }, summary, warnings, details })
}
