// SPDX-License-Identifier: Apache-2.0

use std::path::PathBuf;
use std::time::{SystemTime, UNIX_EPOCH};

use anyhow::{bail, Result};
use clap::{Args, ValueEnum};
use emsteady::pipeline::{build_report, cycle_failures, run_engines, MethodChoice, ReportOptions};
use emsteady::screening::{error_rate, TiePolicy};
use emsteady::stress::stress_current;
use serde_json::json;

use crate::ingest::{load, InputArgs, DEFAULT_JL_CRIT};
use crate::output::{write_atomic, Outcome};

/// Largest relative disagreement tolerated between the two engines.
pub const METHOD_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Method {
    Current,
    Voltage,
    Both,
}

impl From<Method> for MethodChoice {
    fn from(m: Method) -> Self {
        match m {
            Method::Current => MethodChoice::Current,
            Method::Voltage => MethodChoice::Voltage,
            Method::Both => MethodChoice::Both,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Tie {
    Immortal,
    Mortal,
}

#[derive(Debug, Clone, Args)]
pub struct AnalyzeArgs {
    #[command(flatten)]
    pub input: InputArgs,

    #[arg(long, value_enum, default_value = "both")]
    pub method: Method,

    /// Classical Blech threshold (A/m); overrides the technology file.
    #[arg(long, value_name = "A_PER_M", allow_negative_numbers = true)]
    pub jl_crit: Option<f64>,

    /// Verdict for a peak stress exactly at the critical stress.
    #[arg(long, value_enum, default_value = "immortal")]
    pub tie: Tie,

    /// Treat consistency warnings as failures (exit 2, no reports written).
    #[arg(long)]
    pub strict: bool,

    /// JSON screening report.
    #[arg(long, short = 'o', value_name = "PATH")]
    pub report: Option<PathBuf>,

    /// Per-segment CSV.
    #[arg(long, value_name = "PATH")]
    pub csv: Option<PathBuf>,

    /// `|j|` against length with the confusion cell, for plotting.
    #[arg(long, value_name = "PATH")]
    pub scatter: Option<PathBuf>,

    /// Per-node stress CSV; also adds node stresses to the JSON report.
    #[arg(long, value_name = "PATH")]
    pub nodes: Option<PathBuf>,

    /// Add node stresses to the JSON report.
    #[arg(long)]
    pub node_stress: bool,
}

pub fn analyze(args: &AnalyzeArgs) -> Result<Outcome> {
    let loaded = load(&args.input)?;
    let c = loaded.constants;
    let jl_crit = args.jl_crit.or(loaded.tech.jl_crit).unwrap_or(DEFAULT_JL_CRIT);
    if !(jl_crit.is_finite() && jl_crit > 0.0) {
        bail!("--jl-crit must be positive (got {jl_crit})");
    }
    let mut warnings = Vec::new();
    let mut method = MethodChoice::from(args.method);
    if method.voltage() && !loaded.has_voltages() {
        if method == MethodChoice::Voltage {
            bail!("--method voltage needs node voltages, and {} has none", args.input.input.display());
        }
        warnings.push("input has no node voltages; running the current method only".to_string());
        method = MethodChoice::Current;
    }

    let (outcomes, mut runtimes) = run_engines(&loaded.units, &c, method)?;
    runtimes.dc = loaded.dc_ms;
    let options = ReportOptions {
        method,
        jl_crit,
        tie_policy: match args.tie {
            Tie::Immortal => TiePolicy::Immortal,
            Tie::Mortal => TiePolicy::Mortal,
        },
        include_nodes: args.nodes.is_some() || args.node_stress,
        input: args.input.input.display().to_string(),
        timestamp: SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs()),
    };
    let report = build_report(&loaded.units, &outcomes, &c, &options, runtimes)?;

    let mut failures = loaded.findings.clone();
    for (i, cc) in cycle_failures(&outcomes) {
        let u = &loaded.units[i];
        let seg = cc.worst_segment.map_or("?", |s| u.segment_names[s].as_str());
        failures.push(format!("unit {}: cycle residual {:.3e} relative at segment {seg} exceeds the consistency gate", u.id, cc.relative));
    }
    for u in &report.units {
        if let Some(d) = u.method_deviation.filter(|&d| d > METHOD_TOLERANCE) {
            failures.push(format!("unit {}: current and voltage methods differ by {d:.3e} relative", u.id));
        }
    }
    warnings.extend(report.warnings.iter().cloned());
    for f in &failures {
        if !warnings.contains(f) {
            warnings.push(f.clone());
        }
    }

    let t = &report.totals;
    let details = json!({
        "units": report.units.len(),
        "segments": report.segment_count(),
        "isolated_nodes": loaded.isolated_nodes,
        "totals": t,
        "error_rate": error_rate(t),
        "runtimes_ms": report.runtimes_ms,
        "failures": failures,
    });
    let mut summary = format!(
        "{} unit(s), {} segment(s): TP {} TN {} FP {} FN {} (Blech error rate {:.2}%)",
        report.units.len(),
        report.segment_count(),
        t.tp,
        t.tn,
        t.fp,
        t.fn_,
        100.0 * error_rate(t)
    );
    if args.strict && !failures.is_empty() {
        summary.push_str(&format!("\nvalidation failed ({} problem(s)); no reports written", failures.len()));
        return Ok(Outcome { code: 2, summary, warnings, details });
    }

    let mut files: Vec<(&PathBuf, String)> = Vec::new();
    if let Some(p) = &args.report {
        files.push((p, report.to_json()));
    }
    if let Some(p) = &args.csv {
        files.push((p, report.segments_csv()));
    }
    if let Some(p) = &args.scatter {
        files.push((p, report.scatter_csv()));
    }
    if let Some(p) = &args.nodes {
        files.push((p, report.nodes_csv()));
    }
    for (path, contents) in files {
        write_atomic(path, &contents)?;
    }
    Ok(Outcome { code: 0, summary, warnings, details })
}

pub fn validate(args: &InputArgs) -> Result<Outcome> {
    let loaded = load(args)?;
    let mut failures = loaded.findings.clone();
    let mut worst = 0.0f64;
    for u in &loaded.units {
        let (_, cc) = stress_current(&u.graph, &loaded.constants)?;
        worst = worst.max(cc.relative);
        if !cc.passes() {
            let seg = cc.worst_segment.map_or("?", |s| u.segment_names[s].as_str());
            failures.push(format!("unit {}: cycle residual {:.3e} relative at segment {seg} exceeds the consistency gate", u.id, cc.relative));
        }
    }
    let segments: usize = loaded.units.iter().map(|u| u.graph.segment_count()).sum();
    let mut summary = format!(
        "{} unit(s), {segments} segment(s), {} isolated node(s); worst cycle residual {worst:.3e}",
        loaded.units.len(),
        loaded.isolated_nodes
    );
    if let Some(a) = &loaded.accounting {
        summary.push_str(&format!(
            "\nresistors: {} wire, {} via, {} short, {} off-grid, {} collapsed",
            a.segments, a.vias, a.shorts, a.off_grid, a.collapsed
        ));
    }
    summary.push_str(if failures.is_empty() { "\nvalid" } else { "\ninvalid" });
    let details = json!({
        "units": loaded.units.len(),
        "segments": segments,
        "isolated_nodes": loaded.isolated_nodes,
        "worst_cycle_residual": worst,
        "failures": failures,
    });
    let code = if failures.is_empty() { 0 } else { 2 };
    Ok(Outcome { code, summary, warnings: failures, details })
}
