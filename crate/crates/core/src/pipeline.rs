// SPDX-License-Identifier: Apache-2.0

//! Runs the stress engines over many units in parallel and assembles the
//! screening report.

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::model::{DerivedConstants, StressResult};
use crate::netlist::units::AnalysisUnit;
use crate::screening::{
    blech_verdicts, exact_verdicts, segment_reports, ConfusionCounts, MismatchError, NodeReport, Provenance, Runtimes,
    ScreeningReport, TiePolicy, UnitReport,
};
use crate::stress::{mass_conservation_residual, relative_deviation, stress_current, stress_voltage_based, StressError};
use crate::topology::CycleCheck;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum MethodChoice {
    Current,
    Voltage,
    #[default]
    Both,
}

impl MethodChoice {
    pub fn current(self) -> bool {
        matches!(self, MethodChoice::Current | MethodChoice::Both)
    }

    pub fn voltage(self) -> bool {
        matches!(self, MethodChoice::Voltage | MethodChoice::Both)
    }
}

impl fmt::Display for MethodChoice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            MethodChoice::Current => "current",
            MethodChoice::Voltage => "voltage",
            MethodChoice::Both => "both",
        })
    }
}

impl FromStr for MethodChoice {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "current" => Ok(MethodChoice::Current),
            "voltage" => Ok(MethodChoice::Voltage),
            "both" => Ok(MethodChoice::Both),
            other => Err(format!("unknown method {other:?} (expected current, voltage or both)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PipelineError {
    #[error("unit {unit}: {source}")]
    Stress { unit: usize, source: StressError },
    #[error("unit {unit}: voltage method needs node voltages")]
    NoVoltages { unit: usize },
    #[error(transparent)]
    Mismatch(#[from] MismatchError),
}

/// Engine results for one unit.
#[derive(Debug, Clone, PartialEq)]
pub struct UnitOutcome {
    pub current: Option<StressResult>,
    pub voltage: Option<StressResult>,
    pub cycle: Option<CycleCheck>,
}

impl UnitOutcome {
    pub fn primary(&self) -> &StressResult {
        self.current.as_ref().or(self.voltage.as_ref()).expect("at least one method ran")
    }
}

/// Runs the selected engines; each engine is timed separately over all
/// units (milliseconds).
pub fn run_engines(
    units: &[AnalysisUnit],
    c: &DerivedConstants,
    method: MethodChoice,
) -> Result<(Vec<UnitOutcome>, Runtimes), PipelineError> {
    let mut runtimes = Runtimes::default();
    let mut current: Vec<Option<(StressResult, CycleCheck)>> = vec![None; units.len()];
    let mut voltage: Vec<Option<StressResult>> = vec![None; units.len()];
    if method.current() {
        let t = Instant::now();
        current = units
            .par_iter()
            .map(|u| {
                stress_current(&u.graph, c).map(Some).map_err(|source| PipelineError::Stress { unit: u.id, source })
            })
            .collect::<Result<_, PipelineError>>()?;
        runtimes.current = Some(t.elapsed().as_secs_f64() * 1e3);
    }
    if method.voltage() {
        let t = Instant::now();
        voltage = units
            .par_iter()
            .map(|u| {
                let v = u.node_voltage.as_ref().ok_or(PipelineError::NoVoltages { unit: u.id })?;
                stress_voltage_based(&u.graph, c, v)
                    .map(Some)
                    .map_err(|source| PipelineError::Stress { unit: u.id, source })
            })
            .collect::<Result<_, PipelineError>>()?;
        runtimes.voltage = Some(t.elapsed().as_secs_f64() * 1e3);
    }
    let outcomes = current
        .into_iter()
        .zip(voltage)
        .map(|(cur, volt)| {
            let (current, cycle) = match cur {
                Some((s, cc)) => (Some(s), Some(cc)),
                None => (None, None),
            };
            UnitOutcome { current, voltage: volt, cycle }
        })
        .collect();
    Ok((outcomes, runtimes))
}

#[derive(Debug, Clone)]
pub struct ReportOptions {
    pub method: MethodChoice,
    pub jl_crit: f64,
    pub tie_policy: TiePolicy,
    pub include_nodes: bool,
    pub input: String,
    pub timestamp: u64,
}

pub fn build_report(
    units: &[AnalysisUnit],
    outcomes: &[UnitOutcome],
    c: &DerivedConstants,
    options: &ReportOptions,
    runtimes: Runtimes,
) -> Result<ScreeningReport, PipelineError> {
    let per_unit: Vec<(UnitReport, ConfusionCounts, Vec<String>)> = units
        .par_iter()
        .zip(outcomes)
        .map(|(u, o)| {
            let stress = o.primary();
            let exact = exact_verdicts(&u.graph, stress, c.effective_crit, options.tie_policy);
            let blech = blech_verdicts(&u.graph, options.jl_crit);
            let (segments, counts) = segment_reports(&u.graph, &u.segment_names, &exact, &blech)?;
            let mut warnings = Vec::new();
            for s in segments.iter().filter(|s| s.tie) {
                warnings.push(format!("unit {}, segment {}: peak stress equals the critical stress", u.id, s.name));
            }
            if let Some(cc) = o.cycle.filter(|cc| !cc.passes()) {
                let seg = cc.worst_segment.map_or("?", |s| u.segment_names[s].as_str());
                warnings.push(format!(
                    "unit {}: cycle residual {:.3e} relative at segment {seg} exceeds the consistency gate",
                    u.id, cc.relative
                ));
            }
            let method_deviation = match (&o.current, &o.voltage) {
                (Some(a), Some(b)) => Some(relative_deviation(&a.node_stress, &b.node_stress)),
                _ => None,
            };
            let nodes = if options.include_nodes {
                u.graph
                    .nodes()
                    .iter()
                    .enumerate()
                    .map(|(i, n)| NodeReport {
                        name: n.name.clone(),
                        stress_pa: stress.node_stress[i],
                        stress_voltage_pa: o.current.as_ref().and(o.voltage.as_ref()).map(|v| v.node_stress[i]),
                    })
                    .collect()
            } else {
                Vec::new()
            };
            let report = UnitReport {
                id: u.id,
                layer: u.layer,
                mass_residual: mass_conservation_residual(&u.graph, stress, c),
                cycle_residual: o.cycle.map(|cc| cc.relative),
                method_deviation,
                nodes,
                segments,
            };
            Ok((report, counts, warnings))
        })
        .collect::<Result<_, PipelineError>>()?;

    let mut totals = ConfusionCounts::default();
    let mut warnings = Vec::new();
    let mut reports = Vec::with_capacity(per_unit.len());
    for (r, counts, w) in per_unit {
        totals.merge(&counts);
        warnings.extend(w);
        reports.push(r);
    }
    Ok(ScreeningReport {
        provenance: Provenance {
            tool: "emsteady".into(),
            version: env!("CARGO_PKG_VERSION").into(),
            input: options.input.clone(),
            method: options.method.to_string(),
            jl_crit: options.jl_crit,
            effective_crit: c.effective_crit,
            beta: c.beta,
            tie_policy: options.tie_policy,
            timestamp: options.timestamp,
        },
        units: reports,
        totals,
        runtimes_ms: runtimes,
        warnings,
    })
}

/// Units whose cycle residual fails the consistency gate.
pub fn cycle_failures(outcomes: &[UnitOutcome]) -> Vec<(usize, CycleCheck)> {
    outcomes
        .iter()
        .enumerate()
        .filter_map(|(i, o)| o.cycle.filter(|c| !c.passes()).map(|c| (i, c)))
        .collect()
}
