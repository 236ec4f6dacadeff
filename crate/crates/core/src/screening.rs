// SPDX-License-Identifier: Apache-2.0

//! Immortality verdicts and the comparison against the classical Blech
//! product test.
//!
//! A segment is exactly immortal when the larger of its two endpoint
//! stresses stays below the effective critical stress; only tensile stress
//! nucleates voids, so large compressive values never fail a segment. The
//! classical test calls a segment immortal when `|j|·l ≤ (jl)_crit`.
//!
//! "Positive" means predicted immortal by the classical test.

use std::fmt;

use serde::Serialize;
use thiserror::Error;

use crate::model::{InterconnectGraph, StressResult};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum TiePolicy {
    /// `max σ == σ_crit` counts as immortal (flagged as a tie).
    #[default]
    Immortal,
    Mortal,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExactVerdict {
    pub immortal: bool,
    /// Larger endpoint stress (Pa).
    pub peak_stress: f64,
    /// Peak equals the critical stress exactly.
    pub tie: bool,
}

pub fn exact_verdicts(graph: &InterconnectGraph, stress: &StressResult, effective_crit: f64, tie: TiePolicy) -> Vec<ExactVerdict> {
    graph
        .segments()
        .iter()
        .map(|s| {
            let peak = stress.peak_on(s);
            let is_tie = peak == effective_crit;
            let immortal = peak < effective_crit || (is_tie && tie == TiePolicy::Immortal);
            ExactVerdict { immortal, peak_stress: peak, tie: is_tie }
        })
        .collect()
}

/// `|j|·l ≤ jl_crit`, boundary inclusive.
pub fn blech_verdicts(graph: &InterconnectGraph, jl_crit: f64) -> Vec<bool> {
    graph.segments().iter().map(|s| s.jl().abs() <= jl_crit).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Cell {
    TP,
    TN,
    FP,
    FN,
}

impl Cell {
    pub fn classify(exact_immortal: bool, blech_immortal: bool) -> Self {
        match (blech_immortal, exact_immortal) {
            (true, true) => Cell::TP,
            (false, false) => Cell::TN,
            (true, false) => Cell::FP,
            (false, true) => Cell::FN,
        }
    }
}

impl fmt::Display for Cell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct ConfusionCounts {
    pub tp: usize,
    pub tn: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
}

impl ConfusionCounts {
    pub fn total(&self) -> usize {
        self.tp + self.tn + self.fp + self.fn_
    }

    pub fn add(&mut self, cell: Cell) {
        match cell {
            Cell::TP => self.tp += 1,
            Cell::TN => self.tn += 1,
            Cell::FP => self.fp += 1,
            Cell::FN => self.fn_ += 1,
        }
    }

    pub fn merge(&mut self, other: &ConfusionCounts) {
        self.tp += other.tp;
        self.tn += other.tn;
        self.fp += other.fp;
        self.fn_ += other.fn_;
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("verdict sets differ in size: {exact} exact vs {blech} classical")]
pub struct MismatchError {
    pub exact: usize,
    pub blech: usize,
}

pub fn compare(exact: &[bool], blech: &[bool]) -> Result<(Vec<Cell>, ConfusionCounts), MismatchError> {
    if exact.len() != blech.len() {
        return Err(MismatchError { exact: exact.len(), blech: blech.len() });
    }
    let mut counts = ConfusionCounts::default();
    let cells = exact
        .iter()
        .zip(blech)
        .map(|(&e, &b)| {
            let c = Cell::classify(e, b);
            counts.add(c);
            c
        })
        .collect();
    Ok((cells, counts))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NodeReport {
    pub name: String,
    pub stress_pa: f64,
    /// Voltage-method stress when both methods ran.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub stress_voltage_pa: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SegmentReport {
    pub name: String,
    pub jl: f64,
    pub length: f64,
    pub peak_stress_pa: f64,
    pub exact: bool,
    pub blech: bool,
    pub cell: Cell,
    #[serde(skip_serializing_if = "std::ops::Not::not")]
    pub tie: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct UnitReport {
    pub id: usize,
    pub layer: u32,
    pub mass_residual: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cycle_residual: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub method_deviation: Option<f64>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub nodes: Vec<NodeReport>,
    pub segments: Vec<SegmentReport>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct Runtimes {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub current: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub voltage: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dc: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Provenance {
    pub tool: String,
    pub version: String,
    pub input: String,
    pub method: String,
    pub jl_crit: f64,
    pub effective_crit: f64,
    pub beta: f64,
    pub tie_policy: TiePolicy,
    /// Seconds since the Unix epoch; the only field that varies between
    /// otherwise identical runs, besides `runtimes_ms`.
    pub timestamp: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScreeningReport {
    pub provenance: Provenance,
    pub units: Vec<UnitReport>,
    pub totals: ConfusionCounts,
    pub runtimes_ms: Runtimes,
    pub warnings: Vec<String>,
}

impl ScreeningReport {
    pub fn segment_count(&self) -> usize {
        self.units.iter().map(|u| u.segments.len()).sum()
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    /// One row per segment after a header.
    pub fn segments_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["unit", "layer", "segment", "jl_a_per_m", "length_m", "peak_stress_pa", "exact", "blech", "cell"])
            .unwrap();
        for u in &self.units {
            for s in &u.segments {
                w.write_record([
                    u.id.to_string(),
                    u.layer.to_string(),
                    s.name.clone(),
                    format!("{:e}", s.jl),
                    format!("{:e}", s.length),
                    format!("{:e}", s.peak_stress_pa),
                    s.exact.to_string(),
                    s.blech.to_string(),
                    s.cell.to_string(),
                ])
                .unwrap();
            }
        }
        String::from_utf8(w.into_inner().unwrap()).unwrap()
    }

    /// `|j|` against `l` with the confusion cell, for plotting.
    pub fn scatter_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["length_m", "abs_j_a_per_m2", "cell"]).unwrap();
        for s in self.units.iter().flat_map(|u| &u.segments) {
            w.write_record([format!("{:e}", s.length), format!("{:e}", (s.jl / s.length).abs()), s.cell.to_string()])
                .unwrap();
        }
        String::from_utf8(w.into_inner().unwrap()).unwrap()
    }

    pub fn nodes_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["unit", "node", "stress_pa", "stress_voltage_pa"]).unwrap();
        for u in &self.units {
            for n in &u.nodes {
                let v = n.stress_voltage_pa.map(|v| format!("{v:e}")).unwrap_or_default();
                w.write_record([u.id.to_string(), n.name.clone(), format!("{:e}", n.stress_pa), v]).unwrap();
            }
        }
        String::from_utf8(w.into_inner().unwrap()).unwrap()
    }
}

/// Segment rows of one unit from its stress and the two verdict sets.
pub fn segment_reports(
    graph: &InterconnectGraph,
    names: &[String],
    exact: &[ExactVerdict],
    blech: &[bool],
) -> Result<(Vec<SegmentReport>, ConfusionCounts), MismatchError> {
    let flags: Vec<bool> = exact.iter().map(|v| v.immortal).collect();
    let (cells, counts) = compare(&flags, blech)?;
    let rows = graph
        .segments()
        .iter()
        .zip(names)
        .zip(exact.iter().zip(blech).zip(cells))
        .map(|((s, name), ((e, &b), cell))| SegmentReport {
            name: name.clone(),
            jl: s.jl(),
            length: s.length,
            peak_stress_pa: e.peak_stress,
            exact: e.immortal,
            blech: b,
            cell,
            tie: e.tie,
        })
        .collect();
    Ok((rows, counts))
}

/// Share of segments where the classical test disagrees with the exact one.
pub fn error_rate(counts: &ConfusionCounts) -> f64 {
    let total = counts.total();
    if total == 0 {
        0.0
    } else {
        (counts.fp + counts.fn_) as f64 / total as f64
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{derive_constants, MaterialParams, NodeRecord, Segment};
    use crate::stress::stress_current;

    fn single(j: f64, l: f64) -> InterconnectGraph {
        let nodes = (0..2).map(|i| NodeRecord { id: i, name: format!("v{i}"), layer: 1, position: None }).collect();
        let seg = Segment { id: 0, from_node: 0, to_node: 1, length: l, width: 1e-6, height: 1e-6, current_density: j };
        InterconnectGraph::new(nodes, vec![seg])
    }

    #[test]
    fn single_segment_below_critical() {
        let c = derive_constants(&MaterialParams::cu_dual_damascene()).unwrap();
        let l = 1e-5;
        // β·j·l/2 = 40 MPa.
        let j = 2.0 * 40e6 / (c.beta * l);
        let g = single(j, l);
        let (s, _) = stress_current(&g, &c).unwrap();
        let v = exact_verdicts(&g, &s, 41e6, TiePolicy::Immortal);
        assert!(v[0].immortal);
        assert!((v[0].peak_stress - 40e6).abs() < 1e-3);
        let zero = single(0.0, l);
        let (s0, _) = stress_current(&zero, &c).unwrap();
        assert!(exact_verdicts(&zero, &s0, 41e6, TiePolicy::Immortal)[0].immortal);
    }

    #[test]
    fn ties_follow_policy() {
        let g = single(0.0, 1e-5);
        let s = StressResult {
            method: crate::model::Method::Current,
            node_stress: vec![41e6, -41e6],
            blech_sum: None,
            reference_node: 0,
            area_sum: 0.0,
            q_sum: 0.0,
        };
        let v = exact_verdicts(&g, &s, 41e6, TiePolicy::Immortal);
        assert!(v[0].immortal && v[0].tie);
        assert!(!exact_verdicts(&g, &s, 41e6, TiePolicy::Mortal)[0].immortal);
    }

    #[test]
    fn blech_boundary_inclusive() {
        let l = 1e-5;
        assert!(blech_verdicts(&single(2e5 / l, l), 2.7e5)[0]);
        let g = single(-2.7e5 / l, l);
        let jl = g.segments()[0].jl().abs();
        assert!(blech_verdicts(&g, jl)[0]);
        assert!(!blech_verdicts(&single(3e5 / l, l), 2.7e5)[0]);
        assert!(blech_verdicts(&single(0.0, l), 2.7e5)[0]);
    }

    #[test]
    fn confusion_cells() {
        let (cells, counts) = compare(&[true, false, false, true], &[true, false, true, false]).unwrap();
        assert_eq!(cells, vec![Cell::TP, Cell::TN, Cell::FP, Cell::FN]);
        assert_eq!(counts, ConfusionCounts { tp: 1, tn: 1, fp: 1, fn_: 1 });
        assert!(compare(&[true], &[]).is_err());
        let (_, all) = compare(&[true; 3], &[true; 3]).unwrap();
        assert_eq!(all.tp, 3);
    }

    #[test]
    fn empty_report() {
        let r = ScreeningReport {
            provenance: Provenance {
                tool: "emsteady".into(),
                version: "0".into(),
                input: "-".into(),
                method: "both".into(),
                jl_crit: 2.7e5,
                effective_crit: 41e6,
                beta: 305.0,
                tie_policy: TiePolicy::Immortal,
                timestamp: 0,
            },
            units: vec![],
            totals: ConfusionCounts::default(),
            runtimes_ms: Runtimes::default(),
            warnings: vec![],
        };
        let v: serde_json::Value = serde_json::from_str(&r.to_json()).unwrap();
        assert_eq!(v["totals"]["fn"], 0);
        assert_eq!(r.segments_csv().lines().count(), 1);
        assert_eq!(error_rate(&r.totals), 0.0);
    }
}
