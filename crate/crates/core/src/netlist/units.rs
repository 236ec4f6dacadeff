// SPDX-License-Identifier: Apache-2.0

//! Splitting a design into per-layer connected analysis units.

use thiserror::Error;

use super::geometry::{back_calculate_area, LayerGeometry, ResistorClass};
use super::spice::Netlist;
use crate::dc::DcSolution;
use crate::model::{InterconnectGraph, NodeRecord, Segment};

/// A whole design before splitting: one graph plus optional node voltages.
#[derive(Debug, Clone, PartialEq)]
pub struct Design {
    pub graph: InterconnectGraph,
    pub segment_names: Vec<String>,
    pub node_voltage: Option<Vec<f64>>,
}

/// One connected component of one metal layer.
#[derive(Debug, Clone, PartialEq)]
pub struct AnalysisUnit {
    pub id: usize,
    pub layer: u32,
    pub graph: InterconnectGraph,
    pub node_voltage: Option<Vec<f64>>,
    pub segment_names: Vec<String>,
    /// Node index in the source [`Design`].
    pub node_origin: Vec<usize>,
    /// Segment index in the source [`Design`].
    pub segment_origin: Vec<usize>,
}

/// Where each netlist element went.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ElementAccounting {
    pub segments: usize,
    pub vias: usize,
    pub sources: usize,
    /// Zero-ohm resistors merged away.
    pub shorts: usize,
    /// Resistors to ground or to unmatched labels.
    pub off_grid: usize,
    /// Wires whose endpoints were merged by shorts.
    pub collapsed: usize,
}

impl ElementAccounting {
    pub fn total(&self) -> usize {
        self.segments + self.vias + self.sources + self.shorts + self.off_grid + self.collapsed
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum UnitError {
    #[error("resistor {name}: {message}")]
    Area { name: String, message: String },
    #[error("DC solution covers {got} nodes, netlist has {want}")]
    Coverage { got: usize, want: usize },
}

/// Converts the wire resistors of a solved netlist into one [`Design`].
///
/// Zero-ohm wires merge their endpoints (the lowest node id represents the
/// group). Every remaining wire becomes a segment with `w·h = ρl/R` and
/// electron-convention density `j = −I/(w·h)`, so `j·l = (V_to − V_from)/ρ`.
pub fn design_from_netlist(
    netlist: &Netlist,
    geometry: &LayerGeometry,
    dc: &DcSolution,
    rho: f64,
    aspect_ratio: f64,
) -> Result<(Design, ElementAccounting), UnitError> {
    let n = netlist.node_count();
    if dc.node_voltage.len() != n || dc.branch_current.len() != netlist.resistors.len() {
        return Err(UnitError::Coverage { got: dc.node_voltage.len(), want: n });
    }
    let mut rep: Vec<usize> = (0..n).collect();
    fn find(rep: &mut [usize], mut v: usize) -> usize {
        while rep[v] != v {
            rep[v] = rep[rep[v]];
            v = rep[v];
        }
        v
    }
    let mut acc = ElementAccounting {
        sources: netlist.current_sources.len() + netlist.voltage_sources.len(),
        ..Default::default()
    };
    for (r, class) in netlist.resistors.iter().zip(&geometry.resistors) {
        if let ResistorClass::Short { .. } = class {
            let (a, b) = (find(&mut rep, r.a), find(&mut rep, r.b));
            let (lo, hi) = (a.min(b), a.max(b));
            rep[hi] = lo;
        }
    }

    let mut index = vec![usize::MAX; n];
    let mut nodes = Vec::new();
    let mut voltage = Vec::new();
    let mut segments = Vec::new();
    let mut names = Vec::new();
    for (ri, (r, class)) in netlist.resistors.iter().zip(&geometry.resistors).enumerate() {
        let (layer, length) = match *class {
            ResistorClass::Wire { layer, length } => (layer, length),
            ResistorClass::Short { .. } => {
                acc.shorts += 1;
                continue;
            }
            ResistorClass::Via => {
                acc.vias += 1;
                continue;
            }
            ResistorClass::OffGrid => {
                acc.off_grid += 1;
                continue;
            }
        };
        let (a, b) = (find(&mut rep, r.a), find(&mut rep, r.b));
        if a == b {
            acc.collapsed += 1;
            continue;
        }
        let cs = back_calculate_area(r.value, length, rho, aspect_ratio)
            .map_err(|e| UnitError::Area { name: r.name.clone(), message: e.to_string() })?;
        let mut local = |v: usize| {
            if index[v] == usize::MAX {
                index[v] = nodes.len();
                let position = geometry.nodes[v].map(|g| (g.x, g.y));
                nodes.push(NodeRecord { id: 0, name: netlist.node_name(v).to_string(), layer, position });
                voltage.push(dc.node_voltage[v]);
            }
            index[v]
        };
        let (from_node, to_node) = (local(a), local(b));
        segments.push(Segment {
            id: 0,
            from_node,
            to_node,
            length,
            width: cs.width,
            height: cs.height,
            current_density: -dc.branch_current[ri] / cs.area,
        });
        names.push(r.name.clone());
        acc.segments += 1;
    }
    let design = Design {
        graph: InterconnectGraph::new(nodes, segments),
        segment_names: names,
        node_voltage: Some(voltage),
    };
    Ok((design, acc))
}

/// Connected components of a design, in order of their lowest node.
/// Nodes without segments are skipped and counted.
pub fn split_units(design: &Design) -> (Vec<AnalysisUnit>, usize) {
    let g = &design.graph;
    let n = g.node_count();
    let mut comp = vec![usize::MAX; n];
    let mut members: Vec<Vec<usize>> = Vec::new();
    let mut isolated = 0;
    let mut stack = Vec::new();
    for start in 0..n {
        if comp[start] != usize::MAX {
            continue;
        }
        if g.degree(start) == 0 {
            isolated += 1;
            continue;
        }
        let c = members.len();
        let mut list = vec![start];
        comp[start] = c;
        stack.push(start);
        while let Some(v) = stack.pop() {
            for &(_, w) in g.neighbors(v) {
                if comp[w] == usize::MAX {
                    comp[w] = c;
                    list.push(w);
                    stack.push(w);
                }
            }
        }
        list.sort_unstable();
        members.push(list);
    }
    let mut seg_members: Vec<Vec<usize>> = vec![Vec::new(); members.len()];
    for s in g.segments() {
        seg_members[comp[s.from_node]].push(s.id);
    }

    let mut local = vec![0usize; n];
    let units = members
        .into_iter()
        .zip(seg_members)
        .enumerate()
        .map(|(id, (node_ids, seg_ids))| {
            for (i, &v) in node_ids.iter().enumerate() {
                local[v] = i;
            }
            let nodes = node_ids.iter().map(|&v| g.nodes()[v].clone()).collect();
            let segments = seg_ids
                .iter()
                .map(|&s| {
                    let mut seg = g.segments()[s];
                    seg.from_node = local[seg.from_node];
                    seg.to_node = local[seg.to_node];
                    seg
                })
                .collect();
            AnalysisUnit {
                id,
                layer: g.nodes()[node_ids[0]].layer,
                graph: InterconnectGraph::new(nodes, segments),
                node_voltage: design.node_voltage.as_ref().map(|v| node_ids.iter().map(|&i| v[i]).collect()),
                segment_names: seg_ids.iter().map(|&s| design.segment_names[s].clone()).collect(),
                node_origin: node_ids,
                segment_origin: seg_ids,
            }
        })
        .collect();
    (units, isolated)
}

/// A unit holding an entire (connected) graph as-is.
pub fn single_unit(graph: InterconnectGraph, node_voltage: Option<Vec<f64>>) -> AnalysisUnit {
    let layer = graph.nodes().first().map_or(0, |n| n.layer);
    AnalysisUnit {
        id: 0,
        layer,
        node_voltage,
        segment_names: (0..graph.segment_count()).map(|i| format!("s{i}")).collect(),
        node_origin: (0..graph.node_count()).collect(),
        segment_origin: (0..graph.segment_count()).collect(),
        graph,
    }
}
