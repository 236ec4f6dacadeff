// SPDX-License-Identifier: Apache-2.0

//! Native geometric format, all values SI:
//!
//! ```text
//! # comment
//! NODE id name layer x y [volts]     x, y may be `-` when unknown
//! SEG  id nodeA nodeB layer l w h j  j: electron-current density (A/m²)
//! ```
//!
//! `nodeA`/`nodeB` refer to NODE ids and give the reference direction.
//! Node voltages are optional but must be given for all nodes or none.

use std::collections::HashMap;
use std::fmt::Write as _;

use thiserror::Error;

use super::units::Design;
use crate::model::{InterconnectGraph, NodeRecord, Segment};

#[derive(Debug, Clone, PartialEq, Error)]
#[error("line {line}: {message}")]
pub struct EmgError {
    pub line: usize,
    pub message: String,
}

fn err(line: usize, message: impl Into<String>) -> EmgError {
    EmgError { line, message: message.into() }
}

fn number(tok: &str, what: &str, line: usize) -> Result<f64, EmgError> {
    match tok.parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(v),
        _ => Err(err(line, format!("invalid {what} {tok:?}"))),
    }
}

pub fn parse_emg(text: &str) -> Result<Design, EmgError> {
    let mut node_index: HashMap<&str, usize> = HashMap::new();
    let mut names: HashMap<&str, usize> = HashMap::new();
    let mut nodes = Vec::new();
    let mut volts: Vec<Option<f64>> = Vec::new();
    let mut seg_ids: HashMap<&str, usize> = HashMap::new();
    let mut segments = Vec::new();
    let mut seg_names = Vec::new();
    let mut pending = Vec::new();

    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let body = raw.split('#').next().unwrap_or("");
        let tok: Vec<&str> = body.split_whitespace().collect();
        let Some(&kind) = tok.first() else { continue };
        match kind.to_ascii_uppercase().as_str() {
            "NODE" => {
                if tok.len() != 6 && tok.len() != 7 {
                    return Err(err(line, format!("NODE expects 5 or 6 fields, got {}", tok.len() - 1)));
                }
                if node_index.insert(tok[1], nodes.len()).is_some() {
                    return Err(err(line, format!("duplicate node id {}", tok[1])));
                }
                if names.insert(tok[2], nodes.len()).is_some() {
                    return Err(err(line, format!("duplicate node name {}", tok[2])));
                }
                let layer = tok[3].parse().map_err(|_| err(line, format!("invalid layer {:?}", tok[3])))?;
                let position = match (tok[4], tok[5]) {
                    ("-", "-") => None,
                    (x, y) => Some((number(x, "x", line)?, number(y, "y", line)?)),
                };
                let v = tok.get(6).map(|t| number(t, "voltage", line)).transpose()?;
                nodes.push(NodeRecord { id: 0, name: tok[2].to_string(), layer, position });
                volts.push(v);
            }
            "SEG" => {
                if tok.len() != 9 {
                    return Err(err(line, format!("SEG expects 8 fields, got {}", tok.len() - 1)));
                }
                if seg_ids.insert(tok[1], segments.len()).is_some() {
                    return Err(err(line, format!("duplicate segment id {}", tok[1])));
                }
                let layer: u32 = tok[4].parse().map_err(|_| err(line, format!("invalid layer {:?}", tok[4])))?;
                let length = number(tok[5], "length", line)?;
                let width = number(tok[6], "width", line)?;
                let height = number(tok[7], "height", line)?;
                let current_density = number(tok[8], "current density", line)?;
                for (what, v) in [("length", length), ("width", width), ("height", height)] {
                    if v <= 0.0 {
                        return Err(err(line, format!("{what} must be positive")));
                    }
                }
                if tok[2] == tok[3] {
                    return Err(err(line, "segment endpoints must differ"));
                }
                segments.push(Segment { id: 0, from_node: 0, to_node: 0, length, width, height, current_density });
                seg_names.push(tok[1].to_string());
                pending.push((line, tok[2], tok[3], layer));
            }
            other => return Err(err(line, format!("unknown record {other:?}"))),
        }
    }

    for (seg, (line, a, b, layer)) in segments.iter_mut().zip(pending) {
        let lookup = |id: &str| node_index.get(id).copied().ok_or_else(|| err(line, format!("unknown node id {id}")));
        seg.from_node = lookup(a)?;
        seg.to_node = lookup(b)?;
        for v in [seg.from_node, seg.to_node] {
            if nodes[v].layer != layer {
                return Err(err(line, format!("node {} is on layer {}, segment on layer {layer}", nodes[v].name, nodes[v].layer)));
            }
        }
    }

    let given = volts.iter().filter(|v| v.is_some()).count();
    let node_voltage = if given == 0 {
        None
    } else if given == volts.len() {
        Some(volts.into_iter().flatten().collect())
    } else {
        let missing = volts.iter().position(Option::is_none).unwrap();
        return Err(err(0, format!("node {} has no voltage while others do", nodes[missing].name)));
    };
    Ok(Design { graph: InterconnectGraph::new(nodes, segments), segment_names: seg_names, node_voltage })
}

pub fn write_emg(design: &Design) -> String {
    let mut out = String::new();
    for (i, n) in design.graph.nodes().iter().enumerate() {
        let _ = write!(out, "NODE {i} {} {}", n.name, n.layer);
        match n.position {
            Some((x, y)) => {
                let _ = write!(out, " {x:e} {y:e}");
            }
            None => out.push_str(" - -"),
        }
        if let Some(v) = &design.node_voltage {
            let _ = write!(out, " {:e}", v[i]);
        }
        out.push('\n');
    }
    for (s, name) in design.graph.segments().iter().zip(&design.segment_names) {
        let layer = design.graph.nodes()[s.from_node].layer;
        let _ = writeln!(
            out,
            "SEG {name} {} {} {layer} {:e} {:e} {:e} {:e}",
            s.from_node, s.to_node, s.length, s.width, s.height, s.current_density
        );
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    const LINE: &str = "\
# two segments
NODE 1 a 1 0 0
NODE 2 b 1 1e-4 0
NODE 3 c 1 2e-4 0
SEG s1 1 2 1 1e-4 1e-6 1e-6 1e10
SEG s2 2 3 1 1e-4 1e-6 1e-6 -5e9
";

    #[test]
    fn parses_line() {
        let d = parse_emg(LINE).unwrap();
        assert_eq!(d.graph.node_count(), 3);
        assert_eq!(d.graph.segments()[1].from_node, 1);
        assert_eq!(d.graph.segments()[1].current_density, -5e9);
        assert_eq!(d.segment_names, vec!["s1", "s2"]);
        assert!(d.node_voltage.is_none());
    }

    #[test]
    fn round_trip() {
        let d = parse_emg(LINE).unwrap();
        assert_eq!(parse_emg(&write_emg(&d)).unwrap(), d);
        let with_v = "NODE 0 a 2 - - 1.5\nNODE 1 b 2 - - 1.25\nSEG 0 0 1 2 1 1 1 3\n";
        let d = parse_emg(with_v).unwrap();
        assert_eq!(d.node_voltage, Some(vec![1.5, 1.25]));
        assert_eq!(parse_emg(&write_emg(&d)).unwrap(), d);
    }

    #[test]
    fn errors_carry_lines() {
        assert_eq!(parse_emg("NODE 1 a 1 0 0\nSEG s 1 9 1 1 1 1 0\n").unwrap_err().line, 2);
        assert_eq!(parse_emg("NODE 1 a 1 0 0\nNODE 2 b 1 0 0\nSEG s 1 2 1 0 1 1 0\n").unwrap_err().message, "length must be positive");
        assert!(parse_emg("WIRE x\n").is_err());
        assert!(parse_emg("NODE 1 a 1 0 0\nNODE 2 b 2 0 0\nSEG s 1 2 1 1 1 1 0\n").is_err());
        assert!(parse_emg("NODE 1 a 1 - - 1\nNODE 2 b 1 - -\n").is_err());
    }
}
