// SPDX-License-Identifier: Apache-2.0

//! Layer and coordinate recovery from node labels.
//!
//! Power-grid benchmark netlists encode position in the node label, e.g.
//! `n3_1200_450` is a node on metal 3 at grid coordinates (1200, 450). The
//! label grammar is configurable through [`NamingRule`].

use regex::Regex;
use thiserror::Error;

use super::spice::{Netlist, GROUND};

/// How node labels map to `(layer, x, y)`.
#[derive(Debug, Clone)]
pub struct NamingRule {
    /// Must define named groups `layer`, `x` and `y`.
    pub pattern: Regex,
    /// Metres per coordinate unit.
    pub coordinate_unit: f64,
    /// Width-to-thickness ratio used to split a back-calculated area.
    pub aspect_ratio: f64,
    /// Treat resistors touching unparseable labels as off-grid instead of
    /// failing.
    pub allow_unmatched: bool,
}

pub const DEFAULT_LABEL_PATTERN: &str = r"^n(?P<layer>\d+)_(?P<x>-?\d+)_(?P<y>-?\d+)$";

impl Default for NamingRule {
    fn default() -> Self {
        Self {
            pattern: Regex::new(DEFAULT_LABEL_PATTERN).unwrap(),
            coordinate_unit: 1e-6,
            aspect_ratio: 1.0,
            allow_unmatched: false,
        }
    }
}

impl NamingRule {
    pub fn with_pattern(pattern: &str) -> Result<Self, GeometryError> {
        let pattern = Regex::new(pattern).map_err(|e| GeometryError::Pattern(e.to_string()))?;
        for group in ["layer", "x", "y"] {
            if !pattern.capture_names().any(|n| n == Some(group)) {
                return Err(GeometryError::Pattern(format!("missing named group `{group}`")));
            }
        }
        Ok(Self { pattern, ..Self::default() })
    }

    /// Decodes one label into `(layer, x, y)` with coordinates in metres.
    pub fn decode(&self, label: &str) -> Option<(u32, f64, f64)> {
        let caps = self.pattern.captures(label)?;
        let layer = caps.name("layer")?.as_str().parse().ok()?;
        let x: f64 = caps.name("x")?.as_str().parse().ok()?;
        let y: f64 = caps.name("y")?.as_str().parse().ok()?;
        let (x, y) = (x * self.coordinate_unit, y * self.coordinate_unit);
        (x.is_finite() && y.is_finite()).then_some((layer, x, y))
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeometryError {
    #[error("invalid naming pattern: {0}")]
    Pattern(String),
    #[error("{count} node label(s) do not match the naming rule: {}", .labels.join(", "))]
    Unmatched { count: usize, labels: Vec<String> },
    #[error("resistor {0} has zero length")]
    ZeroLength(String),
    #[error("resistor {name}: {message}")]
    Area { name: String, message: String },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NodeGeometry {
    pub layer: u32,
    pub x: f64,
    pub y: f64,
}

/// Role of one resistor in the electromigration model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ResistorClass {
    /// Intra-layer wire of the given Manhattan length (m).
    Wire { layer: u32, length: f64 },
    /// Zero-ohm intra-layer connection; its endpoints are merged.
    Short { layer: u32 },
    /// Inter-layer connection; a blocking boundary for atomic flux.
    Via,
    /// Touches ground or an unmatched label; not part of any wire network.
    OffGrid,
}

/// Per-node positions and per-resistor classification of a netlist.
#[derive(Debug, Clone, PartialEq)]
pub struct LayerGeometry {
    /// Indexed like the netlist nodes; `None` for ground and unmatched labels.
    pub nodes: Vec<Option<NodeGeometry>>,
    /// Indexed like `Netlist::resistors`.
    pub resistors: Vec<ResistorClass>,
}

impl LayerGeometry {
    pub fn wire_count(&self) -> usize {
        self.resistors.iter().filter(|c| matches!(c, ResistorClass::Wire { .. })).count()
    }

    pub fn via_count(&self) -> usize {
        self.resistors.iter().filter(|c| matches!(c, ResistorClass::Via)).count()
    }
}

const MAX_REPORTED_LABELS: usize = 20;

pub fn decode_geometry(netlist: &Netlist, rule: &NamingRule) -> Result<LayerGeometry, GeometryError> {
    let mut nodes = Vec::with_capacity(netlist.node_count());
    let mut unmatched = Vec::new();
    for (id, label) in netlist.node_names().iter().enumerate() {
        if id == GROUND {
            nodes.push(None);
            continue;
        }
        match rule.decode(label) {
            Some((layer, x, y)) => nodes.push(Some(NodeGeometry { layer, x, y })),
            None => {
                unmatched.push(label.clone());
                nodes.push(None);
            }
        }
    }
    if !unmatched.is_empty() && !rule.allow_unmatched {
        let count = unmatched.len();
        unmatched.truncate(MAX_REPORTED_LABELS);
        return Err(GeometryError::Unmatched { count, labels: unmatched });
    }

    let mut resistors = Vec::with_capacity(netlist.resistors.len());
    for r in &netlist.resistors {
        let class = match (nodes[r.a], nodes[r.b]) {
            (Some(p), Some(q)) if p.layer != q.layer => ResistorClass::Via,
            (Some(p), Some(q)) => {
                let length = (p.x - q.x).abs() + (p.y - q.y).abs();
                if r.value == 0.0 {
                    ResistorClass::Short { layer: p.layer }
                } else if length == 0.0 {
                    return Err(GeometryError::ZeroLength(r.name.clone()));
                } else {
                    ResistorClass::Wire { layer: p.layer, length }
                }
            }
            _ => ResistorClass::OffGrid,
        };
        resistors.push(class);
    }
    Ok(LayerGeometry { nodes, resistors })
}

/// Wire cross-section recovered from a resistance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CrossSection {
    /// `w·h` (m²).
    pub area: f64,
    pub width: f64,
    pub height: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Error)]
pub enum AreaError {
    #[error("zero resistance: segment is a short")]
    Short,
    #[error("resistance must be positive and finite")]
    BadResistance,
    #[error("length must be positive and finite")]
    BadLength,
}

/// Chooses `w·h = ρ·l/R` so that `R = ρ·l/(w·h)` holds for the wire, then
/// splits the area as `w = sqrt(area·aspect)`, `h = w/aspect`.
pub fn back_calculate_area(resistance: f64, length: f64, rho: f64, aspect_ratio: f64) -> Result<CrossSection, AreaError> {
    if resistance == 0.0 {
        return Err(AreaError::Short);
    }
    if !(resistance > 0.0 && resistance.is_finite()) {
        return Err(AreaError::BadResistance);
    }
    if !(length > 0.0 && length.is_finite()) {
        return Err(AreaError::BadLength);
    }
    let area = rho * length / resistance;
    let width = (area * aspect_ratio).sqrt();
    let height = width / aspect_ratio;
    Ok(CrossSection { area, width, height })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::netlist::spice::parse_spice;

    #[test]
    fn manhattan_length_in_metres() {
        let n = parse_spice("R1 n1_0_0 n1_100_0 0.5\nR2 n1_100_0 n1_130_40 1\n").unwrap();
        let g = decode_geometry(&n, &NamingRule::default()).unwrap();
        match g.resistors[0] {
            ResistorClass::Wire { layer: 1, length } => assert!((length - 1.0e-4).abs() < 1e-18),
            other => panic!("{other:?}"),
        }
        match g.resistors[1] {
            ResistorClass::Wire { length, .. } => assert!((length - 70e-6).abs() < 1e-18),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn inter_layer_is_via() {
        let n = parse_spice("R1 n1_0_0 n2_0_0 0.1\nR2 n2_0_0 0 1\nR3 n1_0_0 n1_0_5 0\n").unwrap();
        let g = decode_geometry(&n, &NamingRule::default()).unwrap();
        assert_eq!(g.resistors, vec![ResistorClass::Via, ResistorClass::OffGrid, ResistorClass::Short { layer: 1 }]);
        assert_eq!(g.via_count(), 1);
        assert_eq!(g.wire_count(), 0);
    }

    #[test]
    fn unmatched_label_is_error() {
        let n = parse_spice("R1 vdd n1_0_0 1\n").unwrap();
        let e = decode_geometry(&n, &NamingRule::default()).unwrap_err();
        assert_eq!(e, GeometryError::Unmatched { count: 1, labels: vec!["vdd".into()] });

        let rule = NamingRule { allow_unmatched: true, ..NamingRule::default() };
        let g = decode_geometry(&n, &rule).unwrap();
        assert_eq!(g.resistors, vec![ResistorClass::OffGrid]);
    }

    #[test]
    fn unmatched_list_is_capped() {
        let text: String = (0..30).map(|i| format!("R{i} a{i} b{i} 1\n")).collect();
        let n = parse_spice(&text).unwrap();
        match decode_geometry(&n, &NamingRule::default()).unwrap_err() {
            GeometryError::Unmatched { count, labels } => {
                assert_eq!(count, 60);
                assert_eq!(labels.len(), 20);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn zero_length_wire_is_error() {
        let rule = NamingRule::with_pattern(r"^m(?P<layer>\d)_(?P<x>\d+)_(?P<y>\d+)_\w+$").unwrap();
        let n = parse_spice("R1 m1_0_0_a m1_0_0_b 1\n").unwrap();
        assert_eq!(decode_geometry(&n, &rule).unwrap_err(), GeometryError::ZeroLength("R1".into()));
        assert!(NamingRule::with_pattern(r"^n(?P<layer>\d)$").is_err());
    }

    #[test]
    fn custom_unit() {
        let rule = NamingRule { coordinate_unit: 1e-9, ..NamingRule::default() };
        let (layer, x, y) = rule.decode("n4_2000_-1000").unwrap();
        assert_eq!(layer, 4);
        assert!((x - 2e-6).abs() < 1e-20 && (y + 1e-6).abs() < 1e-20);
    }

    #[test]
    fn area_from_resistance() {
        let cs = back_calculate_area(0.5, 1e-4, 2.25e-8, 1.0).unwrap();
        assert!((cs.area - 4.5e-12).abs() < 1e-24);
        assert!((cs.width * cs.height - cs.area).abs() < 1e-24);
        let doubled = back_calculate_area(1.0, 1e-4, 2.25e-8, 1.0).unwrap();
        assert!((doubled.area - cs.area / 2.0).abs() < 1e-24);
        let tall = back_calculate_area(0.5, 1e-4, 2.25e-8, 0.5).unwrap();
        assert!((tall.width / tall.height - 0.5).abs() < 1e-12);
        assert_eq!(back_calculate_area(0.0, 1e-4, 2.25e-8, 1.0), Err(AreaError::Short));
        assert_eq!(back_calculate_area(1.0, 0.0, 2.25e-8, 1.0), Err(AreaError::BadLength));
    }
}
