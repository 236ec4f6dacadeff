// SPDX-License-Identifier: Apache-2.0

//! Domain types shared by every analysis stage.
//!
//! All quantities are strict SI: metres, pascals, amperes per square metre,
//! volts. Current densities follow the electron-current convention: a
//! positive `current_density` means electrons travel from `from_node` to
//! `to_node`, i.e. conventional current flows the other way.

use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Elementary charge (C), exact SI value.
pub const ELEMENTARY_CHARGE: f64 = 1.602_176_634e-19;
/// Boltzmann constant (J/K), exact SI value.
pub const BOLTZMANN: f64 = 1.380_649e-23;

pub type NodeId = usize;
pub type SegmentId = usize;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ParamError {
    #[error("{field} must be positive (got {value})")]
    NotPositive { field: &'static str, value: f64 },
    #[error("{field} must be non-negative (got {value})")]
    Negative { field: &'static str, value: f64 },
    #[error("{field} must be finite (got {value})")]
    NotFinite { field: &'static str, value: f64 },
}

/// Technology constants of one interconnect metal.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MaterialParams {
    /// Resistivity (Ω·m).
    pub rho: f64,
    /// Bulk modulus (Pa).
    pub bulk_modulus: f64,
    /// Atomic volume (m³).
    pub atomic_volume: f64,
    /// Diffusivity prefactor (m²/s).
    pub diffusion_prefactor: f64,
    /// Activation energy (eV).
    pub activation_energy: f64,
    /// Effective charge number.
    pub effective_charge: f64,
    /// Absolute temperature (K).
    pub temperature: f64,
    /// Void-nucleation threshold (Pa).
    pub sigma_crit: f64,
    /// Residual thermal stress (Pa).
    #[serde(default)]
    pub sigma_thermal: f64,
}

impl MaterialParams {
    /// Copper dual-damascene parameter set used throughout the documentation
    /// and the shipped technology file.
    pub const fn cu_dual_damascene() -> Self {
        Self {
            rho: 2.25e-8,
            bulk_modulus: 28e9,
            atomic_volume: 1.18e-29,
            diffusion_prefactor: 1.3e-9,
            activation_energy: 0.8,
            effective_charge: 1.0,
            temperature: 378.0,
            sigma_crit: 41e6,
            sigma_thermal: 0.0,
        }
    }

    pub fn validate(&self) -> Result<(), ParamError> {
        let positive = [
            ("resistivity", self.rho),
            ("bulk_modulus", self.bulk_modulus),
            ("atomic_volume", self.atomic_volume),
            ("diffusion_prefactor", self.diffusion_prefactor),
            ("effective_charge", self.effective_charge),
            ("temperature", self.temperature),
        ];
        for (field, value) in positive {
            if !value.is_finite() {
                return Err(ParamError::NotFinite { field, value });
            }
            if value <= 0.0 {
                return Err(ParamError::NotPositive { field, value });
            }
        }
        let value = self.activation_energy;
        if !value.is_finite() {
            return Err(ParamError::NotFinite { field: "activation_energy", value });
        }
        if value < 0.0 {
            return Err(ParamError::Negative { field: "activation_energy", value });
        }
        for (field, value) in [("sigma_crit", self.sigma_crit), ("sigma_thermal", self.sigma_thermal)] {
            if !value.is_finite() {
                return Err(ParamError::NotFinite { field, value });
            }
        }
        Ok(())
    }
}

impl Default for MaterialParams {
    fn default() -> Self {
        Self::cu_dual_damascene()
    }
}

/// Constants derived from [`MaterialParams`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DerivedConstants {
    /// Stress per unit `j·l` (Pa·m/A): `Z*·e·ρ/Ω`.
    pub beta: f64,
    /// Stress per volt (Pa/V): `Z*·e/Ω`.
    pub beta_over_rho: f64,
    /// Stress diffusivity (m²/s).
    pub kappa: f64,
    /// Tensile threshold after the thermal offset (Pa).
    pub effective_crit: f64,
    /// Resistivity carried along for voltage/current conversions (Ω·m).
    pub rho: f64,
}

impl DerivedConstants {
    /// The `(jl)_crit` at which a lone segment's cathode reaches the
    /// effective critical stress: its peak stress is `β|j|l/2`.
    pub fn single_segment_jl_crit(&self) -> f64 {
        2.0 * self.effective_crit / self.beta
    }
}

pub fn derive_constants(params: &MaterialParams) -> Result<DerivedConstants, ParamError> {
    params.validate()?;
    let beta_over_rho = params.effective_charge * ELEMENTARY_CHARGE / params.atomic_volume;
    let beta = beta_over_rho * params.rho;
    let kt = BOLTZMANN * params.temperature;
    let da = params.diffusion_prefactor
        * (-params.activation_energy * ELEMENTARY_CHARGE / kt).exp();
    let kappa = da * params.bulk_modulus * params.atomic_volume / kt;
    Ok(DerivedConstants {
        beta,
        beta_over_rho,
        kappa,
        effective_crit: params.sigma_crit - params.sigma_thermal,
        rho: params.rho,
    })
}

#[derive(Debug, Error)]
pub enum TechFileError {
    #[error("reading technology file {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("technology file: {0}")]
    Syntax(#[from] toml::de::Error),
    #[error("technology file: {0}")]
    Invalid(#[from] ParamError),
    #[error("technology file: jl_crit must be positive (got {0})")]
    JlCrit(f64),
}

/// Contents of a technology file: the material parameters plus an optional
/// Blech threshold.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TechFile {
    #[serde(flatten)]
    pub params: MaterialParams,
    /// Classical Blech threshold (A/m).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub jl_crit: Option<f64>,
}

/// The default technology file, shipped with the crate.
pub const DEFAULT_TECH_FILE: &str = include_str!("../../../data/cu_dd.toml");

impl TechFile {
    pub fn parse(text: &str) -> Result<Self, TechFileError> {
        let tech: TechFile = toml::from_str(text)?;
        tech.params.validate()?;
        if let Some(jl) = tech.jl_crit {
            if !(jl.is_finite() && jl > 0.0) {
                return Err(TechFileError::JlCrit(jl));
            }
        }
        Ok(tech)
    }

    pub fn load(path: &Path) -> Result<Self, TechFileError> {
        let text = std::fs::read_to_string(path).map_err(|source| TechFileError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::parse(&text)
    }

    pub fn builtin() -> Self {
        Self::parse(DEFAULT_TECH_FILE).expect("shipped technology file is valid")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeRecord {
    pub id: NodeId,
    pub name: String,
    pub layer: u32,
    /// Planar position (m), when known.
    pub position: Option<(f64, f64)>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub id: SegmentId,
    /// Start of the reference direction (`x = 0`).
    pub from_node: NodeId,
    /// End of the reference direction (`x = l`).
    pub to_node: NodeId,
    /// Length (m).
    pub length: f64,
    /// Width (m).
    pub width: f64,
    /// Thickness (m).
    pub height: f64,
    /// Electron-current density along the reference direction (A/m²).
    pub current_density: f64,
}

impl Segment {
    /// Cross-sectional area `w·h` (m²).
    #[inline]
    pub fn area(&self) -> f64 {
        self.width * self.height
    }

    /// Signed `j·l` product (A/m).
    #[inline]
    pub fn jl(&self) -> f64 {
        self.current_density * self.length
    }

    /// The endpoint across the segment from `node`.
    #[inline]
    pub fn other(&self, node: NodeId) -> NodeId {
        if node == self.from_node {
            self.to_node
        } else {
            self.from_node
        }
    }
}

/// Undirected multigraph of nodes and wire segments.
///
/// Adjacency is stored compressed: the neighbours of node `v` are
/// `adjacency[offsets[v]..offsets[v + 1]]`, in ascending segment id.
#[derive(Debug, Clone, PartialEq)]
pub struct InterconnectGraph {
    nodes: Vec<NodeRecord>,
    segments: Vec<Segment>,
    offsets: Vec<usize>,
    adjacency: Vec<(SegmentId, NodeId)>,
}

impl InterconnectGraph {
    /// Builds the adjacency structure. Node and segment ids are reassigned
    /// to their positions; endpoints out of range are kept out of the
    /// adjacency and reported by [`validate_graph`].
    pub fn new(mut nodes: Vec<NodeRecord>, mut segments: Vec<Segment>) -> Self {
        for (i, n) in nodes.iter_mut().enumerate() {
            n.id = i;
        }
        for (i, s) in segments.iter_mut().enumerate() {
            s.id = i;
        }
        let n = nodes.len();
        let mut degree = vec![0usize; n + 1];
        for s in &segments {
            if s.from_node < n && s.to_node < n {
                degree[s.from_node] += 1;
                degree[s.to_node] += 1;
            }
        }
        let mut offsets = vec![0usize; n + 1];
        for v in 0..n {
            offsets[v + 1] = offsets[v] + degree[v];
        }
        let mut fill = offsets.clone();
        let mut adjacency = vec![(0, 0); offsets[n]];
        for s in &segments {
            if s.from_node < n && s.to_node < n {
                adjacency[fill[s.from_node]] = (s.id, s.to_node);
                fill[s.from_node] += 1;
                adjacency[fill[s.to_node]] = (s.id, s.from_node);
                fill[s.to_node] += 1;
            }
        }
        Self { nodes, segments, offsets, adjacency }
    }

    pub fn nodes(&self) -> &[NodeRecord] {
        &self.nodes
    }

    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn segment_count(&self) -> usize {
        self.segments.len()
    }

    /// `(segment, neighbour)` pairs incident to `node`, ascending by segment.
    #[inline]
    pub fn neighbors(&self, node: NodeId) -> &[(SegmentId, NodeId)] {
        &self.adjacency[self.offsets[node]..self.offsets[node + 1]]
    }

    pub fn degree(&self, node: NodeId) -> usize {
        self.offsets[node + 1] - self.offsets[node]
    }

    /// Total wire volume `Σ w·h·l` (m³).
    pub fn volume(&self) -> f64 {
        crate::sum::sum(self.segments.iter().map(|s| s.area() * s.length))
    }

    /// Returns a copy with every current density multiplied by `factor`.
    pub fn scaled_currents(&self, factor: f64) -> Self {
        let mut g = self.clone();
        for s in &mut g.segments {
            s.current_density *= factor;
        }
        g
    }

    /// Replaces current densities; `densities` must have one entry per segment.
    pub fn with_current_densities(&self, densities: &[f64]) -> Self {
        assert_eq!(densities.len(), self.segments.len());
        let mut g = self.clone();
        for (s, &j) in g.segments.iter_mut().zip(densities) {
            s.current_density = j;
        }
        g
    }

    /// Number of connected components (isolated nodes count as components).
    pub fn component_count(&self) -> usize {
        let mut seen = vec![false; self.nodes.len()];
        let mut stack = Vec::new();
        let mut count = 0;
        for start in 0..self.nodes.len() {
            if seen[start] {
                continue;
            }
            count += 1;
            seen[start] = true;
            stack.push(start);
            while let Some(v) = stack.pop() {
                for &(_, w) in self.neighbors(v) {
                    if !seen[w] {
                        seen[w] = true;
                        stack.push(w);
                    }
                }
            }
        }
        count
    }
}

/// A broken structural invariant.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub enum Violation {
    Node { id: NodeId, problem: String },
    Segment { id: SegmentId, problem: String },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::Node { id, problem } => write!(f, "node {id}: {problem}"),
            Violation::Segment { id, problem } => write!(f, "segment {id}: {problem}"),
        }
    }
}

/// Lists every structural problem in `graph`; empty means well formed.
pub fn validate_graph(graph: &InterconnectGraph) -> Vec<Violation> {
    let mut out = Vec::new();
    let n = graph.node_count();
    let mut names = std::collections::HashMap::with_capacity(n);
    for node in graph.nodes() {
        if let Some(prev) = names.insert(node.name.as_str(), node.id) {
            out.push(Violation::Node {
                id: node.id,
                problem: format!("name {:?} already used by node {prev}", node.name),
            });
        }
        if let Some((x, y)) = node.position {
            if !(x.is_finite() && y.is_finite()) {
                out.push(Violation::Node { id: node.id, problem: "position must be finite".into() });
            }
        }
    }
    for s in graph.segments() {
        let mut bad = |problem: &str| {
            out.push(Violation::Segment { id: s.id, problem: problem.to_string() })
        };
        if s.from_node >= n || s.to_node >= n {
            bad("endpoint out of range");
        } else if s.from_node == s.to_node {
            bad("self-loop: from_node equals to_node");
        }
        if !(s.length > 0.0) || !s.length.is_finite() {
            bad("length must be positive");
        }
        if !(s.width > 0.0) || !s.width.is_finite() {
            bad("width must be positive");
        }
        if !(s.height > 0.0) || !s.height.is_finite() {
            bad("height must be positive");
        }
        if !s.current_density.is_finite() {
            bad("current density must be finite");
        }
    }
    // Each in-range segment must appear in exactly two adjacency lists.
    let mut hits = vec![0u32; graph.segment_count()];
    for v in 0..n {
        for &(sid, _) in graph.neighbors(v) {
            hits[sid] += 1;
        }
    }
    for s in graph.segments() {
        if s.from_node < n && s.to_node < n && hits[s.id] != 2 {
            out.push(Violation::Segment {
                id: s.id,
                problem: format!("appears in {} adjacency lists", hits[s.id]),
            });
        }
    }
    out
}

/// Which closed form produced a [`StressResult`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Current,
    Voltage,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::Current => "current",
            Method::Voltage => "voltage",
        })
    }
}

/// Steady-state stress of one connected unit.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StressResult {
    pub method: Method,
    /// Hydrostatic stress at each node (Pa), tensile positive.
    pub node_stress: Vec<f64>,
    /// Blech sum from the reference node (A/m); current method only.
    pub blech_sum: Option<Vec<f64>>,
    pub reference_node: NodeId,
    /// `Σ w·h·l` (m³).
    pub area_sum: f64,
    /// Current method: `Σ w·h·(ĵl²/2 + B_prox·l)` (A·m).
    /// Voltage method: `Σ w·h·l·V_avg` (V·m³).
    pub q_sum: f64,
}

impl StressResult {
    pub fn max_stress(&self) -> f64 {
        self.node_stress.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn max_abs_stress(&self) -> f64 {
        self.node_stress.iter().fold(0.0, |m, s| m.max(s.abs()))
    }

    /// Larger of the two endpoint stresses of `segment`.
    pub fn peak_on(&self, segment: &Segment) -> f64 {
        self.node_stress[segment.from_node].max(self.node_stress[segment.to_node])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn seg(from: NodeId, to: NodeId, length: f64) -> Segment {
        Segment {
            id: 0,
            from_node: from,
            to_node: to,
            length,
            width: 1e-6,
            height: 1e-6,
            current_density: 1e10,
        }
    }

    fn nodes(n: usize) -> Vec<NodeRecord> {
        (0..n)
            .map(|i| NodeRecord { id: i, name: format!("v{i}"), layer: 1, position: None })
            .collect()
    }

    #[test]
    fn beta_for_copper() {
        let c = derive_constants(&MaterialParams::cu_dual_damascene()).unwrap();
        // Z*·e·ρ/Ω = 1.602176634e-19 · 2.25e-8 / 1.18e-29
        assert!((c.beta - 305.4998).abs() < 1e-3, "{}", c.beta);
        assert!((c.beta_over_rho - 1.357776e10).abs() / 1.357776e10 < 1e-6);
        assert_eq!(c.beta_over_rho * 2.25e-8, c.beta);
        assert_eq!(c.effective_crit, 41e6);
        assert!(c.kappa > 0.0);
    }

    #[test]
    fn derive_is_deterministic() {
        let p = MaterialParams { sigma_thermal: 3e6, ..Default::default() };
        let a = derive_constants(&p).unwrap();
        let b = derive_constants(&p).unwrap();
        assert_eq!(a.beta.to_bits(), b.beta.to_bits());
        assert_eq!(a.kappa.to_bits(), b.kappa.to_bits());
        assert_eq!(a.effective_crit, 41e6 - 3e6);
    }

    #[test]
    fn zero_resistivity_rejected() {
        let p = MaterialParams { rho: 0.0, ..Default::default() };
        let err = derive_constants(&p).unwrap_err();
        assert_eq!(err.to_string(), "resistivity must be positive (got 0)");
        let p = MaterialParams { temperature: f64::NAN, ..Default::default() };
        assert!(matches!(derive_constants(&p), Err(ParamError::NotFinite { field: "temperature", .. })));
        let p = MaterialParams { activation_energy: -0.1, ..Default::default() };
        assert!(derive_constants(&p).is_err());
    }

    #[test]
    fn tech_file_round_trip() {
        let tech = TechFile::builtin();
        assert_eq!(tech.params, MaterialParams::cu_dual_damascene());
        assert_eq!(tech.jl_crit, Some(2.7e5));
        let text = toml::to_string(&tech).unwrap();
        assert_eq!(TechFile::parse(&text).unwrap(), tech);
    }

    #[test]
    fn tech_file_defaults_thermal_offset() {
        let text = "rho = 2.25e-8\nbulk_modulus = 28e9\natomic_volume = 1.18e-29\n\
                    diffusion_prefactor = 1.3e-9\nactivation_energy = 0.8\n\
                    effective_charge = 1\ntemperature = 378\nsigma_crit = 41e6\n";
        let tech = TechFile::parse(text).unwrap();
        assert_eq!(tech.params.sigma_thermal, 0.0);
        assert_eq!(tech.jl_crit, None);
        assert!(TechFile::parse(&format!("{text}bogus = 1\n")).is_err());
        assert!(TechFile::parse(&text.replace("rho = 2.25e-8", "rho = -1")).is_err());
    }

    #[test]
    fn well_formed_tee_has_no_violations() {
        let g = InterconnectGraph::new(nodes(4), vec![seg(0, 1, 1e-5), seg(1, 2, 1e-5), seg(1, 3, 2e-5)]);
        assert!(validate_graph(&g).is_empty());
        assert_eq!(g.degree(1), 3);
        assert_eq!(g.neighbors(1), &[(0, 0), (1, 2), (2, 3)]);
    }

    #[test]
    fn zero_length_and_self_loop_reported() {
        let g = InterconnectGraph::new(nodes(3), vec![seg(0, 1, 1e-5), seg(1, 2, 0.0)]);
        let v = validate_graph(&g);
        assert_eq!(v, vec![Violation::Segment { id: 1, problem: "length must be positive".into() }]);

        let g = InterconnectGraph::new(nodes(2), vec![seg(0, 1, 1e-5), seg(1, 1, 1e-5)]);
        let v = validate_graph(&g);
        assert_eq!(v.len(), 1);
        assert!(v[0].to_string().starts_with("segment 1: self-loop"));
    }

    #[test]
    fn duplicate_names_and_bad_endpoints() {
        let mut ns = nodes(2);
        ns[1].name = "v0".into();
        let g = InterconnectGraph::new(ns, vec![seg(0, 5, 1e-5)]);
        let v = validate_graph(&g);
        assert!(v.iter().any(|v| matches!(v, Violation::Node { id: 1, .. })));
        assert!(v.iter().any(|v| matches!(v, Violation::Segment { id: 0, .. })));
    }
}
