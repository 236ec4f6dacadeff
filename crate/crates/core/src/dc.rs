// SPDX-License-Identifier: Apache-2.0

//! DC operating point of a resistive network with ideal sources.
//!
//! Voltage sources and zero-ohm resistors are eliminated before assembly:
//! every such element ties two node voltages together by a fixed offset, so
//! nodes collapse into groups whose voltages differ by known constants. The
//! group containing ground is fully determined; each remaining group is one
//! unknown. The reduced nodal matrix is then symmetric positive definite,
//! which lets the same code path use a direct Cholesky factorization or
//! conjugate gradients.

use std::collections::VecDeque;

use serde::Serialize;
use thiserror::Error;

use crate::netlist::spice::{Netlist, GROUND};
use crate::sparse::{pcg_jacobi, relative_residual, CsrMatrix, EnvelopeCholesky, SolveError};

/// Required `‖G·V − J‖/‖J‖` of every accepted solution.
pub const RESIDUAL_TOLERANCE: f64 = 1e-8;
/// KCL gate relative to the largest branch or source current.
pub const KCL_GATE: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DcError {
    #[error("floating subnetwork: node {node} has no DC path to ground or a voltage source")]
    Floating { node: String },
    #[error("resistor {name}: resistance must be non-negative and finite")]
    BadResistance { name: String },
    #[error("voltage source {name} conflicts with a loop of fixed voltages")]
    ConflictingSources { name: String },
    #[error(transparent)]
    Solver(#[from] SolveError),
    #[error("solution rejected: relative residual {0:.3e} exceeds {RESIDUAL_TOLERANCE:e}")]
    Residual(f64),
    #[error("voltage import: no voltage for node {node}")]
    MissingVoltage { node: String },
    #[error("voltage import: unknown node {node}")]
    UnknownNode { node: String },
    #[error("voltage import, record {record}: {message}")]
    Csv { record: usize, message: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SolverKind {
    Direct,
    ConjugateGradient,
    Imported,
    Trivial,
}

#[derive(Debug, Clone)]
pub struct DcOptions {
    /// Unknown count up to which the direct factorization is used.
    pub direct_limit: usize,
    /// Stopping tolerance handed to conjugate gradients, relative to the
    /// initial residual.
    pub cg_tolerance: f64,
    pub max_iterations: usize,
}

impl Default for DcOptions {
    fn default() -> Self {
        Self { direct_limit: 20_000, cg_tolerance: 1e-12, max_iterations: 100_000 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DcSolution {
    /// Indexed by netlist node; ground is 0 V.
    pub node_voltage: Vec<f64>,
    /// Conventional current from `a` to `b` of each resistor (A). Zero-ohm
    /// resistors report 0; their current is not determined by Ohm's law.
    pub branch_current: Vec<f64>,
    /// `‖G·V − J‖/‖J‖` of the reduced system; for imported voltages, the
    /// KCL imbalance relative to the largest current.
    pub residual_norm: f64,
    pub solver: SolverKind,
    pub iterations: usize,
}

/// Union-find with voltage offsets: `V(n) = V(root(n)) + offset(n)`.
struct OffsetForest {
    parent: Vec<usize>,
    offset: Vec<f64>,
}

impl OffsetForest {
    fn new(n: usize) -> Self {
        Self { parent: (0..n).collect(), offset: vec![0.0; n] }
    }

    fn find(&mut self, n: usize) -> (usize, f64) {
        let mut path = Vec::new();
        let mut v = n;
        while self.parent[v] != v {
            path.push(v);
            v = self.parent[v];
        }
        let root = v;
        // Compress from the top so each offset is relative to root.
        for &u in path.iter().rev() {
            let p = self.parent[u];
            if p != root {
                self.offset[u] += self.offset[p];
            }
            self.parent[u] = root;
        }
        (root, self.offset[n])
    }

    /// Imposes `V(a) − V(b) = e`; false if that contradicts earlier ties.
    fn tie(&mut self, a: usize, b: usize, e: f64) -> bool {
        let (ra, oa) = self.find(a);
        let (rb, ob) = self.find(b);
        if ra == rb {
            return (oa - ob - e).abs() <= 1e-12 * e.abs().max(1.0);
        }
        self.parent[rb] = ra;
        self.offset[rb] = oa - ob - e;
        true
    }
}

struct Reduced {
    root: Vec<usize>,
    offset: Vec<f64>,
    /// Unknown index of each group root, `None` for the grounded group.
    unknown: Vec<Option<usize>>,
    /// Voltage of the grounded group's root.
    fixed_root_voltage: f64,
    n_unknowns: usize,
}

impl Reduced {
    fn build(netlist: &Netlist) -> Result<Self, DcError> {
        let n = netlist.node_count();
        let mut forest = OffsetForest::new(n);
        for v in &netlist.voltage_sources {
            if !forest.tie(v.a, v.b, v.value) {
                return Err(DcError::ConflictingSources { name: v.name.clone() });
            }
        }
        for r in &netlist.resistors {
            if !(r.value >= 0.0 && r.value.is_finite()) {
                return Err(DcError::BadResistance { name: r.name.clone() });
            }
            if r.value == 0.0 && !forest.tie(r.a, r.b, 0.0) {
                return Err(DcError::ConflictingSources { name: r.name.clone() });
            }
        }
        let mut root = vec![0; n];
        let mut offset = vec![0.0; n];
        for v in 0..n {
            let (r, o) = forest.find(v);
            root[v] = r;
            offset[v] = o;
        }
        let ground_root = root[GROUND];
        let fixed_root_voltage = -offset[GROUND];
        let mut unknown = vec![None; n];
        let mut n_unknowns = 0;
        for v in 0..n {
            if root[v] == v && v != ground_root {
                unknown[v] = Some(n_unknowns);
                n_unknowns += 1;
            }
        }
        Ok(Self { root, offset, unknown, fixed_root_voltage, n_unknowns })
    }

    fn unknown_of(&self, node: usize) -> Option<usize> {
        self.unknown[self.root[node]]
    }

    /// Fixed voltage of a node in the grounded group.
    fn fixed_voltage(&self, node: usize) -> f64 {
        self.fixed_root_voltage + self.offset[node]
    }
}

/// Solves with default options.
pub fn solve_dc(netlist: &Netlist) -> Result<DcSolution, DcError> {
    solve_dc_with(netlist, &DcOptions::default())
}

pub fn solve_dc_with(netlist: &Netlist, options: &DcOptions) -> Result<DcSolution, DcError> {
    let red = Reduced::build(netlist)?;
    let m = red.n_unknowns;

    // Group-level connectivity, used both to detect floating islands and to
    // seed the solve with each island's nearest fixed voltage.
    let mut adj: Vec<Vec<(usize, usize)>> = vec![Vec::new(); m];
    let mut seed: Vec<Option<f64>> = vec![None; m];
    let mut triplets = Vec::with_capacity(4 * netlist.resistors.len());
    let mut rhs = vec![0.0; m];
    for (ri, r) in netlist.resistors.iter().enumerate() {
        if r.value == 0.0 {
            continue;
        }
        let g = 1.0 / r.value;
        let (ua, ub) = (red.unknown_of(r.a), red.unknown_of(r.b));
        if red.root[r.a] == red.root[r.b] {
            continue;
        }
        let (oa, ob) = (red.offset[r.a], red.offset[r.b]);
        match (ua, ub) {
            (Some(ua), Some(ub)) => {
                triplets.extend([(ua, ua, g), (ub, ub, g), (ua, ub, -g), (ub, ua, -g)]);
                rhs[ua] -= g * (oa - ob);
                rhs[ub] += g * (oa - ob);
                adj[ua].push((ub, ri));
                adj[ub].push((ua, ri));
            }
            (Some(ua), None) => {
                triplets.push((ua, ua, g));
                rhs[ua] += g * (red.fixed_voltage(r.b) - oa);
                seed[ua].get_or_insert(red.fixed_voltage(r.b) - oa);
            }
            (None, Some(ub)) => {
                triplets.push((ub, ub, g));
                rhs[ub] += g * (red.fixed_voltage(r.a) - ob);
                seed[ub].get_or_insert(red.fixed_voltage(r.a) - ob);
            }
            (None, None) => {}
        }
    }
    for s in &netlist.current_sources {
        if let Some(ua) = red.unknown_of(s.a) {
            rhs[ua] -= s.value;
        }
        if let Some(ub) = red.unknown_of(s.b) {
            rhs[ub] += s.value;
        }
    }

    // Flood fixed voltages inward; anything unreached floats.
    let mut guess = vec![0.0; m];
    let mut reached = vec![false; m];
    let mut queue = VecDeque::new();
    for u in 0..m {
        if let Some(v) = seed[u] {
            guess[u] = v;
            reached[u] = true;
            queue.push_back(u);
        }
    }
    while let Some(u) = queue.pop_front() {
        for &(w, ri) in &adj[u] {
            if !reached[w] {
                let r = &netlist.resistors[ri];
                // Carry the same root voltage across; offsets shift per node.
                let (from, to) = if red.unknown_of(r.a) == Some(u) { (r.a, r.b) } else { (r.b, r.a) };
                guess[w] = guess[u] + red.offset[from] - red.offset[to];
                reached[w] = true;
                queue.push_back(w);
            }
        }
    }
    if let Some(u) = reached.iter().position(|&r| !r) {
        let node = (0..netlist.node_count())
            .find(|&v| red.root[v] == v && red.unknown[v] == Some(u))
            .expect("every unknown has a root node");
        return Err(DcError::Floating { node: netlist.node_name(node).to_string() });
    }

    let (x, solver, iterations, residual) = if m == 0 {
        (Vec::new(), SolverKind::Trivial, 0, 0.0)
    } else {
        let g = CsrMatrix::from_triplets(m, triplets);
        // Solve for the correction to the flooded guess; its right-hand side
        // carries only the genuine load currents.
        let mut r0 = vec![0.0; m];
        g.mul_vec(&guess, &mut r0);
        for (r, b) in r0.iter_mut().zip(&rhs) {
            *r = b - *r;
        }
        let (delta, kind, iters) = if m <= options.direct_limit {
            (EnvelopeCholesky::factor(&g)?.solve(&r0), SolverKind::Direct, 0)
        } else {
            let out = pcg_jacobi(&g, &r0, options.cg_tolerance, options.max_iterations)?;
            (out.x, SolverKind::ConjugateGradient, out.iterations)
        };
        let x: Vec<f64> = guess.iter().zip(&delta).map(|(g, d)| g + d).collect();
        let res = relative_residual(&g, &x, &rhs);
        (x, kind, iters, res)
    };
    if !(residual <= RESIDUAL_TOLERANCE) {
        return Err(DcError::Residual(residual));
    }

    let node_voltage: Vec<f64> = (0..netlist.node_count())
        .map(|v| match red.unknown_of(v) {
            Some(u) => x[u] + red.offset[v],
            None => red.fixed_voltage(v),
        })
        .collect();
    let branch_current = ohmic_currents(netlist, &node_voltage);
    Ok(DcSolution { node_voltage, branch_current, residual_norm: residual, solver, iterations })
}

fn ohmic_currents(netlist: &Netlist, v: &[f64]) -> Vec<f64> {
    netlist
        .resistors
        .iter()
        .map(|r| if r.value > 0.0 { (v[r.a] - v[r.b]) / r.value } else { 0.0 })
        .collect()
}

/// Largest KCL imbalance (A) over nodes whose current balance is fully
/// determined by the solution: ground and nodes touching a voltage source or
/// a zero-ohm resistor are skipped.
pub fn verify_solution(netlist: &Netlist, dc: &DcSolution) -> f64 {
    let n = netlist.node_count();
    let mut skip = vec![false; n];
    skip[GROUND] = true;
    for v in &netlist.voltage_sources {
        skip[v.a] = true;
        skip[v.b] = true;
    }
    let mut leaving = vec![0.0; n];
    for (r, &i) in netlist.resistors.iter().zip(&dc.branch_current) {
        if r.value == 0.0 {
            skip[r.a] = true;
            skip[r.b] = true;
        }
        leaving[r.a] += i;
        leaving[r.b] -= i;
    }
    for s in &netlist.current_sources {
        leaving[s.a] += s.value;
        leaving[s.b] -= s.value;
    }
    (0..n).filter(|&v| !skip[v]).fold(0.0, |m, v| m.max(leaving[v].abs()))
}

/// Acceptance threshold for [`verify_solution`].
pub fn kcl_gate(netlist: &Netlist, dc: &DcSolution) -> f64 {
    let max_branch = dc.branch_current.iter().fold(0.0f64, |m, i| m.max(i.abs()));
    let max_source = netlist.current_sources.iter().fold(0.0f64, |m, s| m.max(s.value.abs()));
    KCL_GATE * max_branch.max(max_source)
}

/// Builds a solution from externally computed node voltages given as
/// `name,volts` records. A header line is allowed. Ground defaults to 0 V.
pub fn import_voltages(netlist: &Netlist, csv_text: &str) -> Result<DcSolution, DcError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(csv_text.as_bytes());
    let mut voltage = vec![None; netlist.node_count()];
    voltage[GROUND] = Some(0.0);
    for (i, rec) in reader.records().enumerate() {
        let rec = rec.map_err(|e| DcError::Csv { record: i + 1, message: e.to_string() })?;
        if rec.len() != 2 {
            return Err(DcError::Csv { record: i + 1, message: format!("expected 2 fields, got {}", rec.len()) });
        }
        let value: f64 = match rec[1].parse() {
            Ok(v) => v,
            Err(_) if i == 0 => continue,
            Err(_) => return Err(DcError::Csv { record: i + 1, message: format!("invalid voltage {:?}", &rec[1]) }),
        };
        let node = netlist.node_id(&rec[0]).ok_or_else(|| DcError::UnknownNode { node: rec[0].to_string() })?;
        voltage[node] = Some(value);
    }
    let node_voltage = voltage
        .iter()
        .enumerate()
        .map(|(i, v)| v.ok_or_else(|| DcError::MissingVoltage { node: netlist.node_name(i).to_string() }))
        .collect::<Result<Vec<_>, _>>()?;
    let branch_current = ohmic_currents(netlist, &node_voltage);
    let mut dc = DcSolution {
        node_voltage,
        branch_current,
        residual_norm: 0.0,
        solver: SolverKind::Imported,
        iterations: 0,
    };
    let gate = kcl_gate(netlist, &dc);
    let imbalance = verify_solution(netlist, &dc);
    dc.residual_norm = if gate > 0.0 { imbalance * KCL_GATE / gate } else { imbalance };
    Ok(dc)
}
