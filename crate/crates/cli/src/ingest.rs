// SPDX-License-Identifier: Apache-2.0

//! Reading designs from disk into analysis units.

use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{bail, Context, Result};
use clap::Args;
use emsteady::dc::{import_voltages, kcl_gate, solve_dc, verify_solution};
use emsteady::model::{validate_graph, DerivedConstants, TechFile};
use emsteady::netlist::units::ElementAccounting;
use emsteady::netlist::{decode_geometry, design_from_netlist, parse_emg, parse_spice, split_units, AnalysisUnit, NamingRule};

/// Classical Blech threshold used when neither the flag nor the technology
/// file gives one (A/m).
pub const DEFAULT_JL_CRIT: f64 = 2.7e5;

#[derive(Debug, Clone, Args)]
pub struct InputArgs {
    /// Netlist (`.sp`, `.spice`, `.cir`, ...) or native `.emg` file.
    pub input: PathBuf,

    /// Technology file (TOML); the built-in copper parameters otherwise.
    #[arg(long, value_name = "PATH")]
    pub tech: Option<PathBuf>,

    /// Node-label regex with named groups `layer`, `x` and `y`.
    #[arg(long, value_name = "REGEX")]
    pub label_pattern: Option<String>,

    /// Metres per label coordinate unit.
    #[arg(long, default_value_t = 1e-6, value_name = "M")]
    pub coord_unit: f64,

    /// Width-to-thickness ratio used to split back-calculated areas.
    #[arg(long, default_value_t = 1.0, value_name = "RATIO")]
    pub aspect: f64,

    /// Keep going when node labels do not match the naming rule; their
    /// resistors are then left out of the analysis.
    #[arg(long)]
    pub allow_unmatched: bool,

    /// Node voltages (`name,volts` CSV) to use instead of the internal DC
    /// solve.
    #[arg(long, value_name = "PATH")]
    pub voltages: Option<PathBuf>,
}

pub struct Loaded {
    pub tech: TechFile,
    pub constants: DerivedConstants,
    pub units: Vec<AnalysisUnit>,
    pub isolated_nodes: usize,
    pub accounting: Option<ElementAccounting>,
    pub dc_ms: Option<f64>,
    /// Problems that make the input suspect without stopping the analysis.
    pub findings: Vec<String>,
}

impl Loaded {
    pub fn has_voltages(&self) -> bool {
        self.units.iter().all(|u| u.node_voltage.is_some())
    }
}

pub fn load_tech(path: Option<&Path>) -> Result<TechFile> {
    Ok(match path {
        Some(p) => TechFile::load(p)?,
        None => TechFile::builtin(),
    })
}

pub fn is_emg(path: &Path) -> bool {
    path.extension().is_some_and(|e| e.eq_ignore_ascii_case("emg"))
}

pub fn load(args: &InputArgs) -> Result<Loaded> {
    let tech = load_tech(args.tech.as_deref())?;
    let constants = emsteady::model::derive_constants(&tech.params)?;
    let text = std::fs::read_to_string(&args.input).with_context(|| format!("reading {}", args.input.display()))?;
    let shown = args.input.display();
    let mut findings = Vec::new();

    let (design, accounting, dc_ms) = if is_emg(&args.input) {
        if args.voltages.is_some() {
            bail!("--voltages applies to netlists; put node voltages in the NODE records of {shown}");
        }
        (parse_emg(&text).with_context(|| format!("{shown}"))?, None, None)
    } else {
        let netlist = parse_spice(&text).with_context(|| format!("{shown}"))?;
        let mut rule = match &args.label_pattern {
            Some(p) => NamingRule::with_pattern(p)?,
            None => NamingRule::default(),
        };
        rule.coordinate_unit = args.coord_unit;
        rule.aspect_ratio = args.aspect;
        rule.allow_unmatched = args.allow_unmatched;
        let geometry = decode_geometry(&netlist, &rule).with_context(|| format!("{shown}"))?;
        let t = Instant::now();
        let dc = match &args.voltages {
            Some(p) => {
                let csv = std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
                let dc = import_voltages(&netlist, &csv).with_context(|| format!("{}", p.display()))?;
                let (imbalance, gate) = (verify_solution(&netlist, &dc), kcl_gate(&netlist, &dc));
                if imbalance > gate {
                    findings.push(format!(
                        "imported voltages violate KCL: imbalance {imbalance:.3e} A exceeds {gate:.3e} A"
                    ));
                }
                dc
            }
            None => solve_dc(&netlist).with_context(|| format!("DC solve of {shown}"))?,
        };
        let dc_ms = t.elapsed().as_secs_f64() * 1e3;
        let (design, accounting) =
            design_from_netlist(&netlist, &geometry, &dc, tech.params.rho, args.aspect).with_context(|| format!("{shown}"))?;
        (design, Some(accounting), Some(dc_ms))
    };

    let (units, isolated_nodes) = split_units(&design);
    for u in &units {
        for v in validate_graph(&u.graph) {
            findings.push(format!("unit {}: {v}", u.id));
        }
    }
    Ok(Loaded { tech, constants, units, isolated_nodes, accounting, dc_ms, findings })
}
