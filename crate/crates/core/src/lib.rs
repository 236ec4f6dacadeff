// SPDX-License-Identifier: Apache-2.0

//! Exact steady-state electromigration stress for interconnect trees and
//! meshes, in time linear in the number of segments.
//!
//! The usual flow is netlist → DC operating point → per-layer units →
//! node stresses → immortality screening:
//!
//! ```
//! use emsteady::prelude::*;
//!
//! let text = "V1 n1_0_0 0 1.8\nR1 n1_0_0 n1_100_0 0.05\nI1 n1_100_0 0 10m\n";
//! let netlist = parse_spice(text).unwrap();
//! let geometry = decode_geometry(&netlist, &NamingRule::default()).unwrap();
//! let dc = solve_dc(&netlist).unwrap();
//! let params = MaterialParams::cu_dual_damascene();
//! let c = derive_constants(&params).unwrap();
//! let (design, _) = design_from_netlist(&netlist, &geometry, &dc, params.rho, 1.0).unwrap();
//! let (units, _) = split_units(&design);
//! let (stress, cycles) = stress_current(&units[0].graph, &c).unwrap();
//! assert!(cycles.passes());
//! assert!(stress.max_stress() > 0.0);
//! ```

pub mod bench;
pub mod dc;
pub mod model;
pub mod netlist;
pub mod oracle;
pub mod pipeline;
pub mod screening;
pub mod sparse;
pub mod stress;
pub mod sum;
pub mod synth;
pub mod topology;

/// The types and functions most programs need.
pub mod prelude {
    pub use crate::dc::{solve_dc, verify_solution, DcSolution};
    pub use crate::model::{
        derive_constants, validate_graph, DerivedConstants, InterconnectGraph, MaterialParams, NodeRecord, Segment,
        StressResult, TechFile,
    };
    pub use crate::netlist::{
        decode_geometry, design_from_netlist, parse_emg, parse_spice, split_units, AnalysisUnit, NamingRule,
    };
    pub use crate::oracle::{dense_solve, transient_steady_state, TransientOptions};
    pub use crate::screening::{blech_verdicts, compare, exact_verdicts, Cell, TiePolicy};
    pub use crate::stress::{
        mass_conservation_residual, segment_profile, stress_current, stress_current_based, stress_voltage_based,
    };
    pub use crate::topology::{cycle_residuals, spanning_tree};
}

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/stress-model.md")]
    mod stress_model {}
    #[doc = include_str!("../../../book/src/current-engine.md")]
    mod current_engine {}
    #[doc = include_str!("../../../book/src/voltage-engine.md")]
    mod voltage_engine {}
    #[doc = include_str!("../../../book/src/meshes.md")]
    mod meshes {}
    #[doc = include_str!("../../../book/src/screening.md")]
    mod screening {}
    #[doc = include_str!("../../../book/src/oracles.md")]
    mod oracles {}
    #[doc = include_str!("../../../book/src/inputs.md")]
    mod inputs {}
}
