// SPDX-License-Identifier: Apache-2.0

//! Netlist ingestion: SPICE subset, native geometric format, geometry
//! recovery and unit extraction.

pub mod emg;
pub mod geometry;
pub mod spice;
pub mod units;

pub use emg::{parse_emg, write_emg, EmgError};
pub use geometry::{back_calculate_area, decode_geometry, CrossSection, LayerGeometry, NamingRule, ResistorClass};
pub use spice::{parse_spice, Netlist, ParseError};
pub use units::{design_from_netlist, split_units, AnalysisUnit, Design, ElementAccounting};
