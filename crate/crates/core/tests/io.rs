// SPDX-License-Identifier: Apache-2.0

use emsteady::dc::solve_dc;
use emsteady::model::{derive_constants, MaterialParams};
use emsteady::netlist::{decode_geometry, design_from_netlist, parse_emg, parse_spice, split_units, write_emg, NamingRule};
use emsteady::pipeline::{build_report, run_engines, MethodChoice, ReportOptions};
use emsteady::screening::TiePolicy;
use emsteady::stress::relative_deviation;

const VIA_NODE: &str = include_str!("../../../data/via_node.emg");
const SMALL_GRID: &str = include_str!("../../../data/small_grid.sp");

#[test]
fn emg_roundtrip() {
    let d = parse_emg(VIA_NODE).unwrap();
    let again = parse_emg(&write_emg(&d)).unwrap();
    assert_eq!(d, again);
}

#[test]
fn emg_voltages_match_currents() {
    let c = derive_constants(&MaterialParams::cu_dual_damascene()).unwrap();
    let d = parse_emg(VIA_NODE).unwrap();
    let (units, _) = split_units(&d);
    let (out, _) = run_engines(&units, &c, MethodChoice::Both).unwrap();
    let o = &out[0];
    let dev = relative_deviation(&o.current.as_ref().unwrap().node_stress, &o.voltage.as_ref().unwrap().node_stress);
    assert!(dev < 1e-9, "{dev}");
}

#[test]
fn spice_grid_end_to_end() {
    let params = MaterialParams::cu_dual_damascene();
    let c = derive_constants(&params).unwrap();
    let net = parse_spice(SMALL_GRID).unwrap();
    let geometry = decode_geometry(&net, &NamingRule::default()).unwrap();
    let dc = solve_dc(&net).unwrap();
    let (design, accounting) = design_from_netlist(&net, &geometry, &dc, params.rho, 1.0).unwrap();
    assert_eq!(accounting.segments, 14);
    let (units, _) = split_units(&design);
    assert_eq!(units.len(), 2);
    let (outcomes, runtimes) = run_engines(&units, &c, MethodChoice::Both).unwrap();
    let options = ReportOptions {
        method: MethodChoice::Both,
        jl_crit: 2.7e5,
        tie_policy: TiePolicy::Immortal,
        include_nodes: true,
        input: "small_grid.sp".into(),
        timestamp: 0,
    };
    let report = build_report(&units, &outcomes, &c, &options, runtimes).unwrap();
    let t = report.totals;
    assert_eq!(t.tp + t.tn + t.fp + t.fn_, 14);
    for u in &report.units {
        assert!(u.method_deviation.unwrap() < 1e-9);
    }
    let json: serde_json::Value = serde_json::from_str(&report.to_json()).unwrap();
    assert!(json["units"].is_array());
}
