// SPDX-License-Identifier: Apache-2.0

use emsteady::model::{derive_constants, DerivedConstants, InterconnectGraph, MaterialParams, Segment};
use emsteady::oracle::dense_solve;
use emsteady::stress::{
    edge_consistency, mass_conservation_residual, relative_deviation, stress_current, stress_current_based,
    stress_voltage_based,
};
use emsteady::synth::random_graph;
use emsteady::topology::{check_cycles, spanning_tree};
use proptest::prelude::*;

fn consts() -> DerivedConstants {
    derive_constants(&MaterialParams::cu_dual_damascene()).unwrap()
}

fn graph() -> impl Strategy<Value = (InterconnectGraph, Vec<f64>)> {
    (2usize..120, 0usize..80, any::<u64>()).prop_map(|(n, extra, seed)| random_graph(n, extra, consts().rho, seed))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn engines_agree_with_dense((g, v) in graph()) {
        let c = consts();
        let (cur, cc) = stress_current(&g, &c).unwrap();
        prop_assert!(cc.passes());
        let volt = stress_voltage_based(&g, &c, &v).unwrap();
        let dense = dense_solve(&g, &c).unwrap();
        prop_assert!(relative_deviation(&cur.node_stress, &volt.node_stress) < 1e-9);
        prop_assert!(relative_deviation(&cur.node_stress, &dense) < 1e-9);
    }

    #[test]
    fn mass_is_conserved((g, _) in graph()) {
        let c = consts();
        let (s, _) = stress_current(&g, &c).unwrap();
        prop_assert!(mass_conservation_residual(&g, &s, &c) < 1e-9);
        prop_assert!(edge_consistency(&g, &s, &c) < 1e-9);
    }

    #[test]
    fn root_does_not_matter((g, _) in graph(), pick in any::<prop::sample::Index>()) {
        let c = consts();
        let root = pick.index(g.node_count());
        let tree = spanning_tree(&g, root).unwrap();
        prop_assert!(check_cycles(&g, &tree).passes());
        let a = stress_current_based(&g, &tree, &c);
        let (b, _) = stress_current(&g, &c).unwrap();
        prop_assert!(relative_deviation(&a.node_stress, &b.node_stress) < 1e-9);
    }

    #[test]
    fn reversing_a_segment_changes_nothing((g, _) in graph(), pick in any::<prop::sample::Index>()) {
        let c = consts();
        let k = pick.index(g.segment_count());
        let mut segs: Vec<Segment> = g.segments().to_vec();
        let s = segs[k];
        segs[k] = Segment { from_node: s.to_node, to_node: s.from_node, current_density: -s.current_density, ..s };
        let flipped = InterconnectGraph::new(g.nodes().to_vec(), segs);
        let (a, _) = stress_current(&g, &c).unwrap();
        let (b, _) = stress_current(&flipped, &c).unwrap();
        prop_assert!(relative_deviation(&a.node_stress, &b.node_stress) < 1e-12);
    }
}

#[test]
fn broken_loop_is_flagged() {
    let c = consts();
    let (g, _) = random_graph(30, 10, c.rho, 3);
    let mut segs: Vec<Segment> = g.segments().to_vec();
    let tree = spanning_tree(&g, 0).unwrap();
    let k = *tree.removed_segments.first().expect("mesh has a loop");
    segs[k].current_density *= 1.5;
    let bad = InterconnectGraph::new(g.nodes().to_vec(), segs);
    let (_, cc) = stress_current(&bad, &c).unwrap();
    assert!(!cc.passes());
}
