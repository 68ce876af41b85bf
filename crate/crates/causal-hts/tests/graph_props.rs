//! Property tests for the graph layer: d-separation against path
//! enumeration, layering against longest-path relaxation, order and score
//! invariants over randomly shaped DAGs.

mod common;

use std::collections::BTreeSet;

use proptest::prelude::*;

use causal_hts::graph::{
    a_top, d_separated, edge_f1, erdos_renyi_dag, linearize, relabel, true_hierarchical_order,
    Dag, ParentSets,
};
use causal_hts::harness::quartiles;

/// A DAG with `d` vertices whose shape comes from `bits` (edges over the
/// canonical order) and whose labels come from shuffling with `seed`.
fn shaped_dag(d: usize, bits: u32, seed: u64) -> Dag {
    let pairs: Vec<(usize, usize)> =
        (0..d).flat_map(|i| ((i + 1)..d).map(move |j| (i, j))).collect();
    let edges: Vec<(usize, usize)> = pairs
        .iter()
        .enumerate()
        .filter(|&(k, _)| bits >> (k as u32 % 32) & 1 == 1)
        .map(|(_, &e)| e)
        .collect();
    relabel(&Dag::new(d, edges).expect("forward edges cannot cycle"), seed)
}

fn arb_dag() -> impl Strategy<Value = Dag> {
    (2usize..=6, any::<u32>(), any::<u64>()).prop_map(|(d, bits, seed)| shaped_dag(d, bits, seed))
}

proptest! {
    #[test]
    fn d_separation_matches_path_enumeration(g in arb_dag(), zbits in any::<u8>()) {
        let d = g.d();
        for i in 0..d {
            for j in (i + 1)..d {
                let pool: Vec<usize> = (0..d).filter(|&v| v != i && v != j).collect();
                let z: BTreeSet<usize> = pool
                    .iter()
                    .enumerate()
                    .filter(|&(k, _)| zbits >> k & 1 == 1)
                    .map(|(_, &v)| v)
                    .collect();
                let fast = d_separated(&g, i, j, &z).unwrap();
                let slow = common::brute_force_d_separated(&g, i, j, &z);
                prop_assert_eq!(fast, slow, "pair ({}, {}) given {:?} on {:?}", i, j, &z, g.edges());
            }
        }
    }

    #[test]
    fn true_layering_matches_longest_path_relaxation(g in arb_dag()) {
        let order = true_hierarchical_order(&g);
        prop_assert_eq!(order.layers(), &common::brute_force_layers(&g)[..]);
    }

    #[test]
    fn linearized_true_layerings_are_perfect_orders(g in arb_dag(), seed in any::<u64>()) {
        let order = linearize(&true_hierarchical_order(&g), seed);
        let mut sorted = order.perm().to_vec();
        sorted.sort_unstable();
        prop_assert_eq!(sorted, (0..g.d()).collect::<Vec<_>>(), "a permutation");
        prop_assert_eq!(a_top(&order, &g).unwrap(), 1.0);
    }

    #[test]
    fn relabeling_preserves_shape_statistics(g in arb_dag(), seed in any::<u64>()) {
        let h = relabel(&g, seed);
        prop_assert_eq!(h.d(), g.d());
        prop_assert_eq!(h.edge_count(), g.edge_count());
        let degree_multiset = |g: &Dag| {
            let mut degs: Vec<(usize, usize)> =
                (0..g.d()).map(|v| (g.parents_of(v).len(), g.children_of(v).len())).collect();
            degs.sort_unstable();
            degs
        };
        prop_assert_eq!(degree_multiset(&h), degree_multiset(&g));
        let layer_sizes = |layers: &[Vec<usize>]| layers.iter().map(Vec::len).collect::<Vec<_>>();
        prop_assert_eq!(
            layer_sizes(true_hierarchical_order(&h).layers()),
            layer_sizes(true_hierarchical_order(&g).layers())
        );
    }

    #[test]
    fn random_dags_are_deterministic_per_seed(
        d in 2usize..=12,
        edges in 0.0f64..12.0,
        seed in any::<u64>(),
    ) {
        let max_edges = (d * (d - 1) / 2) as f64;
        let expected = edges.min(max_edges);
        let g = erdos_renyi_dag(d, expected, seed).unwrap();
        let again = erdos_renyi_dag(d, expected, seed).unwrap();
        prop_assert_eq!(g.edges(), again.edges());
        prop_assert!(g.edge_count() <= max_edges as usize);
        // Constructing a Dag validates acyclicity; a topological order must
        // therefore exist and place every parent first.
        let order = g.topological_order();
        let mut pos = vec![0usize; d];
        for (p, &v) in order.iter().enumerate() {
            pos[v] = p;
        }
        for &(p, c) in g.edges() {
            prop_assert!(pos[p] < pos[c]);
        }
    }

    #[test]
    fn dropping_true_edges_trades_recall_not_precision(g in arb_dag(), keep in any::<u32>()) {
        let truth: Vec<(usize, usize)> = g.edges().iter().copied().collect();
        let mut predicted = ParentSets::new(g.d());
        let mut kept = 0usize;
        for (k, &(p, c)) in truth.iter().enumerate() {
            if keep >> (k as u32 % 32) & 1 == 1 {
                predicted.insert(p, c).unwrap();
                kept += 1;
            }
        }
        let score = edge_f1(&predicted, &g).unwrap();
        if truth.is_empty() {
            // Matching empty edge sets is a perfect score.
            prop_assert_eq!(score.f1, 1.0);
        } else if kept == 0 {
            prop_assert_eq!(score.f1, 0.0);
        } else {
            prop_assert_eq!(score.precision, 1.0);
            let recall = kept as f64 / truth.len() as f64;
            prop_assert!((score.recall - recall).abs() < 1e-12);
        }
    }

    #[test]
    fn quartiles_are_ordered_and_bounded(values in prop::collection::vec(-1e6f64..1e6, 1..40)) {
        let q = quartiles(values.iter().copied()).unwrap();
        let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        prop_assert!(lo <= q.q1 && q.q1 <= q.median && q.median <= q.q3 && q.q3 <= hi);
    }
}
