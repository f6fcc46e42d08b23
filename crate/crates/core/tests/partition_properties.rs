use std::collections::{BTreeSet, HashSet};

use optigraph::library::{random_block_qp, BlockQpConfig};
use optigraph::model::{flatten, Model, VarRef};
use optigraph::partition::{
    aggregate, apply_partition, balance_bound, fm_refine, initial_partition, make_partition, metrics_of,
    partition_heuristic,
};
use optigraph::qp::{solve_monolithic, SolverOptions, Status};
use optigraph::topology::{to_hypergraph, Hypergraph};
use proptest::prelude::*;

fn hypergraph() -> impl Strategy<Value = Hypergraph> {
    (4usize..40).prop_flat_map(|n| {
        let pins = proptest::collection::btree_set(0..n, 2..=4).prop_map(|s| s.into_iter().collect::<Vec<_>>());
        (
            Just(n),
            proptest::collection::vec(pins, 1..60),
            proptest::collection::vec(1u64..3, n),
            proptest::collection::vec(1u64..4, 60),
        )
            .prop_map(|(n, edges, vw, ew)| {
                let m = edges.len();
                Hypergraph::new(n, edges, vw, ew[..m].to_vec()).unwrap()
            })
    })
}

/// Cut weight and connectivity recounted from the pin lists.
fn brute_force(h: &Hypergraph, labels: &[usize]) -> (f64, f64) {
    let (mut cut, mut con) = (0.0, 0.0);
    for (pins, &w) in h.hyperedges.iter().zip(&h.edge_weights) {
        let parts: BTreeSet<usize> = pins.iter().map(|&v| labels[v]).collect();
        if parts.len() > 1 {
            cut += w as f64;
        }
        con += w as f64 * (parts.len() as f64 - 1.0);
    }
    (cut, con)
}

/// Exhaustive search for an assignment of the weights to `k` parts of at most `cap`.
fn packable(weights: &[u64], k: usize, cap: u64) -> bool {
    fn place(w: &[u64], sizes: &mut Vec<u64>, cap: u64, dead: &mut HashSet<(usize, Vec<u64>)>) -> bool {
        let Some((&first, rest)) = w.split_first() else { return true };
        let mut key = sizes.clone();
        key.sort_unstable();
        if dead.contains(&(w.len(), key.clone())) {
            return false;
        }
        for p in 0..sizes.len() {
            if sizes[..p].contains(&sizes[p]) || sizes[p] + first > cap {
                continue;
            }
            sizes[p] += first;
            if place(rest, sizes, cap, dead) {
                return true;
            }
            sizes[p] -= first;
        }
        dead.insert((w.len(), key));
        false
    }
    let mut w = weights.to_vec();
    w.sort_unstable_by(|a, b| b.cmp(a));
    weights.len() >= k && place(&w, &mut vec![0; k], cap, &mut HashSet::new())
}

fn eps_strategy() -> impl Strategy<Value = f64> {
    prop_oneof![Just(0.01), Just(0.1), Just(0.5)]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(150))]

    #[test]
    fn heuristic_partitions_respect_the_balance_bound(h in hypergraph(), k in 2usize..=8, eps in eps_strategy(), seed in 0u64..4) {
        let bound = balance_bound(h.total_vertex_weight(), k, eps);
        match partition_heuristic(&h, k, eps, seed) {
            Ok(labels) => {
                let mut sizes = vec![0u64; k];
                for (v, &l) in labels.iter().enumerate() {
                    prop_assert!(l < k);
                    sizes[l] += h.vertex_weights[v];
                }
                prop_assert!(sizes.iter().all(|&s| s <= bound), "sizes {:?} bound {}", sizes, bound);
                let met = metrics_of(&h, &labels, k).unwrap();
                prop_assert_eq!(&met.part_sizes, &sizes);
                let (cut, con) = brute_force(&h, &labels);
                prop_assert_eq!(met.edge_cut, cut);
                prop_assert_eq!(met.connectivity, con);
            }
            Err(e) => prop_assert!(!packable(&h.vertex_weights, k, bound), "{}", e),
        }
    }

    #[test]
    fn partitioning_is_deterministic(h in hypergraph(), k in 2usize..=6, seed in any::<u64>()) {
        let a = partition_heuristic(&h, k, 0.5, seed);
        let b = partition_heuristic(&h, k, 0.5, seed);
        prop_assert_eq!(a.ok(), b.ok());
    }

    #[test]
    fn refinement_never_increases_the_cut(h in hypergraph(), k in 2usize..=6, seed in 0u64..8) {
        if let Ok(mut labels) = initial_partition(&h, k, 0.5, seed) {
            let before = metrics_of(&h, &labels, k).unwrap();
            fm_refine(&h, &mut labels, k, 0.5).unwrap();
            let after = metrics_of(&h, &labels, k).unwrap();
            prop_assert!(after.edge_cut <= before.edge_cut);
            let bound = balance_bound(h.total_vertex_weight(), k, 0.5);
            prop_assert!(after.part_sizes.iter().all(|&s| s <= bound));
        }
    }

    #[test]
    fn metrics_match_brute_force_on_arbitrary_labels(h in hypergraph(), k in 1usize..6, salt in any::<u64>()) {
        let labels: Vec<usize> = (0..h.vertex_count).map(|v| ((v as u64).wrapping_mul(salt | 1) >> 7) as usize % k).collect();
        let met = metrics_of(&h, &labels, k).unwrap();
        let (cut, con) = brute_force(&h, &labels);
        prop_assert_eq!(met.edge_cut, cut);
        prop_assert_eq!(met.connectivity, con);
    }
}

fn max_violation(m: &Model<f64>, g: optigraph::model::GraphId, x: &std::collections::BTreeMap<VarRef, f64>) -> f64 {
    let qp = flatten(m, g).unwrap();
    let v: Vec<f64> = qp.var_map.iter().map(|r| x[r]).collect();
    let mut worst = 0.0f64;
    for (j, &xj) in v.iter().enumerate() {
        worst = worst.max(qp.lower[j] - xj).max(xj - qp.upper[j]);
    }
    for (row, b) in qp.a_eq.iter().zip(&qp.b_eq) {
        worst = worst.max((row.dot(&v) - b).abs());
    }
    for ((row, lo), hi) in qp.a_in.iter().zip(&qp.in_lower).zip(&qp.in_upper) {
        let a = row.dot(&v);
        worst = worst.max(lo - a).max(a - hi);
    }
    worst
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn partition_and_aggregate_preserve_the_optimum(seed in 0u64..10_000, k in 2usize..=4) {
        let qp = random_block_qp::<f64>(seed, BlockQpConfig::default()).unwrap();
        let opts = SolverOptions { tol: 1e-9, ..SolverOptions::default() };
        let direct = solve_monolithic(&qp.model, qp.graph, &opts).unwrap();
        prop_assert_eq!(direct.status, Status::Optimal);

        let mut m = qp.model.clone();
        let g = qp.graph;
        let (h, refs) = to_hypergraph(&m, g);
        let k = k.min(h.vertex_count);
        let labels: Vec<usize> = (0..h.vertex_count).map(|v| v % k).collect();
        let p = make_partition(&m, g, &labels, &refs).unwrap();
        apply_partition(&mut m, &p).unwrap();
        let parted = solve_monolithic(&m, g, &opts).unwrap();
        prop_assert!((parted.objective - direct.objective).abs() <= 1e-6 * direct.objective.abs().max(1.0));

        let agg = aggregate(&m, g, 0).unwrap();
        prop_assert_eq!(agg.model.all_nodes(agg.graph).len(), k);
        let sol = solve_monolithic(&agg.model, agg.graph, &opts).unwrap();
        prop_assert_eq!(sol.status, Status::Optimal);
        prop_assert!((sol.objective - direct.objective).abs() <= 1e-6 * direct.objective.abs().max(1.0));

        let back = agg.map.transport(&sol);
        prop_assert!(max_violation(&m, g, &back.primal) <= 1e-7);
        let objective: f64 = m.all_nodes(g).iter().map(|&n| m.node(n).objective.evaluate(|v| back.primal[&v])).sum();
        prop_assert!((objective - sol.objective).abs() <= 1e-9 * sol.objective.abs().max(1.0));
    }
}
