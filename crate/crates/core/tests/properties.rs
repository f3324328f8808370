use evobarrier_core::kernel::{stationary_solve, stationary_tree_formula, KernelAnalysis, RoutingFunction};
use evobarrier_core::linalg::vec_dist_inf;
use evobarrier_core::potential::{edge_potential, quasi_potential, tree_gap, ElevationTable};
use evobarrier_core::resistance::min_coradius;
use evobarrier_core::trees::{enumerate_trees, min_in_tree_cost, DEFAULT_TREE_CAP};
use evobarrier_core::{CompletionMode, CostGraph, EdgeSpec, EvolutionModel};
use proptest::prelude::*;

const INF: f64 = f64::INFINITY;

/// Random admissible graph on 2..=6 states with costs in {0, ..., 4, inf};
/// the cycle 0 -> 1 -> ... -> 0 is forced finite.
fn admissible_graph() -> impl Strategy<Value = CostGraph> {
    (2usize..=6)
        .prop_flat_map(|n| (Just(n), proptest::collection::vec(prop_oneof![3 => 0u8..=4, 1 => Just(u8::MAX)], n * n)))
        .prop_map(|(n, raw)| {
            let mut cost: Vec<f64> = raw.iter().map(|&c| if c == u8::MAX { INF } else { c as f64 }).collect();
            for x in 0..n {
                cost[x * n + x] = 0.0;
                let y = (x + 1) % n;
                if cost[x * n + y].is_infinite() {
                    cost[x * n + y] = (raw[x * n + x] % 5) as f64;
                }
            }
            CostGraph::new((0..n).map(|i| format!("s{i}")).collect(), cost).unwrap()
        })
}

/// Random model on an admissible graph: prefactors in [0.5, 2], small linear
/// perturbations, either completion mode.
fn random_model() -> impl Strategy<Value = EvolutionModel> {
    (admissible_graph(), any::<bool>(), proptest::collection::vec((0.5f64..2.0, -0.2f64..0.2), 36)).prop_map(
        |(g, normalize, params)| {
            let n = g.len();
            let mut edges = Vec::new();
            for x in 0..n {
                for y in 0..n {
                    if x != y && g.cost(x, y).is_finite() {
                        let (mut k, h) = params[x * 6 + y];
                        // zero-cost mass must stay below one for the diagonal to complete
                        if !normalize && g.cost(x, y) == 0.0 {
                            k /= 3.0 * n as f64;
                        }
                        edges.push(EdgeSpec { from: x, to: y, cost: g.cost(x, y), k, h: vec![h] });
                    }
                }
            }
            let mode = if normalize { CompletionMode::RowNormalize } else { CompletionMode::DiagonalComplement };
            EvolutionModel::from_edges(g.states().to_vec(), mode, &edges).unwrap()
        },
    )
}

// exhaustive minimax of W over simple paths
fn brute_elevation(w: &dyn Fn(usize, usize) -> f64, n: usize, x: usize, y: usize) -> f64 {
    fn go(
        w: &dyn Fn(usize, usize) -> f64,
        n: usize,
        at: usize,
        y: usize,
        seen: &mut Vec<bool>,
        worst: f64,
        best: &mut f64,
    ) {
        if at == y {
            *best = best.min(worst);
            return;
        }
        for z in 0..n {
            if !seen[z] && w(at, z).is_finite() {
                seen[z] = true;
                go(w, n, z, y, seen, worst.max(w(at, z)), best);
                seen[z] = false;
            }
        }
    }
    let mut seen = vec![false; n];
    seen[x] = true;
    let mut best = INF;
    go(w, n, x, y, &mut seen, f64::NEG_INFINITY, &mut best);
    best
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn energy_barrier_never_exceeds_min_coradius(g in admissible_graph()) {
        let qp = quasi_potential(&g);
        let table = ElevationTable::from_graph(&g, &qp.v);
        let e = evobarrier_core::potential::energy_barrier_from(&table, &qp.v).value;
        prop_assert!(e <= min_coradius(&g).value, "e = {e}");
        prop_assert!(e >= 0.0);
    }

    #[test]
    fn arborescence_minimum_matches_enumeration(g in admissible_graph()) {
        for root in 0..g.len() {
            let enumerated = enumerate_trees(&g, root, DEFAULT_TREE_CAP).unwrap();
            prop_assert!(enumerated.iter().all(|t| t.is_valid()));
            let min = enumerated.iter().map(|t| t.cost).fold(INF, f64::min);
            prop_assert_eq!(min_in_tree_cost(&g, root), Some(min));
        }
    }

    #[test]
    fn elevation_matches_brute_force_and_w_is_symmetric(g in admissible_graph()) {
        let n = g.len();
        let qp = quasi_potential(&g);
        let table = ElevationTable::from_graph(&g, &qp.v);
        let w = |x: usize, y: usize| if x == y { INF } else { edge_potential(&qp.v, &g, x, y) };
        for x in 0..n {
            for y in 0..n {
                if x == y {
                    continue;
                }
                prop_assert_eq!(w(x, y), w(y, x));
                prop_assert_eq!(table.value(x, y), brute_elevation(&w, n, x, y));
                let path = table.witness(x, y).unwrap();
                let mut seen = path.clone();
                seen.sort();
                seen.dedup();
                prop_assert_eq!(seen.len(), path.len(), "witness path is not simple");
            }
        }
    }

    #[test]
    fn potential_and_gap_invariants(g in admissible_graph()) {
        let qp = quasi_potential(&g);
        prop_assert_eq!(qp.v.iter().copied().fold(INF, f64::min), 0.0);
        prop_assert!(qp.v.iter().all(|&v| v >= 0.0));
        let gap = tree_gap(&g, DEFAULT_TREE_CAP).unwrap();
        prop_assert!(gap.theta > 0.0);
        prop_assert_eq!(gap.theta.is_infinite(), gap.optimal_trees == gap.total_trees);
        prop_assert_eq!(gap.c0, qp.c0);
    }

    #[test]
    fn recurrent_classes_partition_and_are_closed(g in admissible_graph()) {
        let d = g.recurrent_classes();
        let mut all: Vec<usize> = d.transient.clone();
        for c in &d.classes {
            all.extend(c);
            for &x in c {
                for y in 0..g.len() {
                    if g.cost(x, y) == 0.0 {
                        prop_assert!(c.contains(&y));
                    }
                }
            }
        }
        all.sort();
        prop_assert_eq!(all, (0..g.len()).collect::<Vec<_>>());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn tree_formula_matches_linear_solve(m in random_model()) {
        for eps in [m.eps_max(), m.eps_max() / 2.0, m.eps_max() / 10.0] {
            let tree = stationary_tree_formula(&m, eps, DEFAULT_TREE_CAP).unwrap();
            let p = m.kernel(eps).unwrap();
            let solved = stationary_solve(&p).unwrap();
            prop_assert!(vec_dist_inf(&tree, &solved) <= 1e-10, "eps = {eps}");
        }
    }

    #[test]
    fn kernel_rows_are_stochastic(m in random_model()) {
        for eps in [m.eps_max(), m.eps_max() / 2.0, m.eps_max() / 10.0] {
            let p = m.kernel(eps).unwrap();
            for x in 0..m.len() {
                prop_assert!(p.row(x).iter().all(|&v| v >= 0.0));
                prop_assert!((p.row(x).iter().sum::<f64>() - 1.0).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn kernel_analysis_invariants(m in random_model()) {
        let routing = RoutingFunction::from_elevation(m.graph());
        for eps in [m.eps_max() / 2.0, m.eps_max() / 10.0] {
            let a = KernelAnalysis::new(&m, eps).unwrap();
            prop_assert!(a.stationarity_residual <= 1e-10);
            prop_assert!(a.pi.iter().all(|&p| p > 0.0));
            prop_assert!((a.pi.iter().sum::<f64>() - 1.0).abs() <= 1e-10);
            prop_assert!(a.reversibility_residual <= 1e-12);
            prop_assert!(a.poisson_residuals.0 <= 1e-10 && a.poisson_residuals.1 <= 1e-10,
                "poisson residuals {:?}", a.poisson_residuals);
            // summing entries of size ||Q|| carries round-off of order ||Q|| * 1e-16 per term
            let q_scale = a.q.norm_inf().max(1.0);
            prop_assert!(a.q_row_sum_residual() <= 1e-12 * q_scale, "row sums {} at ||Q|| = {q_scale}", a.q_row_sum_residual());
            let bound = a.poincare_bound(&routing).unwrap();
            prop_assert!(bound <= a.gap * (1.0 + 1e-9), "bound {bound} gap {}", a.gap);
        }
    }
}
