use std::collections::BTreeMap;

use ddgp_core::bp::{solve, verify_realization, Answer, BpConfig, BpError, Branch};
use ddgp_core::edm::{edm_from_realization, Realization};
use ddgp_core::experiments::example_instance;
use ddgp_core::generator::{generate, GenSpec};
use ddgp_core::instance::{ClassKind, DiscretizationScheme, WeightedGraph};
use proptest::prelude::*;

fn congruent(a: &Realization, b: &Realization) -> bool {
    let (da, db) = (edm_from_realization(a), edm_from_realization(b));
    let scale = da.as_matrix().amax().max(1.0);
    (da.as_matrix() - db.as_matrix()).amax() <= 1e-6 * scale
}

fn class() -> impl Strategy<Value = ClassKind> {
    prop_oneof![
        Just(ClassKind::Dmdgp),
        Just(ClassKind::CombinatorialDdgp),
        Just(ClassKind::Ddgp),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(120))]

    #[test]
    fn search_invariants(
        n in 5usize..11,
        k in 2usize..=3,
        target in class(),
        p in prop_oneof![Just(0.0), 0.0f64..0.6],
        seed in any::<u64>(),
    ) {
        let Ok(g) = generate(&GenSpec::new(n, k, target, p, seed)) else {
            return Ok(());
        };
        let config = BpConfig::default();
        let out = solve(&g.graph, &g.scheme, &config).unwrap();
        prop_assert_eq!(out.answer, Answer::Yes);
        let sols = out.solutions.as_slice();
        prop_assert!(sols.len() <= 1 << (n - k));
        prop_assert!(sols.windows(2).all(|w| w[0].branch < w[1].branch));
        for s in sols {
            prop_assert_eq!(s.branch.0.len(), n - k);
            prop_assert!(verify_realization(&g.graph, &s.realization).unwrap() <= config.tol_prune);
        }
        prop_assert!(sols.iter().any(|s| congruent(&s.realization, &g.realization)));

        let a = &out.stats.a;
        prop_assert!(a[..k].iter().all(|&v| v == 1));
        prop_assert_eq!(a[k], 2);
        prop_assert_eq!(*out.stats.live_nodes.last().unwrap(), sols.len() as u64);
        prop_assert!(out.stats.max_width_observed <= 1 << (n - k));
        prop_assert_eq!(out.stats.depth_reached, n);

        let par = solve(&g.graph, &g.scheme, &BpConfig { threads: 3, ..config.clone() }).unwrap();
        prop_assert_eq!(&par, &out);

        let first = solve(&g.graph, &g.scheme, &BpConfig { collect_all: false, ..config.clone() }).unwrap();
        prop_assert_eq!(first.solutions.len(), 1);
        prop_assert_eq!(&first.solutions.as_slice()[0], &sols[0]);

        let exact = BpConfig { max_nodes: out.stats.nodes_expanded, ..config.clone() };
        prop_assert!(solve(&g.graph, &g.scheme, &exact).is_ok());
        let short = BpConfig { max_nodes: out.stats.nodes_expanded - 1, ..config };
        prop_assert_eq!(
            solve(&g.graph, &g.scheme, &short).unwrap_err(),
            BpError::BudgetExceeded { max_nodes: out.stats.nodes_expanded - 1 }
        );
    }
}

#[test]
fn planar_chain_has_eight_realizations() {
    let coords = [[0.0, 0.0], [1.0, 0.2], [1.7, 1.1], [2.9, 0.8], [3.1, 2.0]];
    let mut g = WeightedGraph::new(5);
    let mut clusters = BTreeMap::new();
    for j in 2..=5usize {
        for i in j.saturating_sub(2).max(1)..j {
            let d = ((coords[i - 1][0] - coords[j - 1][0]) as f64)
                .hypot(coords[i - 1][1] - coords[j - 1][1]);
            g.add_edge(i, j, d).unwrap();
        }
        if j > 2 {
            clusters.insert(j, vec![j - 2, j - 1]);
        }
    }
    let s = DiscretizationScheme::new(2, (1..=5).collect(), clusters);
    let out = solve(&g, &s, &BpConfig::default()).unwrap();
    assert_eq!(out.solutions.len(), 8);
    assert!(out
        .solutions
        .iter()
        .all(|s| s.branch.0.iter().all(|b| *b != Branch::Single)));
}

#[test]
fn short_closing_edge_gives_no() {
    let (mut g, s) = example_instance(5f64.sqrt(), 2.0).unwrap();
    let mut edges: Vec<(usize, usize, f64)> = g.edges().collect();
    edges.iter_mut().find(|e| (e.0, e.1) == (4, 5)).unwrap().2 = 0.1;
    g = WeightedGraph::from_edges(5, edges).unwrap();
    let out = solve(&g, &s, &BpConfig::default()).unwrap();
    assert_eq!(out.answer, Answer::No);
    assert!(out.solutions.is_empty());
}
