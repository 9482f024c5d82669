use ddgp_core::bp::{solve, verify_realization, Answer, BpConfig};
use ddgp_core::counting::{check_recurrence, predict_count, CountKind};
use ddgp_core::generator::{generate, GenSpec};
use ddgp_core::instance::ClassKind;

fn spec(i: u64, class: ClassKind, p: f64) -> GenSpec {
    let k = 2 + (i % 2) as usize;
    let n = 8 + (i % 9) as usize;
    GenSpec::new(n, k, class, p, 1000 + i)
}

#[test]
fn pruning_free_cliques_have_power_of_two_solutions() {
    for i in 0..50 {
        let s = spec(i, ClassKind::CombinatorialDdgp, 0.0);
        let g = generate(&s).unwrap();
        let prediction = predict_count(&g.graph, &g.scheme).unwrap();
        assert_eq!(prediction.kind, CountKind::ExactPowerOfTwo);
        let out = solve(&g.graph, &g.scheme, &BpConfig::default()).unwrap();
        assert_eq!(out.solutions.len() as u128, prediction.value.unwrap(), "{s:?}");
        let rec = check_recurrence(&out.stats, &g.graph, &g.scheme).unwrap();
        assert!(rec.equality_checked);
        assert!(rec.holds, "{s:?}: {:?}", rec.violations);
    }
}

#[test]
fn inequality_holds_with_pruning_edges_on_clique_clusters() {
    for class in [ClassKind::Dmdgp, ClassKind::CombinatorialDdgp] {
        for p in [0.05, 0.2, 0.5] {
            for i in 0..12 {
                let s = spec(i, class, p);
                let g = generate(&s).unwrap();
                let out = solve(&g.graph, &g.scheme, &BpConfig::default()).unwrap();
                assert_eq!(out.answer, Answer::Yes);
                assert!(out.solutions.len() <= 1 << (s.n - s.k));
                for sol in out.solutions.iter() {
                    assert!(verify_realization(&g.graph, &sol.realization).unwrap() <= 1e-6);
                }
                let rec = check_recurrence(&out.stats, &g.graph, &g.scheme).unwrap();
                assert!(rec.holds, "{s:?}: {:?}", rec.violations);
            }
        }
    }
}

// A cluster whose members branch independently can carry more than twice the
// positions of its latest member.
#[test]
fn general_clusters_can_exceed_double_of_latest() {
    let s = GenSpec::new(9, 3, ClassKind::Ddgp, 0.05, 1001);
    let g = generate(&s).unwrap();
    let out = solve(&g.graph, &g.scheme, &BpConfig::default()).unwrap();
    let rec = check_recurrence(&out.stats, &g.graph, &g.scheme).unwrap();
    assert!(!rec.holds);
    let v = &rec.violations[0];
    assert_eq!((v.vertex, v.latest, v.a_j, v.a_latest), (9, 6, 8, 2));
    for sol in out.solutions.iter() {
        assert!(verify_realization(&g.graph, &sol.realization).unwrap() <= 1e-6);
    }
}
