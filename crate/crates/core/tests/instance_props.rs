use std::path::Path;

use ddgp_core::generator::{generate, GenSpec};
use ddgp_core::instance::{
    classify, find_order, read_instance, read_instance_bytes, validate_scheme, write_instance,
    ClassKind,
};
use proptest::prelude::*;

fn fixture(name: &str) -> String {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/data").join(name);
    std::fs::read_to_string(path).unwrap()
}

#[test]
fn fixtures_parse_and_validate() {
    for name in ["ex32.dgp", "ex21.dgp", "dmdgp_n10_k3.dgp"] {
        let inst = read_instance(&fixture(name)).unwrap();
        let s = inst.scheme.expect("fixtures carry a scheme");
        assert!(validate_scheme(&inst.graph, &s).is_ok(), "{name}");
    }
    let inst = read_instance(&fixture("dmdgp_n10_k3.dgp")).unwrap();
    let c = classify(&inst.graph, inst.scheme.as_ref().unwrap()).unwrap();
    assert_eq!(c.kind, ClassKind::Dmdgp);
    assert!(c.pruning_free);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(150))]

    #[test]
    fn order_search_recovers_a_valid_scheme(
        n in 4usize..13,
        k in 1usize..=3,
        p in 0.0f64..0.5,
        seed in any::<u64>(),
    ) {
        prop_assume!(n > k);
        let g = generate(&GenSpec::new(n, k, ClassKind::Dmdgp, p, seed)).unwrap();
        let found = find_order(&g.graph, k).unwrap().expect("graph admits an order");
        prop_assert!(validate_scheme(&g.graph, &found).is_ok());
        let c = classify(&g.graph, &found).unwrap();
        prop_assert!(c.is_ddgp());
        prop_assert!(!c.is_dmdgp() || c.is_combinatorial());
    }

    #[test]
    fn reader_never_panics(bytes in prop::collection::vec(any::<u8>(), 0..400)) {
        let _ = read_instance_bytes(&bytes);
    }

    #[test]
    fn reader_survives_near_miss_text(
        lines in prop::collection::vec(
            prop_oneof![
                Just("dgp 4 2".to_string()),
                (1usize..6, 1usize..6, -1.0f64..3.0).prop_map(|(i, j, d)| format!("e {i} {j} {d}")),
                prop::collection::vec(0usize..6, 0..6).prop_map(|v| {
                    format!("order {}", v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(" "))
                }),
                prop::collection::vec(0usize..6, 0..5).prop_map(|v| {
                    format!("cluster {}", v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(" "))
                }),
                Just("# note".to_string()),
            ],
            0..12,
        )
    ) {
        let text = lines.join("\n");
        if let Ok(inst) = read_instance(&text) {
            prop_assert_eq!(&read_instance(&write_instance(&inst)).unwrap(), &inst);
            if let Some(s) = &inst.scheme {
                let _ = validate_scheme(&inst.graph, s);
                let _ = classify(&inst.graph, s);
            }
            let _ = find_order(&inst.graph, inst.k);
        }
    }
}
