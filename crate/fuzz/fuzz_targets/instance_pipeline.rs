#![no_main]

use ddgp_core::bp::{solve, BpConfig};
use ddgp_core::instance::{classify, find_order_with_budget, read_instance_bytes, validate_scheme};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(inst) = read_instance_bytes(data) else {
        return;
    };
    if inst.graph.n() > 64 {
        return;
    }
    let scheme = match inst.scheme {
        Some(s) => s,
        None => match find_order_with_budget(&inst.graph, inst.k, 20_000) {
            Ok(Some(s)) => s,
            _ => return,
        },
    };
    if validate_scheme(&inst.graph, &scheme).is_ok() {
        let _ = classify(&inst.graph, &scheme);
        let config = BpConfig {
            max_nodes: 5_000,
            threads: 1,
            ..BpConfig::default()
        };
        let _ = solve(&inst.graph, &scheme, &config);
    }
});
