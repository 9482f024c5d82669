#![no_main]

use ddgp_core::sidecar::{read_realization_json, write_realization_json};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(x) = read_realization_json(text) {
        let again = read_realization_json(&write_realization_json(&x)).expect("roundtrip");
        assert_eq!(again, x);
    }
});
