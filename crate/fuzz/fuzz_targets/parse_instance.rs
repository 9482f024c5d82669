#![no_main]

use ddgp_core::instance::{read_instance, read_instance_bytes, write_instance};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(inst) = read_instance_bytes(data) {
        let again = read_instance(&write_instance(&inst)).expect("written instance reparses");
        assert_eq!(again, inst);
    }
});
