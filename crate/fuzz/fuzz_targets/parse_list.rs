#![no_main]

use agentmesh_core::pyfmt::{parse_list, repr_list};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|text: &str| {
    if let Some(items) = parse_list(text) {
        assert_eq!(parse_list(&repr_list(&items)), Some(items));
    }
});
