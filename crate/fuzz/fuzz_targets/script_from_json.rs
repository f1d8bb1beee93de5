#![no_main]

use agentmesh_core::provider::ScriptedProvider;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|text: &str| {
    if let Ok(p) = ScriptedProvider::from_json(text) {
        for e in p.entries() {
            if !e.match_key.contains('*') {
                assert_eq!(p.lookup(e.purpose, &e.match_key).unwrap(), e.response);
            }
        }
    }
});
