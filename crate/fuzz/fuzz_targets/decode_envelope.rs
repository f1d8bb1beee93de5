#![no_main]

use agentmesh_core::protocol::{decode_envelope, encode_envelope, INVALID_REQUEST, PARSE_ERROR};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    match decode_envelope(data) {
        Ok(env) => {
            let again = decode_envelope(&encode_envelope(&env)).expect("re-encoded envelope decodes");
            assert_eq!(again, env);
        }
        Err(e) => assert!(e.code == PARSE_ERROR || e.code == INVALID_REQUEST, "code {}", e.code),
    }
});
