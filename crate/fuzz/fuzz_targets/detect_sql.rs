#![no_main]

use agentmesh_core::agents::sql::{detect_sql, Detected};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|text: &str| {
    let d = detect_sql(text);
    assert_eq!(d.raw_output, text);
    assert_eq!(d.detected == Detected::Sql, d.statement.is_some());
});
