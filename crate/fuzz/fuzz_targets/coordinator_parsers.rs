#![no_main]

use agentmesh_core::coordinator::{parse_route, parse_sub_questions, parse_verdict};
use agentmesh_core::registry::AgentKind;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|text: &str| {
    let _ = parse_verdict(text);
    if let Some(kind) = parse_route(text) {
        assert!(AgentKind::ROUTABLE.contains(&kind));
    }
    if let Some(subs) = parse_sub_questions(text) {
        assert!(subs.len() >= 2);
        assert!(subs.iter().all(|s| !s.trim().is_empty()));
    }
});
