mod common;

use agentmesh_core::golden::{self, replay};
use agentmesh_core::registry::AgentKind::*;

#[tokio::test]
async fn all_golden_traces_replay() {
    let stack = common::stack();
    let goldens = golden::load_dir(&common::repo_root().join("golden")).unwrap();
    assert_eq!(goldens.len(), 6);
    for g in &goldens {
        let report = replay(stack.gateway.as_ref(), g).await;
        assert!(report.passed(), "{report:#?}");
    }
}

#[test]
fn golden_paths_match_case_study_table() {
    let goldens = golden::load_dir(&common::repo_root().join("golden")).unwrap();
    let paths: Vec<_> = goldens.iter().map(|g| g.expected_decisions.clone()).collect();
    assert_eq!(paths[0], [GeneralAgent, SqlAgent, SqlAgent]);
    assert_eq!(paths[1], [IrAgent, SqlAgent, SqlAgent]);
    assert_eq!(paths[2], [IrAgent, SqlAgent, IrAgent, SqlAgent]);
    assert_eq!(paths[3], [SqlAgent, SqlAgent, IrAgent]);
    assert_eq!(paths[4], [SqlAgent, GeneralAgent]);
    assert_eq!(paths[5], vec![IrAgent; 8]);
}

#[tokio::test]
async fn tampered_decision_is_reported() {
    let stack = common::stack();
    let mut g = golden::load_file(&common::repo_root().join("golden/q1.json")).unwrap();
    g.expected_decisions[0] = IrAgent;
    let report = replay(stack.gateway.as_ref(), &g).await;
    assert!(!report.trace_ok());
    assert!(report.trace_mismatches[0].contains("decisions[0]"), "{:?}", report.trace_mismatches);
}
