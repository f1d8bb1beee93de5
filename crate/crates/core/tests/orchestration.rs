mod common;

use serde_json::json;
use std::sync::Arc;

use agentmesh_core::coordinator::{TraceFlag, TraceStatus, Verdict};
use agentmesh_core::gateway::{GatewayError, ImageUpload, QueryRequest, MAX_IMAGE_BYTES};
use agentmesh_core::protocol::AGENT_FAILURE;
use agentmesh_core::provider::ScriptedProvider;
use agentmesh_core::registry::AgentKind;
use agentmesh_core::stack::{LocalStack, StackOptions};

fn stack_with(entries: serde_json::Value, kinds: &[AgentKind]) -> LocalStack {
    let provider = Arc::new(ScriptedProvider::from_json(&entries.to_string()).unwrap());
    let options = StackOptions {
        kinds: kinds.to_vec(),
        ..Default::default()
    };
    LocalStack::build(provider, &common::fixtures(), options).unwrap()
}

fn text(q: &str) -> QueryRequest {
    QueryRequest {
        text: Some(q.into()),
        ..Default::default()
    }
}

const VA_COUNT: &str = "What is the total number of bridges in Virginia?";

#[tokio::test]
async fn simple_query_passes_partial_through() {
    let stack = common::stack();
    let r = stack.gateway.handle_query(text(VA_COUNT)).await.unwrap();
    assert_eq!(r.trace.verdict.as_ref().unwrap().verdict, Verdict::Simple);
    assert_eq!(r.trace.decision_kinds(), [AgentKind::SqlAgent]);
    assert!(r.answer.contains("COUNT(*) = 100"), "{}", r.answer);
    assert_eq!(r.answer, r.trace.final_answer);
    assert!(r.trace.is_consistent());
    assert_eq!(r.table.unwrap().rows, vec![vec![json!(100)]]);
}

#[tokio::test]
async fn stopped_sql_agent_falls_back_to_general() {
    let stack = common::stack();
    stack.set_offline(AgentKind::SqlAgent, true);
    let r = stack.gateway.handle_query(text(VA_COUNT)).await.unwrap();
    assert_eq!(r.trace.status, TraceStatus::Completed);
    assert!(r.trace.has_flag(|f| matches!(
        f,
        TraceFlag::DispatchFallback { from: AgentKind::SqlAgent, .. }
    )));
    assert_eq!(r.trace.partials[0].producing_agent, "general-agent");
    let health = stack.gateway.health();
    assert_eq!(health.status, "degraded");
    let sql = health.agents.iter().find(|c| c.kind == AgentKind::SqlAgent).unwrap();
    assert!(!sql.healthy);
    assert!(health.agents.iter().filter(|c| c.kind != AgentKind::SqlAgent).all(|c| c.healthy));
}

#[tokio::test]
async fn complex_query_with_stopped_agent_still_completes() {
    let stack = common::stack();
    stack.set_offline(AgentKind::SqlAgent, true);
    let q1 = "Briefly define a bridge, then provide the total number of bridges in Virginia and list those built in 2019.";
    let r = stack.gateway.handle_query(text(q1)).await.unwrap();
    assert!(r.trace.is_consistent());
    assert_eq!(r.trace.decisions.len(), 3);
    let fallbacks = r
        .trace
        .flags
        .iter()
        .filter(|f| matches!(f, TraceFlag::DispatchFallback { .. }))
        .count();
    // the first failure marks the agent unhealthy; the second skips it
    assert_eq!(fallbacks, 2);
}

#[tokio::test]
async fn general_failure_yields_agent_error_result() {
    let stack = common::stack();
    stack.set_offline(AgentKind::SqlAgent, true);
    stack.set_offline(AgentKind::GeneralAgent, true);
    let err = stack.gateway.handle_query(text(VA_COUNT)).await.unwrap_err();
    let GatewayError::Orchestration(r) = err else { panic!("{err:?}") };
    assert_eq!(r.trace.status, TraceStatus::Failed);
    assert_eq!(r.trace.partials.len(), 1);
    assert_eq!(r.trace.partials[0].error().unwrap().code, AGENT_FAILURE);
}

#[tokio::test]
async fn image_route_without_image_goes_general() {
    let stack = common::stack();
    let r = stack.gateway.handle_query(text("Describe this image")).await.unwrap();
    assert_eq!(r.trace.decision_kinds(), [AgentKind::GeneralAgent]);
    assert!(r.trace.has_flag(|f| matches!(f, TraceFlag::ImageOverride { index: 0 })));
}

#[tokio::test]
async fn image_upload_is_captioned() {
    let stack = common::stack();
    let bytes = std::fs::read(common::fixtures().image_path("bridge_sketch.png")).unwrap();
    let req = QueryRequest {
        text: None,
        image: Some(ImageUpload {
            bytes,
            media_type: "image/png".into(),
        }),
        session_id: None,
    };
    let r = stack.gateway.handle_query(req).await.unwrap();
    assert_eq!(r.trace.decision_kinds(), [AgentKind::ImageAgent]);
    assert!(r.answer.contains("colour gradient"), "{}", r.answer);
    // the image stays in the session for follow-up questions
    let follow = QueryRequest {
        session_id: Some(r.session_id.clone()),
        ..text("What is shown in this image?")
    };
    let r2 = stack.gateway.handle_query(follow).await.unwrap();
    assert_eq!(r2.session_id, r.session_id);
    assert_eq!(r2.trace.decision_kinds(), [AgentKind::ImageAgent]);
}

#[tokio::test]
async fn malformed_requests_are_rejected() {
    let stack = common::stack();
    let empty = stack.gateway.handle_query(QueryRequest::default()).await;
    assert!(matches!(empty, Err(GatewayError::BadRequest(_))));
    let blank = stack.gateway.handle_query(text("   ")).await;
    assert!(matches!(blank, Err(GatewayError::BadRequest(_))));
    let huge = QueryRequest {
        image: Some(ImageUpload {
            bytes: vec![0; MAX_IMAGE_BYTES + 1],
            media_type: "image/png".into(),
        }),
        ..text("what is this")
    };
    assert!(matches!(
        stack.gateway.handle_query(huge).await,
        Err(GatewayError::TooLarge { .. })
    ));
    let not_image = QueryRequest {
        image: Some(ImageUpload {
            bytes: b"hello".to_vec(),
            media_type: "text/plain".into(),
        }),
        ..Default::default()
    };
    assert!(matches!(
        stack.gateway.handle_query(not_image).await,
        Err(GatewayError::BadRequest(_))
    ));
}

#[tokio::test]
async fn trace_is_kept_per_session() {
    let stack = common::stack();
    let r = stack.gateway.handle_query(text(VA_COUNT)).await.unwrap();
    assert_eq!(stack.gateway.trace(&r.session_id).unwrap(), r.trace);
    assert!(stack.gateway.trace("no-such-session").is_err());
    let partial = stack
        .cache
        .read(&r.session_id, |s| s.partials.get(VA_COUNT).cloned())
        .unwrap();
    assert_eq!(partial.as_ref(), r.trace.partials.first());
}

#[tokio::test]
async fn health_states() {
    let stack = common::stack();
    let h = stack.gateway.health();
    assert_eq!(h.status, "ok");
    assert_eq!(h.agents.len(), 4);
    let empty = stack_with(json!([]), &[]);
    assert_eq!(empty.gateway.health().status, "degraded");
    let two = stack_with(json!([]), &[AgentKind::SqlAgent, AgentKind::GeneralAgent]);
    assert_eq!(two.gateway.health().agents.len(), 2);
}

#[tokio::test]
async fn unparseable_outputs_fall_back() {
    let stack = stack_with(
        json!([
            {"purpose": "complexity", "match_key": "q one", "response": "it depends"},
            {"purpose": "route", "match_key": "q one", "response": "the database one"},
            {"purpose": "general_answer", "match_key": "q one", "response": "general says hi"},
            {"purpose": "complexity", "match_key": "q two", "response": "COMPLEX"},
            {"purpose": "decompose", "match_key": "q two", "response": "just one thing"},
            {"purpose": "route", "match_key": "q two", "response": "GENERAL_AGENT"},
            {"purpose": "general_answer", "match_key": "q two", "response": "answer two"}
        ]),
        &AgentKind::ROUTABLE,
    );
    let r = stack.gateway.handle_query(text("q one")).await.unwrap();
    assert_eq!(r.answer, "general says hi");
    assert!(r.trace.has_flag(|f| *f == TraceFlag::ComplexityUnparsed));
    assert!(r.trace.has_flag(|f| *f == TraceFlag::RouteUnparsed { index: 0 }));

    let r = stack.gateway.handle_query(text("q two")).await.unwrap();
    assert_eq!(r.trace.verdict.as_ref().unwrap().verdict, Verdict::Complex);
    assert!(r.trace.has_flag(|f| *f == TraceFlag::DecompositionUnparsed));
    assert_eq!(r.trace.sub_questions, ["q two"]);
    assert_eq!(r.answer, "answer two");
}

#[tokio::test]
async fn synthesis_failure_degrades_to_labelled_concatenation() {
    let stack = stack_with(
        json!([
            {"purpose": "complexity", "match_key": "combo", "response": "COMPLEX"},
            {"purpose": "decompose", "match_key": "combo", "response": "['first part?', 'second part?']"},
            {"purpose": "route", "match_key": "first part", "response": "GENERAL_AGENT"},
            {"purpose": "route", "match_key": "second part", "response": "IMAGE_AGENT"},
            {"purpose": "general_answer", "match_key": "*", "response": "generic"}
        ]),
        &AgentKind::ROUTABLE,
    );
    let r = stack.gateway.handle_query(text("combo")).await.unwrap();
    assert!(r.trace.has_flag(|f| matches!(f, TraceFlag::SynthesisDegraded { .. })));
    assert_eq!(r.answer, "first part?\ngeneric\n\nsecond part?\ngeneric");
}

#[tokio::test]
async fn failed_partial_is_marked_unavailable_in_synthesis() {
    let stack = stack_with(
        json!([
            {"purpose": "complexity", "match_key": "combo", "response": "COMPLEX"},
            {"purpose": "decompose", "match_key": "combo", "response": "[\"first part?\", \"second part?\"]"},
            {"purpose": "route", "match_key": "first part", "response": "GENERAL_AGENT"},
            {"purpose": "route", "match_key": "second part", "response": "GENERAL_AGENT"},
            {"purpose": "general_answer", "match_key": "first part", "response": "one"}
        ]),
        &AgentKind::ROUTABLE,
    );
    let r = stack.gateway.handle_query(text("combo")).await.unwrap();
    assert!(r.trace.partials[0].is_ok());
    assert!(!r.trace.partials[1].is_ok());
    assert!(r.answer.contains("second part?\nunavailable ("), "{}", r.answer);
}

#[tokio::test]
async fn provider_failure_on_complexity_fails_the_trace() {
    let stack = stack_with(json!([]), &AgentKind::ROUTABLE);
    let err = stack.gateway.handle_query(text("anything")).await.unwrap_err();
    let GatewayError::Orchestration(r) = err else { panic!() };
    assert_eq!(r.trace.error.as_ref().unwrap().code, -32002);
    assert!(r.answer.starts_with("Sorry"));
}

#[tokio::test]
async fn parallel_dispatch_keeps_log_order() {
    let provider = common::script();
    let options = StackOptions {
        coordinator: agentmesh_core::coordinator::CoordinatorConfig {
            parallel_dispatch: true,
            ..Default::default()
        },
        ..Default::default()
    };
    let stack = LocalStack::build(provider, &common::fixtures(), options).unwrap();
    for g in agentmesh_core::golden::load_dir(&common::repo_root().join("golden")).unwrap() {
        let r = stack.gateway.handle_query(text(&g.query)).await.unwrap();
        assert_eq!(r.trace.log_lines, g.expected_log_lines);
    }
}

#[tokio::test]
async fn concurrent_sessions_do_not_interleave() {
    let stack = Arc::new(common::stack());
    let goldens = agentmesh_core::golden::load_dir(&common::repo_root().join("golden")).unwrap();
    let mut handles = Vec::new();
    for g in goldens.into_iter().cycle().take(18) {
        let s = stack.clone();
        handles.push(tokio::spawn(async move {
            let r = s.gateway.handle_query(text(&g.query)).await.unwrap();
            assert_eq!(r.trace.log_lines, g.expected_log_lines);
        }));
    }
    for h in handles {
        h.await.unwrap();
    }
}
