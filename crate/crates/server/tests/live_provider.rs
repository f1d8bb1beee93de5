use axum::extract::State;
use axum::http::{HeaderMap, StatusCode};
use axum::routing::post;
use axum::{Json, Router};
use serde_json::{json, Value};
use std::sync::{Arc, Mutex};
use std::time::Duration;

use agentmesh_core::protocol::PROVIDER_FAILURE;
use agentmesh_core::provider::{prompts, ModelProvider};
use agentmesh_core::state::StoredImage;
use agentmesh_server::{LiveConfig, LiveProvider};

#[derive(Clone, Default)]
struct Mock {
    seen: Arc<Mutex<Vec<(Option<String>, Value)>>>,
    mode: Arc<Mutex<&'static str>>,
}

async fn completions(State(m): State<Mock>, headers: HeaderMap, Json(body): Json<Value>) -> (StatusCode, Json<Value>) {
    let auth = headers.get("authorization").map(|v| v.to_str().unwrap().to_string());
    m.seen.lock().unwrap().push((auth, body));
    let mode = *m.mode.lock().unwrap();
    match mode {
        "error" => (StatusCode::INTERNAL_SERVER_ERROR, Json(json!({"error": "boom"}))),
        "empty" => (StatusCode::OK, Json(json!({"choices": []}))),
        "slow" => {
            tokio::time::sleep(Duration::from_secs(3)).await;
            (StatusCode::OK, Json(json!({})))
        }
        _ => (StatusCode::OK, Json(json!({"choices": [{"message": {"role": "assistant", "content": " SQL_AGENT "}}]}))),
    }
}

async fn mock() -> (String, Mock) {
    let m = Mock::default();
    *m.mode.lock().unwrap() = "ok";
    let app = Router::new().route("/v1/chat/completions", post(completions)).with_state(m.clone());
    let listener = tokio::net::TcpListener::bind("127.0.0.1:0").await.unwrap();
    let url = format!("http://{}/v1", listener.local_addr().unwrap());
    tokio::spawn(async move { axum::serve(listener, app).await.unwrap() });
    (url, m)
}

fn provider(endpoint: &str, timeout: Duration) -> LiveProvider {
    LiveProvider::new(LiveConfig {
        endpoint: endpoint.to_string(),
        model: "test-model".into(),
        api_key: Some("k-123".into()),
        timeout,
    })
    .unwrap()
}

#[tokio::test]
async fn completion_request_shape_and_forced_temperature() {
    let (url, m) = mock().await;
    let p = provider(&url, Duration::from_secs(5));
    let mut req = prompts::route("How many bridges are in Virginia?");
    req.temperature = 0.7;
    assert_eq!(p.complete(&req).await.unwrap(), "SQL_AGENT");
    let mut syn = prompts::general_answer("What is a bridge?");
    syn.temperature = 0.7;
    p.complete(&syn).await.unwrap();

    let seen = m.seen.lock().unwrap();
    let (auth, body) = &seen[0];
    assert_eq!(auth.as_deref(), Some("Bearer k-123"));
    assert_eq!(body["model"], "test-model");
    assert_eq!(body["temperature"], 0.0);
    assert_eq!(body["max_tokens"], req.max_tokens);
    assert_eq!(body["messages"][0]["role"], "system");
    assert_eq!(body["messages"].as_array().unwrap().len(), req.messages.len());
    assert_eq!(seen[1].1["temperature"], 0.7);
}

#[tokio::test]
async fn caption_sends_inline_image() {
    let (url, m) = mock().await;
    let p = provider(&format!("{url}/chat/completions"), Duration::from_secs(5));
    let img = StoredImage::new("image/png", vec![1, 2, 3]);
    p.caption(&img, "Describe it").await.unwrap();
    let seen = m.seen.lock().unwrap();
    let content = &seen[0].1["messages"][0]["content"];
    assert_eq!(content[0]["text"], "Describe it");
    assert_eq!(content[1]["image_url"]["url"], "data:image/png;base64,AQID");
}

#[tokio::test]
async fn failures_map_to_provider_error() {
    let (url, m) = mock().await;
    let p = provider(&url, Duration::from_millis(500));
    let req = prompts::general_answer("q");
    for mode in ["error", "empty", "slow"] {
        *m.mode.lock().unwrap() = mode;
        let err = p.complete(&req).await.unwrap_err();
        assert_eq!(err.to_rpc().code, PROVIDER_FAILURE, "{mode}: {err}");
    }
    let down = provider("http://127.0.0.1:9", Duration::from_secs(1));
    assert_eq!(down.complete(&req).await.unwrap_err().to_rpc().code, PROVIDER_FAILURE);
}

#[test]
fn embeddings_are_local_and_unit_norm() {
    let p = provider("http://127.0.0.1:9", Duration::from_secs(1));
    let v = p.embed("steel truss bridge").unwrap();
    assert_eq!(v.len(), p.embedding_dim());
    assert!((v.iter().map(|x| x * x).sum::<f64>().sqrt() - 1.0).abs() < 1e-9);
}

#[test]
fn config_from_env_requires_endpoint_and_model() {
    // all env reads happen in this one test to avoid races
    std::env::remove_var("MODEL_ENDPOINT");
    assert!(LiveConfig::from_env().is_err());
    std::env::set_var("MODEL_ENDPOINT", "http://x/v1/");
    std::env::set_var("MODEL_NAME", "m");
    std::env::remove_var("MODEL_API_KEY");
    let c = LiveConfig::from_env().unwrap();
    assert_eq!(c.completions_url(), "http://x/v1/chat/completions");
    assert_eq!(c.api_key, None);
    assert_eq!(c.timeout, Duration::from_secs(30));
}
