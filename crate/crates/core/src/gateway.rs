//! Transport-independent request handling for the HTTP gateway: sessions,
//! image intake, orchestration, health, and the context/registration RPCs
//! agents call back into.

use async_trait::async_trait;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use std::sync::Arc;
use std::time::Instant;

use crate::coordinator::{Coordinator, OrchestrationTrace};
use crate::protocol::a2a::METHOD_CARD;
use crate::protocol::mcp::{METHOD_GET_CONTEXT, METHOD_PUT_CONTEXT};
use crate::protocol::{parse_params, ContextRequest, RpcError, RpcHandler, TableResult};
use crate::provider::Role;
use crate::registry::{AgentCard, Registry};
use crate::state::{ContextCache, StateError, StoredImage};

pub const MAX_IMAGE_BYTES: usize = 10 * 1024 * 1024;
/// Question used when an image arrives without text.
pub const IMAGE_ONLY_PROMPT: &str = "Describe this image.";

#[derive(Debug, Clone, PartialEq)]
pub struct ImageUpload {
    pub bytes: Vec<u8>,
    pub media_type: String,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct QueryRequest {
    pub session_id: Option<String>,
    pub text: Option<String>,
    pub image: Option<ImageUpload>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QueryResponse {
    pub session_id: String,
    pub answer: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub table: Option<TableResult>,
    pub trace: OrchestrationTrace,
    pub elapsed_ms: u64,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum GatewayError {
    #[error("bad request: {0}")]
    BadRequest(String),
    #[error("image of {size} bytes exceeds the {MAX_IMAGE_BYTES} byte limit")]
    TooLarge { size: usize },
    /// The coordinator could not produce an answer; the response still
    /// carries the failed trace.
    #[error("orchestration failed: {}", .0.answer)]
    Orchestration(Box<QueryResponse>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HealthReport {
    /// `ok` when at least one agent is registered and all are healthy,
    /// otherwise `degraded`.
    pub status: String,
    pub agents: Vec<AgentCard>,
}

pub struct Gateway {
    coordinator: Arc<Coordinator>,
    cache: Arc<ContextCache>,
}

impl Gateway {
    pub fn new(coordinator: Arc<Coordinator>, cache: Arc<ContextCache>) -> Self {
        Self { coordinator, cache }
    }

    pub fn cache(&self) -> &Arc<ContextCache> {
        &self.cache
    }

    pub fn registry(&self) -> &Arc<Registry> {
        self.coordinator.registry()
    }

    pub fn coordinator(&self) -> &Arc<Coordinator> {
        &self.coordinator
    }

    pub async fn handle_query(&self, req: QueryRequest) -> Result<QueryResponse, GatewayError> {
        let started = Instant::now();
        let text = req.text.as_deref().map(str::trim).filter(|t| !t.is_empty());
        if text.is_none() && req.image.is_none() {
            return Err(GatewayError::BadRequest(
                "a query needs text or an image".into(),
            ));
        }
        if let Some(img) = &req.image {
            if img.bytes.len() > MAX_IMAGE_BYTES {
                return Err(GatewayError::TooLarge {
                    size: img.bytes.len(),
                });
            }
            if img.bytes.is_empty() {
                return Err(GatewayError::BadRequest("image is empty".into()));
            }
            if !img.media_type.starts_with("image/") {
                return Err(GatewayError::BadRequest(format!(
                    "unsupported media type '{}'",
                    img.media_type
                )));
            }
        }
        let query = text.unwrap_or(IMAGE_ONLY_PROMPT).to_string();
        let session_id = match req.session_id.as_deref().map(str::trim) {
            Some(id) if !id.is_empty() => self.cache.ensure(id),
            _ => self.cache.create(),
        };
        let images = self
            .cache
            .update(&session_id, |s| {
                if let Some(img) = req.image {
                    s.add_image(StoredImage::new(img.media_type, img.bytes));
                }
                s.push_message(Role::User, query.clone());
                s.images.iter().map(|i| i.hash.clone()).collect::<Vec<_>>()
            })
            .map_err(|e| GatewayError::BadRequest(e.to_string()))?;

        let trace = self
            .coordinator
            .orchestrate(&query, &session_id, &images)
            .await;

        let _ = self.cache.update(&session_id, |s| {
            s.push_message(Role::Assistant, trace.final_answer.clone());
            for (q, p) in trace.sub_questions.iter().zip(&trace.partials) {
                s.partials.insert(q.clone(), p.clone());
            }
            s.last_trace = Some(trace.clone());
        });

        let table = trace.partials.iter().rev().find_map(|p| p.table.clone());
        let response = QueryResponse {
            session_id,
            answer: trace.final_answer.clone(),
            table,
            elapsed_ms: started.elapsed().as_millis() as u64,
            trace,
        };
        if response.trace.is_completed() {
            Ok(response)
        } else {
            Err(GatewayError::Orchestration(Box::new(response)))
        }
    }

    pub fn health(&self) -> HealthReport {
        let agents = self.registry().snapshot();
        let ok = !agents.is_empty() && agents.iter().all(|c| c.healthy);
        HealthReport {
            status: if ok { "ok" } else { "degraded" }.into(),
            agents,
        }
    }

    pub fn trace(&self, session_id: &str) -> Result<OrchestrationTrace, StateError> {
        self.cache
            .read(session_id, |s| s.last_trace.clone())?
            .ok_or_else(|| StateError::NotFound(format!("no trace in session '{session_id}'")))
    }
}

fn state_to_rpc(e: StateError) -> RpcError {
    match e {
        StateError::NotFound(m) => RpcError::invalid_params(m, json!({"reason": "not_found"})),
        StateError::InvalidArgument(m) => RpcError::invalid_params(m, Value::Null),
        other => RpcError::internal(other.to_string()),
    }
}

/// RPCs the gateway answers for agents: `a2a.card` registers (or
/// re-registers) a card, `mcp.get_context` / `mcp.put_context` read and
/// write session state.
#[async_trait]
impl RpcHandler for Gateway {
    async fn handle(&self, method: &str, params: Value) -> Result<Value, RpcError> {
        match method {
            METHOD_CARD => {
                let card: AgentCard = parse_params(params)?;
                let id = card.agent_id.clone();
                self.registry()
                    .register(card)
                    .map_err(|e| RpcError::invalid_params(e.to_string(), json!({"agent_id": id})))?;
                Ok(json!({ "registered": id }))
            }
            METHOD_GET_CONTEXT => {
                let req: ContextRequest = parse_params(params)?;
                let value = self.cache.get(&req.session_id, &req.path).map_err(state_to_rpc)?;
                Ok(json!({ "value": value }))
            }
            METHOD_PUT_CONTEXT => {
                let req: ContextRequest = parse_params(params)?;
                let value = req.value.ok_or_else(|| {
                    RpcError::invalid_params("value is required", json!({"parameter": "value"}))
                })?;
                self.cache
                    .put(&req.session_id, &req.path, value)
                    .map_err(state_to_rpc)?;
                Ok(json!({ "ok": true }))
            }
            other => Err(RpcError::method_not_found(other)),
        }
    }
}
