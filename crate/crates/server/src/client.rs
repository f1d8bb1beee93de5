use reqwest::header::CONTENT_TYPE;
use serde_json::Value;
use std::time::Duration;

use agentmesh_core::gateway::QueryResponse;
use agentmesh_core::golden::QueryClient;
use agentmesh_core::protocol::{decode_envelope, encode_envelope, RpcEnvelope, RpcError};

use crate::http::{ImageBody, QueryBody};

/// Default bound on one JSON-RPC round trip; generous because a delegation
/// may wait on model calls.
pub const DEFAULT_RPC_TIMEOUT: Duration = Duration::from_secs(120);

/// JSON-RPC 2.0 over HTTP POST: one envelope per request body. Transport
/// problems surface as `-32000` so callers can treat the peer as down.
#[derive(Debug, Clone)]
pub struct RpcClient {
    http: reqwest::Client,
    url: String,
}

impl RpcClient {
    pub fn new(url: impl Into<String>) -> Self {
        let http = reqwest::Client::builder()
            .timeout(DEFAULT_RPC_TIMEOUT)
            .build()
            .unwrap_or_default();
        Self::with_client(http, url)
    }

    pub fn with_client(http: reqwest::Client, url: impl Into<String>) -> Self {
        Self {
            http,
            url: url.into(),
        }
    }

    pub fn url(&self) -> &str {
        &self.url
    }

    pub async fn call(&self, method: &str, params: Value) -> Result<Value, RpcError> {
        let request = RpcEnvelope::request(method, params);
        let unreachable = |e: reqwest::Error| {
            RpcError::agent_failure(format!("{} unreachable: {e}", self.url))
        };
        let bytes = self
            .http
            .post(&self.url)
            .header(CONTENT_TYPE, "application/json")
            .body(encode_envelope(&request))
            .send()
            .await
            .map_err(unreachable)?
            .bytes()
            .await
            .map_err(unreachable)?;
        let reply = decode_envelope(&bytes).map_err(|e| {
            RpcError::agent_failure(format!("malformed reply from {}: {}", self.url, e.message))
        })?;
        if reply.is_request() {
            return Err(RpcError::agent_failure(format!(
                "{} answered with a request frame",
                self.url
            )));
        }
        if reply.id.is_some() && reply.id != request.id {
            return Err(RpcError::agent_failure(format!(
                "{} answered a different request id",
                self.url
            )));
        }
        reply.into_outcome()
    }
}

#[derive(Debug, thiserror::Error)]
pub enum QueryError {
    #[error("gateway unreachable: {0}")]
    Unreachable(String),
    #[error("gateway rejected the request ({status}): {message}")]
    Rejected { status: u16, message: String },
}

/// Client for the gateway's public query API. A 502 still carries the
/// failed trace and is returned as a response.
#[derive(Debug, Clone)]
pub struct HttpQueryClient {
    http: reqwest::Client,
    base: String,
}

impl HttpQueryClient {
    pub fn new(base: impl Into<String>) -> Self {
        let http = reqwest::Client::builder()
            .timeout(DEFAULT_RPC_TIMEOUT)
            .build()
            .unwrap_or_default();
        Self {
            http,
            base: base.into().trim_end_matches('/').to_string(),
        }
    }

    pub fn base(&self) -> &str {
        &self.base
    }

    pub async fn send(&self, body: &QueryBody) -> Result<(u16, QueryResponse), QueryError> {
        let resp = self
            .http
            .post(format!("{}/api/query", self.base))
            .json(body)
            .send()
            .await
            .map_err(|e| QueryError::Unreachable(e.to_string()))?;
        let status = resp.status().as_u16();
        let text = resp
            .text()
            .await
            .map_err(|e| QueryError::Unreachable(e.to_string()))?;
        if status == 200 || status == 502 {
            if let Ok(r) = serde_json::from_str::<QueryResponse>(&text) {
                return Ok((status, r));
            }
        }
        let message = serde_json::from_str::<Value>(&text)
            .ok()
            .and_then(|v| v.get("error").and_then(Value::as_str).map(str::to_string))
            .unwrap_or(text);
        Err(QueryError::Rejected { status, message })
    }

    pub async fn ask(
        &self,
        text: Option<&str>,
        session_id: Option<&str>,
        image: Option<ImageBody>,
    ) -> Result<(u16, QueryResponse), QueryError> {
        self.send(&QueryBody {
            session_id: session_id.map(str::to_string),
            text: text.map(str::to_string),
            image,
        })
        .await
    }

    pub async fn health(&self) -> Result<Value, QueryError> {
        let resp = self
            .http
            .get(format!("{}/api/health", self.base))
            .send()
            .await
            .map_err(|e| QueryError::Unreachable(e.to_string()))?;
        resp.json()
            .await
            .map_err(|e| QueryError::Unreachable(e.to_string()))
    }
}

#[async_trait::async_trait]
impl QueryClient for HttpQueryClient {
    async fn query(&self, text: &str) -> Result<QueryResponse, String> {
        self.ask(Some(text), None, None)
            .await
            .map(|(_, r)| r)
            .map_err(|e| e.to_string())
    }
}
