use async_trait::async_trait;
use serde_json::json;

use agentmesh_core::coordinator::AgentTransport;
use agentmesh_core::protocol::a2a::METHOD_DELEGATE;
use agentmesh_core::protocol::{parse_params, A2AResult, A2ATask, RpcError};
use agentmesh_core::registry::AgentCard;

use crate::client::RpcClient;

/// Delegates tasks with `a2a.delegate` to the card's HTTP endpoint.
#[derive(Debug, Clone, Default)]
pub struct HttpTransport {
    http: reqwest::Client,
}

impl HttpTransport {
    pub fn new() -> Self {
        let http = reqwest::Client::builder()
            .timeout(crate::client::DEFAULT_RPC_TIMEOUT)
            .build()
            .unwrap_or_default();
        Self { http }
    }
}

#[async_trait]
impl AgentTransport for HttpTransport {
    async fn delegate(&self, card: &AgentCard, task: A2ATask) -> Result<A2AResult, RpcError> {
        let client = RpcClient::with_client(self.http.clone(), card.endpoint.clone());
        let value = client.call(METHOD_DELEGATE, json!(task)).await?;
        parse_params(value).map_err(|e| {
            RpcError::agent_failure(format!("{} returned an invalid result: {}", card.endpoint, e.message))
        })
    }
}
