use async_trait::async_trait;
use std::collections::{HashMap, HashSet};
use std::sync::{Arc, Mutex};

use crate::agents::AgentHost;
use crate::protocol::{A2AResult, A2ATask, RpcError};
use crate::registry::AgentCard;

/// How the coordinator reaches an agent. An `Err` is a transport failure
/// (the agent could not be reached or replied garbage); agent-side failures
/// arrive as an `A2AResult` carrying an error.
#[async_trait]
pub trait AgentTransport: Send + Sync {
    async fn delegate(&self, card: &AgentCard, task: A2ATask) -> Result<A2AResult, RpcError>;
}

/// Calls agent hosts in the same process, keyed by endpoint. Endpoints can
/// be taken offline to exercise failure handling.
#[derive(Default)]
pub struct InProcessTransport {
    hosts: Mutex<HashMap<String, Arc<AgentHost>>>,
    offline: Mutex<HashSet<String>>,
}

impl InProcessTransport {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn attach(&self, host: Arc<AgentHost>) {
        let endpoint = host.card().endpoint.clone();
        self.hosts
            .lock()
            .unwrap_or_else(|e| e.into_inner())
            .insert(endpoint, host);
    }

    pub fn set_offline(&self, endpoint: &str, offline: bool) {
        let mut set = self.offline.lock().unwrap_or_else(|e| e.into_inner());
        if offline {
            set.insert(endpoint.to_string());
        } else {
            set.remove(endpoint);
        }
    }
}

#[async_trait]
impl AgentTransport for InProcessTransport {
    async fn delegate(&self, card: &AgentCard, task: A2ATask) -> Result<A2AResult, RpcError> {
        if self
            .offline
            .lock()
            .unwrap_or_else(|e| e.into_inner())
            .contains(&card.endpoint)
        {
            return Err(RpcError::agent_failure(format!(
                "{} is unreachable",
                card.endpoint
            )));
        }
        let host = self
            .hosts
            .lock()
            .unwrap_or_else(|e| e.into_inner())
            .get(&card.endpoint)
            .cloned()
            .ok_or_else(|| RpcError::agent_failure(format!("no agent at {}", card.endpoint)))?;
        host.delegate(task).await
    }
}
