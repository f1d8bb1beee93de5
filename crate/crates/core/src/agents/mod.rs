//! The four domain agents and the harness that serves them over A2A/MCP.

mod general;
mod image;
pub mod ir;
pub mod sql;

pub use general::{GeneralAgent, TOOL_GENERAL_ANSWER};
pub use image::{ContextSource, ImageAgent, NO_IMAGE_MESSAGE, TOOL_IMAGE_ANSWER};
pub use ir::{IrAgent, TOOL_IR_ANSWER, TOOL_IR_INGEST};
pub use sql::{SqlAgent, TOOL_ANSWER as TOOL_SQL_ANSWER};

pub type BridgeDbHandle = std::sync::Arc<sql::BridgeDb>;

use async_trait::async_trait;
use serde::Deserialize;
use serde_json::{json, Value};
use std::collections::HashMap;
use std::sync::{Arc, Mutex};

use crate::protocol::a2a::{METHOD_CARD, METHOD_DELEGATE, METHOD_RESULT};
use crate::protocol::mcp::{METHOD_CALL_TOOL, METHOD_LIST_TOOLS};
use crate::protocol::{
    parse_params, to_result_value, validate_tool_call, A2AResult, A2ATask, RpcError, RpcHandler,
    TaskStatus, ToolCall, ToolDescriptor, ToolOutput,
};
use crate::registry::{AgentCard, AgentKind};

#[async_trait]
pub trait DomainAgent: Send + Sync {
    fn kind(&self) -> AgentKind;

    fn tools(&self) -> Vec<ToolDescriptor>;

    /// Tool that answers an `a2a.delegate` task. It must accept
    /// `question` and `attachments` arguments.
    fn delegate_tool(&self) -> &'static str;

    /// Runs a tool whose call has already been validated against its
    /// descriptor.
    async fn call_tool(&self, call: &ToolCall) -> Result<ToolOutput, RpcError>;
}

pub(crate) fn question_arg(call: &ToolCall) -> Result<&str, RpcError> {
    call.arguments
        .get("question")
        .and_then(Value::as_str)
        .filter(|q| !q.trim().is_empty())
        .ok_or_else(|| {
            RpcError::invalid_params("question must be a non-empty string", json!({"parameter": "question"}))
        })
}

/// Serves one agent: answers A2A delegations by invoking its local tools
/// and exposes those tools over MCP.
pub struct AgentHost {
    card: AgentCard,
    agent: Arc<dyn DomainAgent>,
    tools: Vec<ToolDescriptor>,
    results: Mutex<HashMap<String, A2AResult>>,
}

#[derive(Deserialize)]
struct ResultQuery {
    task_id: String,
}

impl AgentHost {
    pub fn new(agent_id: impl Into<String>, endpoint: impl Into<String>, agent: Arc<dyn DomainAgent>) -> Self {
        let card = AgentCard::new(agent_id, agent.kind(), endpoint);
        let tools = agent.tools();
        Self {
            card,
            agent,
            tools,
            results: Mutex::new(HashMap::new()),
        }
    }

    pub fn card(&self) -> &AgentCard {
        &self.card
    }

    pub fn set_endpoint(&mut self, endpoint: impl Into<String>) {
        self.card.endpoint = endpoint.into();
    }

    fn descriptor(&self, name: &str) -> Option<&ToolDescriptor> {
        self.tools.iter().find(|t| t.name == name)
    }

    pub async fn call_tool(&self, call: &ToolCall) -> Result<ToolOutput, RpcError> {
        let descriptor = self.descriptor(&call.tool_name).ok_or_else(|| {
            RpcError::invalid_params(
                format!("unknown tool '{}'", call.tool_name),
                json!({"tool": call.tool_name}),
            )
        })?;
        validate_tool_call(call, descriptor)?;
        self.agent.call_tool(call).await
    }

    pub async fn delegate(&self, mut task: A2ATask) -> Result<A2AResult, RpcError> {
        if task.status != TaskStatus::Pending {
            return Err(RpcError::invalid_params(
                "delegated tasks must be pending",
                json!({"task_id": task.task_id, "status": task.status}),
            ));
        }
        if self
            .results
            .lock()
            .unwrap_or_else(|e| e.into_inner())
            .contains_key(&task.task_id)
        {
            return Err(RpcError::invalid_params(
                "duplicate task_id",
                json!({"task_id": task.task_id}),
            ));
        }
        task.advance(TaskStatus::Running)
            .map_err(|e| RpcError::internal(e.to_string()))?;
        let call = ToolCall {
            tool_name: self.agent.delegate_tool().to_string(),
            arguments: json!({
                "question": task.question,
                "attachments": task.attachments,
            }),
            session_id: task.session_id.clone(),
        };
        let result = match self.call_tool(&call).await {
            Ok(out) => {
                task.advance(TaskStatus::Completed).ok();
                let mut r = A2AResult::answered(&task.task_id, &self.card.agent_id, out.text);
                r.table = out.table;
                r.citations = out.citations;
                r.log_lines = out.log_lines;
                r
            }
            Err(e) => {
                task.advance(TaskStatus::Failed).ok();
                A2AResult::failed(&task.task_id, &self.card.agent_id, e)
            }
        };
        self.results
            .lock()
            .unwrap_or_else(|e| e.into_inner())
            .insert(task.task_id.clone(), result.clone());
        Ok(result)
    }
}

#[async_trait]
impl RpcHandler for AgentHost {
    async fn handle(&self, method: &str, params: Value) -> Result<Value, RpcError> {
        match method {
            METHOD_CARD => to_result_value(&self.card),
            METHOD_DELEGATE => {
                let task: A2ATask = parse_params(params)?;
                to_result_value(&self.delegate(task).await?)
            }
            METHOD_RESULT => {
                let q: ResultQuery = parse_params(params)?;
                let results = self.results.lock().unwrap_or_else(|e| e.into_inner());
                let r = results.get(&q.task_id).ok_or_else(|| {
                    RpcError::invalid_params("unknown task_id", json!({"task_id": q.task_id}))
                })?;
                to_result_value(r)
            }
            METHOD_LIST_TOOLS => Ok(json!({ "tools": self.tools })),
            METHOD_CALL_TOOL => {
                let call: ToolCall = parse_params(params)?;
                to_result_value(&self.call_tool(&call).await?)
            }
            other => Err(RpcError::method_not_found(other)),
        }
    }
}
