use async_trait::async_trait;
use std::sync::Arc;

use super::{question_arg, DomainAgent};
use crate::protocol::{
    InputSchema, OutputKind, ParamKind, ParamSpec, RpcError, ToolCall, ToolDescriptor, ToolOutput,
};
use crate::provider::{prompts, ModelProvider};
use crate::registry::AgentKind;

pub const TOOL_GENERAL_ANSWER: &str = "general.answer";

/// Open-domain answers straight from the model; also the fallback route.
pub struct GeneralAgent {
    provider: Arc<dyn ModelProvider>,
}

impl GeneralAgent {
    pub fn new(provider: Arc<dyn ModelProvider>) -> Self {
        Self { provider }
    }

    pub async fn answer(&self, question: &str) -> Result<String, RpcError> {
        self.provider
            .complete(&prompts::general_answer(question))
            .await
            .map_err(|e| e.to_rpc())
    }
}

#[async_trait]
impl DomainAgent for GeneralAgent {
    fn kind(&self) -> AgentKind {
        AgentKind::GeneralAgent
    }

    fn tools(&self) -> Vec<ToolDescriptor> {
        vec![ToolDescriptor {
            name: TOOL_GENERAL_ANSWER.into(),
            description: "Answer an open-domain question".into(),
            input_schema: InputSchema {
                parameters: vec![ParamSpec::required("question", ParamKind::String, "the question")],
            },
            output_kind: OutputKind::Text,
        }]
    }

    fn delegate_tool(&self) -> &'static str {
        TOOL_GENERAL_ANSWER
    }

    async fn call_tool(&self, call: &ToolCall) -> Result<ToolOutput, RpcError> {
        Ok(ToolOutput::text(self.answer(question_arg(call)?).await?))
    }
}
