use async_trait::async_trait;
use serde_json::Value;
use std::sync::Arc;

use super::{question_arg, DomainAgent};
use crate::protocol::{
    InputSchema, OutputKind, ParamKind, ParamSpec, RpcError, ToolCall, ToolDescriptor, ToolOutput,
};
use crate::provider::{prompts, ModelProvider, ProviderError};
use crate::registry::AgentKind;
use crate::state::{ContextCache, StateError, StoredImage};

pub const TOOL_IMAGE_ANSWER: &str = "image.answer";
pub const NO_IMAGE_MESSAGE: &str = "no image in context";

/// Where the image agent fetches session images from: the gateway's
/// context cache, in-process or over `mcp.get_context`.
#[async_trait]
pub trait ContextSource: Send + Sync {
    /// The image with content hash `reference`, or the session's latest
    /// image when `reference` is `None`. `Ok(None)` when absent.
    async fn image(
        &self,
        session_id: &str,
        reference: Option<&str>,
    ) -> Result<Option<StoredImage>, RpcError>;
}

#[async_trait]
impl ContextSource for ContextCache {
    async fn image(
        &self,
        session_id: &str,
        reference: Option<&str>,
    ) -> Result<Option<StoredImage>, RpcError> {
        match self.read(session_id, |s| match reference {
            Some(hash) => s.image(hash).cloned(),
            None => s.latest_image().cloned(),
        }) {
            Ok(img) => Ok(img),
            Err(StateError::NotFound(_)) => Ok(None),
            Err(e) => Err(RpcError::internal(e.to_string())),
        }
    }
}

pub struct ImageAgent {
    provider: Arc<dyn ModelProvider>,
    context: Arc<dyn ContextSource>,
}

impl ImageAgent {
    pub fn new(provider: Arc<dyn ModelProvider>, context: Arc<dyn ContextSource>) -> Self {
        Self { provider, context }
    }

    /// Captions the most recent attachment (or the session's latest image)
    /// with the question embedded in the prompt.
    pub async fn answer(
        &self,
        question: &str,
        session_id: &str,
        attachments: &[String],
    ) -> Result<String, RpcError> {
        let image = self
            .context
            .image(session_id, attachments.last().map(String::as_str))
            .await?
            .ok_or_else(|| RpcError::agent_failure(NO_IMAGE_MESSAGE))?;
        self.provider
            .caption(&image, &prompts::caption(question))
            .await
            .map_err(|e| match e {
                ProviderError::NotFound(_) => RpcError::agent_failure(NO_IMAGE_MESSAGE),
                other => other.to_rpc(),
            })
    }
}

#[async_trait]
impl DomainAgent for ImageAgent {
    fn kind(&self) -> AgentKind {
        AgentKind::ImageAgent
    }

    fn tools(&self) -> Vec<ToolDescriptor> {
        vec![ToolDescriptor {
            name: TOOL_IMAGE_ANSWER.into(),
            description: "Answer a question about an image uploaded in this session".into(),
            input_schema: InputSchema {
                parameters: vec![
                    ParamSpec::required("question", ParamKind::String, "question about the image"),
                    ParamSpec::optional(
                        "attachments",
                        ParamKind::Array,
                        "image content hashes, most recent last",
                    ),
                ],
            },
            output_kind: OutputKind::ImageCaption,
        }]
    }

    fn delegate_tool(&self) -> &'static str {
        TOOL_IMAGE_ANSWER
    }

    async fn call_tool(&self, call: &ToolCall) -> Result<ToolOutput, RpcError> {
        let attachments: Vec<String> = call
            .arguments
            .get("attachments")
            .and_then(Value::as_array)
            .map(|a| a.iter().filter_map(Value::as_str).map(str::to_string).collect())
            .unwrap_or_default();
        let text = self
            .answer(question_arg(call)?, &call.session_id, &attachments)
            .await?;
        Ok(ToolOutput::text(text))
    }
}
