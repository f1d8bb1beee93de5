//! Language and vision model access behind one interface.
//!
//! Two implementations exist: [`ScriptedProvider`] replays canned
//! completions keyed by purpose and normalized subject, and the HTTP
//! chat-completion client in the server crate.

mod embed;
pub mod prompts;
mod scripted;

pub use embed::{cosine, l2_norm, HashingEmbedder, DEFAULT_DIM};
pub use scripted::{normalize_key, ScriptEntry, ScriptError, ScriptedProvider};

use async_trait::async_trait;
use serde::{Deserialize, Serialize};
use std::fmt;

use crate::protocol::RpcError;
use crate::state::StoredImage;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    System,
    User,
    Assistant,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChatMessage {
    pub role: Role,
    pub content: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub image_ref: Option<String>,
}

impl ChatMessage {
    pub fn system(content: impl Into<String>) -> Self {
        Self {
            role: Role::System,
            content: content.into(),
            image_ref: None,
        }
    }

    pub fn user(content: impl Into<String>) -> Self {
        Self {
            role: Role::User,
            content: content.into(),
            image_ref: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Purpose {
    Complexity,
    Decompose,
    Route,
    SqlGenerate,
    IrAnswer,
    GeneralAnswer,
    Caption,
    Synthesize,
}

impl Purpose {
    pub fn as_str(self) -> &'static str {
        match self {
            Purpose::Complexity => "complexity",
            Purpose::Decompose => "decompose",
            Purpose::Route => "route",
            Purpose::SqlGenerate => "sql_generate",
            Purpose::IrAnswer => "ir_answer",
            Purpose::GeneralAnswer => "general_answer",
            Purpose::Caption => "caption",
            Purpose::Synthesize => "synthesize",
        }
    }

    /// Purposes whose output is parsed mechanically and must be as
    /// repeatable as the backend allows.
    pub fn wants_zero_temperature(self) -> bool {
        matches!(
            self,
            Purpose::Complexity | Purpose::Route | Purpose::SqlGenerate
        )
    }
}

impl fmt::Display for Purpose {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompletionRequest {
    pub messages: Vec<ChatMessage>,
    pub purpose: Purpose,
    pub max_tokens: u32,
    pub temperature: f64,
    /// The query or sub-question this completion is about. Scripted
    /// providers key their lookup on it; live providers ignore it.
    pub subject: String,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ProviderError {
    #[error("model provider failure: {0}")]
    Transport(String),
    #[error("script miss: no scripted {purpose} response for key '{key}'")]
    ScriptMiss { purpose: Purpose, key: String },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("not found: {0}")]
    NotFound(String),
}

impl ProviderError {
    pub fn to_rpc(&self) -> RpcError {
        match self {
            ProviderError::ScriptMiss { purpose, key } => RpcError::provider_failure(self.to_string())
                .with_data(serde_json::json!({ "script_miss": { "purpose": purpose, "key": key } })),
            ProviderError::Transport(_) => RpcError::provider_failure(self.to_string()),
            ProviderError::InvalidArgument(_) => {
                RpcError::invalid_params(self.to_string(), serde_json::Value::Null)
            }
            ProviderError::NotFound(_) => RpcError::agent_failure(self.to_string()),
        }
    }
}

#[async_trait]
pub trait ModelProvider: Send + Sync {
    async fn complete(&self, request: &CompletionRequest) -> Result<String, ProviderError>;

    async fn caption(&self, image: &StoredImage, prompt: &str) -> Result<String, ProviderError>;

    /// Unit-norm embedding of constant dimension.
    fn embed(&self, text: &str) -> Result<Vec<f64>, ProviderError>;

    fn embedding_dim(&self) -> usize;
}
