use async_trait::async_trait;
use base64::Engine;
use serde_json::{json, Value};
use std::time::Duration;

use agentmesh_core::provider::{
    ChatMessage, CompletionRequest, HashingEmbedder, ModelProvider, ProviderError, Role,
};
use agentmesh_core::state::StoredImage;

pub const DEFAULT_TIMEOUT: Duration = Duration::from_secs(30);
const CAPTION_MAX_TOKENS: u32 = 300;

#[derive(Debug, Clone, PartialEq)]
pub struct LiveConfig {
    /// Base URL of an OpenAI-compatible API, or the full
    /// `.../chat/completions` URL.
    pub endpoint: String,
    pub model: String,
    pub api_key: Option<String>,
    pub timeout: Duration,
}

impl LiveConfig {
    /// Reads `MODEL_ENDPOINT`, `MODEL_NAME` and optional `MODEL_API_KEY`.
    pub fn from_env() -> Result<Self, ProviderError> {
        let var = |name: &str| std::env::var(name).ok().filter(|v| !v.trim().is_empty());
        let endpoint = var("MODEL_ENDPOINT")
            .ok_or_else(|| ProviderError::InvalidArgument("MODEL_ENDPOINT is not set".into()))?;
        let model = var("MODEL_NAME")
            .ok_or_else(|| ProviderError::InvalidArgument("MODEL_NAME is not set".into()))?;
        Ok(Self {
            endpoint,
            model,
            api_key: var("MODEL_API_KEY"),
            timeout: DEFAULT_TIMEOUT,
        })
    }

    pub fn completions_url(&self) -> String {
        let base = self.endpoint.trim_end_matches('/');
        if base.ends_with("/chat/completions") {
            base.to_string()
        } else {
            format!("{base}/chat/completions")
        }
    }
}

/// Chat-completion client. Embeddings stay local (hashing embedder) so the
/// vector store is independent of the remote model.
pub struct LiveProvider {
    config: LiveConfig,
    http: reqwest::Client,
    embedder: HashingEmbedder,
}

fn role_str(role: Role) -> &'static str {
    match role {
        Role::System => "system",
        Role::User => "user",
        Role::Assistant => "assistant",
    }
}

fn wire_message(m: &ChatMessage) -> Value {
    json!({ "role": role_str(m.role), "content": m.content })
}

/// Completion body; temperature is forced to zero for purposes whose output
/// is parsed mechanically.
pub fn request_body(model: &str, request: &CompletionRequest) -> Value {
    let temperature = if request.purpose.wants_zero_temperature() {
        0.0
    } else {
        request.temperature
    };
    json!({
        "model": model,
        "messages": request.messages.iter().map(wire_message).collect::<Vec<_>>(),
        "temperature": temperature,
        "max_tokens": request.max_tokens,
    })
}

pub fn caption_body(model: &str, image: &StoredImage, prompt: &str) -> Value {
    let data = base64::engine::general_purpose::STANDARD.encode(image.bytes.as_slice());
    json!({
        "model": model,
        "messages": [{
            "role": "user",
            "content": [
                { "type": "text", "text": prompt },
                { "type": "image_url", "image_url": { "url": format!("data:{};base64,{data}", image.media_type) } },
            ],
        }],
        "max_tokens": CAPTION_MAX_TOKENS,
    })
}

/// Text of the first choice, which must be non-empty.
pub fn extract_text(body: &Value) -> Result<String, ProviderError> {
    let content = body
        .pointer("/choices/0/message/content")
        .and_then(Value::as_str)
        .map(str::trim)
        .unwrap_or_default();
    if content.is_empty() {
        return Err(ProviderError::Transport(
            "response has no completion text".into(),
        ));
    }
    Ok(content.to_string())
}

impl LiveProvider {
    pub fn new(config: LiveConfig) -> Result<Self, ProviderError> {
        let http = reqwest::Client::builder()
            .timeout(config.timeout)
            .build()
            .map_err(|e| ProviderError::Transport(e.to_string()))?;
        Ok(Self {
            config,
            http,
            embedder: HashingEmbedder::default(),
        })
    }

    pub fn config(&self) -> &LiveConfig {
        &self.config
    }

    async fn post(&self, body: Value) -> Result<String, ProviderError> {
        let mut req = self.http.post(self.config.completions_url()).json(&body);
        if let Some(key) = &self.config.api_key {
            req = req.bearer_auth(key);
        }
        let resp = req.send().await.map_err(|e| {
            if e.is_timeout() {
                ProviderError::Transport(format!(
                    "timed out after {:?}",
                    self.config.timeout
                ))
            } else {
                ProviderError::Transport(e.to_string())
            }
        })?;
        let status = resp.status();
        let text = resp
            .text()
            .await
            .map_err(|e| ProviderError::Transport(e.to_string()))?;
        if !status.is_success() {
            let snippet: String = text.chars().take(200).collect();
            return Err(ProviderError::Transport(format!("HTTP {status}: {snippet}")));
        }
        let body: Value = serde_json::from_str(&text)
            .map_err(|e| ProviderError::Transport(format!("invalid JSON response: {e}")))?;
        extract_text(&body)
    }
}

#[async_trait]
impl ModelProvider for LiveProvider {
    async fn complete(&self, request: &CompletionRequest) -> Result<String, ProviderError> {
        self.post(request_body(&self.config.model, request)).await
    }

    async fn caption(&self, image: &StoredImage, prompt: &str) -> Result<String, ProviderError> {
        self.post(caption_body(&self.config.model, image, prompt)).await
    }

    fn embed(&self, text: &str) -> Result<Vec<f64>, ProviderError> {
        self.embedder.embed(text)
    }

    fn embedding_dim(&self) -> usize {
        self.embedder.dim()
    }
}
