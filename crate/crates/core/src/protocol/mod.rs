//! A2A and MCP message formats over JSON-RPC 2.0, independent of transport.

pub mod a2a;
mod envelope;
pub mod mcp;

pub use a2a::{A2AResult, A2ATask, TaskStatus};
pub use envelope::*;
pub use mcp::{
    ContextRequest,
    validate_tool_call, Citation, InputSchema, OutputKind, ParamKind, ParamSpec, TableResult,
    ToolCall, ToolDescriptor, ToolOutput,
};

use async_trait::async_trait;
use serde::de::DeserializeOwned;
use serde_json::Value;

/// Server side of a JSON-RPC endpoint.
///
/// Implementations return `RpcError::method_not_found` for methods they do
/// not serve.
#[async_trait]
pub trait RpcHandler: Send + Sync {
    async fn handle(&self, method: &str, params: Value) -> Result<Value, RpcError>;
}

/// Decodes one frame, routes it to `handler` and encodes the reply.
pub async fn serve_frame(handler: &dyn RpcHandler, bytes: &[u8]) -> Vec<u8> {
    let reply = match decode_envelope(bytes) {
        Err(e) => RpcEnvelope::failure(None, e),
        Ok(env) => match &env.payload {
            Payload::Request { method, params } => {
                let outcome = handler.handle(method, params.clone()).await;
                env.reply(outcome)
            }
            _ => RpcEnvelope::failure(
                env.id.clone(),
                RpcError::invalid_request("server accepts requests only"),
            ),
        },
    };
    encode_envelope(&reply)
}

/// Deserializes method params, mapping failures to `-32602`.
pub fn parse_params<T: DeserializeOwned>(params: Value) -> Result<T, RpcError> {
    serde_json::from_value(params).map_err(|e| {
        RpcError::invalid_params("invalid params", Value::String(e.to_string()))
    })
}

pub fn to_result_value<T: serde::Serialize>(value: &T) -> Result<Value, RpcError> {
    serde_json::to_value(value).map_err(|e| RpcError::internal(e.to_string()))
}
