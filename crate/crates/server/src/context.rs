use async_trait::async_trait;
use serde_json::{json, Value};

use agentmesh_core::agents::ContextSource;
use agentmesh_core::protocol::mcp::METHOD_GET_CONTEXT;
use agentmesh_core::protocol::{parse_params, RpcError, INVALID_PARAMS};
use agentmesh_core::state::StoredImage;

use crate::client::RpcClient;

/// Reads session images from the gateway with `mcp.get_context`.
#[derive(Debug, Clone)]
pub struct HttpContextSource {
    client: RpcClient,
}

impl HttpContextSource {
    /// `rpc_url` is the gateway's JSON-RPC endpoint, e.g. `http://host:8080/rpc`.
    pub fn new(rpc_url: impl Into<String>) -> Self {
        Self {
            client: RpcClient::new(rpc_url),
        }
    }
}

fn is_not_found(e: &RpcError) -> bool {
    e.code == INVALID_PARAMS
        && e.data.as_ref().and_then(|d| d.get("reason")).and_then(Value::as_str) == Some("not_found")
}

#[async_trait]
impl ContextSource for HttpContextSource {
    async fn image(
        &self,
        session_id: &str,
        reference: Option<&str>,
    ) -> Result<Option<StoredImage>, RpcError> {
        let path = match reference {
            Some(hash) => format!("images.{hash}"),
            None => "images.latest".to_string(),
        };
        let params = json!({ "session_id": session_id, "path": path });
        match self.client.call(METHOD_GET_CONTEXT, params).await {
            Ok(v) => {
                let value = v.get("value").cloned().unwrap_or(Value::Null);
                parse_params(value).map(Some)
            }
            Err(e) if is_not_found(&e) => Ok(None),
            Err(e) => Err(e),
        }
    }
}
