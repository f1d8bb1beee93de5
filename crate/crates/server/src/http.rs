//! HTTP surfaces: the gateway's public API plus its `/rpc` endpoint, and
//! the `/rpc` endpoint every agent service exposes.

use axum::body::Bytes;
use axum::extract::{DefaultBodyLimit, FromRequest, Multipart, Path, Request, State};
use axum::http::{header, HeaderValue, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use base64::Engine;
use serde::{Deserialize, Serialize};
use serde_json::json;
use std::sync::Arc;
use tower_http::cors::CorsLayer;

use agentmesh_core::agents::AgentHost;
use agentmesh_core::gateway::{Gateway, GatewayError, ImageUpload, QueryRequest, MAX_IMAGE_BYTES};
use agentmesh_core::protocol::{serve_frame, RpcHandler};

/// Room for a maximum-size image in base64 plus JSON framing, so size
/// violations reach the gateway's own 413 check.
pub const BODY_LIMIT: usize = MAX_IMAGE_BYTES * 2;

/// JSON form of a query; `image.data` is base64.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct QueryBody {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub session_id: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub text: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub image: Option<ImageBody>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImageBody {
    pub media_type: String,
    pub data: String,
}

impl ImageBody {
    pub fn from_bytes(media_type: impl Into<String>, bytes: &[u8]) -> Self {
        Self {
            media_type: media_type.into(),
            data: base64::engine::general_purpose::STANDARD.encode(bytes),
        }
    }
}

fn error_response(status: StatusCode, message: impl Into<String>) -> Response {
    (status, Json(json!({ "error": message.into() }))).into_response()
}

fn bad_request(message: impl Into<String>) -> Response {
    error_response(StatusCode::BAD_REQUEST, message)
}

impl TryFrom<QueryBody> for QueryRequest {
    type Error = String;

    fn try_from(body: QueryBody) -> Result<Self, String> {
        let image = match body.image {
            None => None,
            Some(img) => Some(ImageUpload {
                bytes: base64::engine::general_purpose::STANDARD
                    .decode(img.data.as_bytes())
                    .map_err(|e| format!("image data is not valid base64: {e}"))?,
                media_type: img.media_type,
            }),
        };
        Ok(QueryRequest {
            session_id: body.session_id,
            text: body.text,
            image,
        })
    }
}

async fn multipart_request(mut form: Multipart) -> Result<QueryRequest, String> {
    let mut req = QueryRequest::default();
    while let Some(field) = form.next_field().await.map_err(|e| e.body_text())? {
        match field.name().unwrap_or_default() {
            "session_id" => req.session_id = Some(field.text().await.map_err(|e| e.body_text())?),
            "text" => req.text = Some(field.text().await.map_err(|e| e.body_text())?),
            "image" => {
                let media_type = field
                    .content_type()
                    .unwrap_or("application/octet-stream")
                    .to_string();
                let bytes = field.bytes().await.map_err(|e| e.body_text())?;
                req.image = Some(ImageUpload {
                    bytes: bytes.to_vec(),
                    media_type,
                });
            }
            other => return Err(format!("unexpected form field '{other}'")),
        }
    }
    Ok(req)
}

async fn query(State(gateway): State<Arc<Gateway>>, request: Request) -> Response {
    let is_multipart = request
        .headers()
        .get(header::CONTENT_TYPE)
        .and_then(|v| v.to_str().ok())
        .is_some_and(|ct| ct.starts_with("multipart/form-data"));
    let parsed = if is_multipart {
        match Multipart::from_request(request, &()).await {
            Ok(form) => multipart_request(form).await,
            Err(e) => Err(e.body_text()),
        }
    } else {
        match Bytes::from_request(request, &()).await {
            Ok(bytes) => serde_json::from_slice::<QueryBody>(&bytes)
                .map_err(|e| format!("malformed query body: {e}"))
                .and_then(QueryRequest::try_from),
            Err(e) => return e.into_response(),
        }
    };
    let req = match parsed {
        Ok(r) => r,
        Err(m) => return bad_request(m),
    };
    match gateway.handle_query(req).await {
        Ok(resp) => Json(resp).into_response(),
        Err(GatewayError::Orchestration(resp)) => (StatusCode::BAD_GATEWAY, Json(*resp)).into_response(),
        Err(e @ GatewayError::TooLarge { .. }) => error_response(StatusCode::PAYLOAD_TOO_LARGE, e.to_string()),
        Err(e) => bad_request(e.to_string()),
    }
}

async fn health(State(gateway): State<Arc<Gateway>>) -> Response {
    Json(gateway.health()).into_response()
}

async fn trace(State(gateway): State<Arc<Gateway>>, Path(id): Path<String>) -> Response {
    match gateway.trace(&id) {
        Ok(t) => Json(t).into_response(),
        Err(e) => error_response(StatusCode::NOT_FOUND, e.to_string()),
    }
}

async fn rpc<H: RpcHandler + 'static>(State(handler): State<Arc<H>>, body: Bytes) -> Response {
    let reply = serve_frame(handler.as_ref(), &body).await;
    (
        [(header::CONTENT_TYPE, HeaderValue::from_static("application/json"))],
        reply,
    )
        .into_response()
}

/// `POST /api/query`, `GET /api/health`, `GET /api/session/{id}/trace` and
/// `POST /rpc`, with CORS open to any origin so a browser UI served
/// elsewhere can call it.
pub fn gateway_router(gateway: Arc<Gateway>) -> Router {
    Router::new()
        .route("/api/query", post(query))
        .route("/api/health", get(health))
        .route("/api/session/{id}/trace", get(trace))
        .route("/rpc", post(rpc::<Gateway>))
        .layer(DefaultBodyLimit::max(BODY_LIMIT))
        .layer(CorsLayer::permissive())
        .with_state(gateway)
}

async fn agent_card(State(host): State<Arc<AgentHost>>) -> Response {
    Json(host.card().clone()).into_response()
}

/// `POST /rpc` for A2A delegation and MCP tools, `GET /health` for the card.
pub fn agent_router(host: Arc<AgentHost>) -> Router {
    Router::new()
        .route("/rpc", post(rpc::<AgentHost>))
        .route("/health", get(agent_card))
        .with_state(host)
}
