//! JSON-RPC 2.0 framing shared by A2A and MCP traffic.
//!
//! Frames are encoded canonically: object keys are emitted in sorted order
//! and optional members are omitted rather than written as `null` (except
//! `id`, which is always present on the wire).

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};
use std::fmt;

pub const JSONRPC_VERSION: &str = "2.0";

pub const PARSE_ERROR: i64 = -32700;
pub const INVALID_REQUEST: i64 = -32600;
pub const METHOD_NOT_FOUND: i64 = -32601;
pub const INVALID_PARAMS: i64 = -32602;
pub const INTERNAL_ERROR: i64 = -32603;

/// A domain agent failed to produce an answer.
pub const AGENT_FAILURE: i64 = -32000;
/// A tool raised while executing.
pub const TOOL_FAILURE: i64 = -32001;
/// The language or vision model backend failed.
pub const PROVIDER_FAILURE: i64 = -32002;

/// Request identifier. Clients mint UUIDv4 strings; integer ids from
/// foreign clients are accepted and echoed back unchanged.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(untagged)]
pub enum RequestId {
    Str(String),
    Num(i64),
}

impl RequestId {
    pub fn new_v4() -> Self {
        RequestId::Str(uuid::Uuid::new_v4().to_string())
    }

    fn to_value(&self) -> Value {
        match self {
            RequestId::Str(s) => Value::String(s.clone()),
            RequestId::Num(n) => Value::from(*n),
        }
    }
}

impl fmt::Display for RequestId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RequestId::Str(s) => f.write_str(s),
            RequestId::Num(n) => write!(f, "{n}"),
        }
    }
}

impl From<&str> for RequestId {
    fn from(s: &str) -> Self {
        RequestId::Str(s.to_string())
    }
}

impl From<i64> for RequestId {
    fn from(n: i64) -> Self {
        RequestId::Num(n)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, thiserror::Error)]
#[error("rpc error {code}: {message}")]
pub struct RpcError {
    pub code: i64,
    pub message: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub data: Option<Value>,
}

impl RpcError {
    pub fn new(code: i64, message: impl Into<String>) -> Self {
        Self {
            code,
            message: message.into(),
            data: None,
        }
    }

    pub fn with_data(mut self, data: Value) -> Self {
        self.data = if data.is_null() { None } else { Some(data) };
        self
    }

    pub fn parse_error(detail: impl Into<String>) -> Self {
        Self::new(PARSE_ERROR, "Parse error").with_data(Value::String(detail.into()))
    }

    pub fn invalid_request(detail: impl Into<String>) -> Self {
        Self::new(INVALID_REQUEST, "Invalid Request").with_data(Value::String(detail.into()))
    }

    pub fn method_not_found(method: &str) -> Self {
        Self::new(METHOD_NOT_FOUND, "Method not found")
            .with_data(serde_json::json!({ "method": method }))
    }

    pub fn invalid_params(message: impl Into<String>, data: Value) -> Self {
        Self::new(INVALID_PARAMS, message).with_data(data)
    }

    pub fn internal(detail: impl Into<String>) -> Self {
        Self::new(INTERNAL_ERROR, detail)
    }

    pub fn agent_failure(detail: impl Into<String>) -> Self {
        Self::new(AGENT_FAILURE, detail)
    }

    pub fn tool_failure(detail: impl Into<String>) -> Self {
        Self::new(TOOL_FAILURE, detail)
    }

    pub fn provider_failure(detail: impl Into<String>) -> Self {
        Self::new(PROVIDER_FAILURE, detail)
    }

    /// Whether the code lies in the range reserved for application errors.
    pub fn is_application_error(&self) -> bool {
        (-32099..=-32000).contains(&self.code)
    }
}

/// What an envelope carries. Exactly one variant per frame.
#[derive(Debug, Clone, PartialEq)]
pub enum Payload {
    Request { method: String, params: Value },
    Success(Value),
    Failure(RpcError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct RpcEnvelope {
    pub id: Option<RequestId>,
    pub payload: Payload,
}

impl RpcEnvelope {
    /// A request with a freshly minted UUIDv4 id.
    pub fn request(method: impl Into<String>, params: Value) -> Self {
        Self {
            id: Some(RequestId::new_v4()),
            payload: Payload::Request {
                method: method.into(),
                params,
            },
        }
    }

    pub fn success(id: Option<RequestId>, result: Value) -> Self {
        Self {
            id,
            payload: Payload::Success(result),
        }
    }

    pub fn failure(id: Option<RequestId>, error: RpcError) -> Self {
        Self {
            id,
            payload: Payload::Failure(error),
        }
    }

    /// Builds the response frame answering `self`, copying its id.
    pub fn reply(&self, outcome: Result<Value, RpcError>) -> Self {
        match outcome {
            Ok(v) => Self::success(self.id.clone(), v),
            Err(e) => Self::failure(self.id.clone(), e),
        }
    }

    pub fn method(&self) -> Option<&str> {
        match &self.payload {
            Payload::Request { method, .. } => Some(method),
            _ => None,
        }
    }

    pub fn is_request(&self) -> bool {
        matches!(self.payload, Payload::Request { .. })
    }

    /// Collapses a response frame into its outcome. Requests are not
    /// responses and map to `-32600`.
    pub fn into_outcome(self) -> Result<Value, RpcError> {
        match self.payload {
            Payload::Success(v) => Ok(v),
            Payload::Failure(e) => Err(e),
            Payload::Request { .. } => Err(RpcError::invalid_request(
                "expected a response frame, got a request",
            )),
        }
    }

    pub fn to_value(&self) -> Value {
        let mut obj = Map::new();
        obj.insert("jsonrpc".into(), Value::String(JSONRPC_VERSION.into()));
        obj.insert(
            "id".into(),
            self.id.as_ref().map_or(Value::Null, RequestId::to_value),
        );
        match &self.payload {
            Payload::Request { method, params } => {
                obj.insert("method".into(), Value::String(method.clone()));
                if !params.is_null() {
                    obj.insert("params".into(), params.clone());
                }
            }
            Payload::Success(result) => {
                obj.insert("result".into(), result.clone());
            }
            Payload::Failure(err) => {
                // RpcError serialization cannot fail: plain strings, ints and Values.
                obj.insert(
                    "error".into(),
                    serde_json::to_value(err).expect("RpcError serializes"),
                );
            }
        }
        Value::Object(obj)
    }
}

/// Serializes an envelope to canonical UTF-8 JSON.
pub fn encode_envelope(envelope: &RpcEnvelope) -> Vec<u8> {
    serde_json::to_vec(&envelope.to_value()).expect("JSON values always serialize")
}

/// Parses one frame. Never panics: syntactically broken input yields
/// `-32700`, anything that is JSON but not a valid single frame yields
/// `-32600`.
pub fn decode_envelope(bytes: &[u8]) -> Result<RpcEnvelope, RpcError> {
    let value: Value =
        serde_json::from_slice(bytes).map_err(|e| RpcError::parse_error(e.to_string()))?;
    envelope_from_value(value)
}

pub fn envelope_from_value(value: Value) -> Result<RpcEnvelope, RpcError> {
    let mut obj = match value {
        Value::Object(obj) => obj,
        Value::Array(_) => {
            return Err(RpcError::invalid_request("batch requests are not supported"))
        }
        _ => return Err(RpcError::invalid_request("frame must be a JSON object")),
    };

    match obj.get("jsonrpc") {
        Some(Value::String(v)) if v == JSONRPC_VERSION => {}
        Some(_) => return Err(RpcError::invalid_request("jsonrpc must be \"2.0\"")),
        None => return Err(RpcError::invalid_request("missing jsonrpc version")),
    }

    let id = match obj.remove("id") {
        None | Some(Value::Null) => None,
        Some(Value::String(s)) => Some(RequestId::Str(s)),
        Some(Value::Number(n)) => match n.as_i64() {
            Some(n) => Some(RequestId::Num(n)),
            None => return Err(RpcError::invalid_request("id must be a string or integer")),
        },
        Some(_) => return Err(RpcError::invalid_request("id must be a string or integer")),
    };

    let method = obj.remove("method");
    let result = obj.remove("result");
    let error = obj.remove("error");

    let payload = match (method, result, error) {
        (Some(method), None, None) => {
            let Value::String(method) = method else {
                return Err(RpcError::invalid_request("method must be a string"));
            };
            let params = match obj.remove("params") {
                None | Some(Value::Null) => Value::Null,
                Some(p @ (Value::Object(_) | Value::Array(_))) => p,
                Some(_) => {
                    return Err(RpcError::invalid_request(
                        "params must be an object or array",
                    ))
                }
            };
            Payload::Request { method, params }
        }
        (None, Some(result), None) => Payload::Success(result),
        (None, None, Some(error)) => Payload::Failure(parse_error_object(error)?),
        (None, None, None) => {
            return Err(RpcError::invalid_request(
                "frame has none of method, result, error",
            ))
        }
        _ => {
            return Err(RpcError::invalid_request(
                "frame must carry exactly one of method, result, error",
            ))
        }
    };

    Ok(RpcEnvelope { id, payload })
}

fn parse_error_object(value: Value) -> Result<RpcError, RpcError> {
    let Value::Object(mut obj) = value else {
        return Err(RpcError::invalid_request("error must be an object"));
    };
    let code = obj
        .get("code")
        .and_then(Value::as_i64)
        .ok_or_else(|| RpcError::invalid_request("error.code must be an integer"))?;
    let message = match obj.remove("message") {
        Some(Value::String(m)) => m,
        _ => return Err(RpcError::invalid_request("error.message must be a string")),
    };
    let data = obj.remove("data").filter(|d| !d.is_null());
    Ok(RpcError {
        code,
        message,
        data,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    fn round_trip(e: &RpcEnvelope) -> RpcEnvelope {
        decode_envelope(&encode_envelope(e)).unwrap()
    }

    #[test]
    fn request_round_trips_and_carries_version() {
        let e = RpcEnvelope {
            id: Some("1".into()),
            payload: Payload::Request {
                method: "a2a.delegate".into(),
                params: json!({"question": "q"}),
            },
        };
        let bytes = encode_envelope(&e);
        assert!(String::from_utf8_lossy(&bytes).contains(r#""jsonrpc":"2.0""#));
        assert_eq!(round_trip(&e), e);
    }

    #[test]
    fn success_and_error_round_trip() {
        let ok = RpcEnvelope::success(Some("1".into()), json!({"answer": "42"}));
        assert_eq!(round_trip(&ok), ok);
        let err = RpcEnvelope::failure(None, RpcError::parse_error("eof"));
        assert_eq!(round_trip(&err), err);
    }

    #[test]
    fn decodes_well_formed_request() {
        let e = decode_envelope(br#"{"jsonrpc":"2.0","id":1,"method":"mcp.call_tool","params":{}}"#)
            .unwrap();
        assert_eq!(e.method(), Some("mcp.call_tool"));
        assert_eq!(e.id, Some(RequestId::Num(1)));
    }

    #[test]
    fn garbage_is_parse_error() {
        assert_eq!(decode_envelope(b"{not json").unwrap_err().code, PARSE_ERROR);
        assert_eq!(decode_envelope(b"").unwrap_err().code, PARSE_ERROR);
        assert_eq!(decode_envelope(&[0xff, 0xfe]).unwrap_err().code, PARSE_ERROR);
    }

    #[test]
    fn structural_problems_are_invalid_request() {
        let cases: &[&[u8]] = &[
            br#"{"jsonrpc":"1.0","id":1,"method":"x"}"#,
            br#"{"id":1,"method":"x"}"#,
            br#"{"jsonrpc":"2.0","id":1,"result":1,"error":{"code":1,"message":"m"}}"#,
            br#"{"jsonrpc":"2.0","id":1}"#,
            br#"{"jsonrpc":"2.0","id":1.5,"method":"x"}"#,
            br#"{"jsonrpc":"2.0","id":[1],"method":"x"}"#,
            br#"{"jsonrpc":"2.0","id":1,"method":7}"#,
            br#"{"jsonrpc":"2.0","id":1,"method":"x","params":3}"#,
            br#"{"jsonrpc":"2.0","id":1,"error":{"code":"x","message":"m"}}"#,
            br#"[{"jsonrpc":"2.0","id":1,"method":"x"}]"#,
            br#""just a string""#,
        ];
        for c in cases {
            let err = decode_envelope(c).unwrap_err();
            assert_eq!(err.code, INVALID_REQUEST, "{}", String::from_utf8_lossy(c));
        }
    }

    #[test]
    fn reply_copies_request_id() {
        let req = RpcEnvelope::request("a2a.card", Value::Null);
        let resp = req.reply(Ok(json!(true)));
        assert_eq!(resp.id, req.id);
        assert!(matches!(req.id, Some(RequestId::Str(ref s)) if uuid::Uuid::parse_str(s).is_ok()));
    }

    #[test]
    fn application_error_range() {
        assert!(RpcError::agent_failure("x").is_application_error());
        assert!(RpcError::provider_failure("x").is_application_error());
        assert!(!RpcError::method_not_found("x").is_application_error());
    }
}
