//! Tool descriptors and tool calls exposed by agent MCP servers.

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::envelope::RpcError;

pub const METHOD_LIST_TOOLS: &str = "mcp.list_tools";
pub const METHOD_CALL_TOOL: &str = "mcp.call_tool";
pub const METHOD_GET_CONTEXT: &str = "mcp.get_context";
pub const METHOD_PUT_CONTEXT: &str = "mcp.put_context";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ParamKind {
    String,
    Integer,
    Number,
    Boolean,
    Array,
    Object,
}

impl ParamKind {
    pub fn admits(self, v: &Value) -> bool {
        match self {
            ParamKind::String => v.is_string(),
            ParamKind::Integer => v.is_i64() || v.is_u64(),
            ParamKind::Number => v.is_number(),
            ParamKind::Boolean => v.is_boolean(),
            ParamKind::Array => v.is_array(),
            ParamKind::Object => v.is_object(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamSpec {
    pub name: String,
    pub kind: ParamKind,
    #[serde(default)]
    pub required: bool,
    #[serde(default)]
    pub description: String,
}

impl ParamSpec {
    pub fn required(name: &str, kind: ParamKind, description: &str) -> Self {
        Self {
            name: name.into(),
            kind,
            required: true,
            description: description.into(),
        }
    }

    pub fn optional(name: &str, kind: ParamKind, description: &str) -> Self {
        Self {
            required: false,
            ..Self::required(name, kind, description)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct InputSchema {
    pub parameters: Vec<ParamSpec>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutputKind {
    Text,
    Table,
    ImageCaption,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ToolDescriptor {
    pub name: String,
    pub description: String,
    pub input_schema: InputSchema,
    pub output_kind: OutputKind,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ToolCall {
    pub tool_name: String,
    #[serde(default)]
    pub arguments: Value,
    pub session_id: String,
}

/// Checks a call against its tool's schema. Unknown extra arguments are
/// ignored; missing required or mistyped parameters fail with `-32602`
/// naming the parameter.
pub fn validate_tool_call(call: &ToolCall, descriptor: &ToolDescriptor) -> Result<(), RpcError> {
    if call.tool_name != descriptor.name {
        return Err(RpcError::invalid_params(
            "tool name does not match descriptor",
            json!({ "tool": call.tool_name, "expected": descriptor.name }),
        ));
    }
    let empty = serde_json::Map::new();
    let args = match &call.arguments {
        Value::Object(map) => map,
        Value::Null => &empty,
        _ => {
            return Err(RpcError::invalid_params(
                "arguments must be an object",
                json!({ "tool": call.tool_name }),
            ))
        }
    };
    for spec in &descriptor.input_schema.parameters {
        match args.get(&spec.name) {
            None | Some(Value::Null) if spec.required => {
                return Err(RpcError::invalid_params(
                    format!("missing required parameter '{}'", spec.name),
                    json!({ "parameter": spec.name }),
                ));
            }
            None | Some(Value::Null) => {}
            Some(v) if !spec.kind.admits(v) => {
                return Err(RpcError::invalid_params(
                    format!("parameter '{}' must be {:?}", spec.name, spec.kind),
                    json!({ "parameter": spec.name, "expected": spec.kind }),
                ));
            }
            Some(_) => {}
        }
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Citation {
    pub doc_id: String,
    pub chunk_index: u32,
}

/// Rows returned by a SQL tool, capped at a fixed row count.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableResult {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Value>>,
    pub truncated: bool,
}

/// What a tool returns over `mcp.call_tool`.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ToolOutput {
    pub text: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub table: Option<TableResult>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub citations: Vec<Citation>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub log_lines: Vec<String>,
}

impl ToolOutput {
    pub fn text(text: impl Into<String>) -> Self {
        Self {
            text: text.into(),
            ..Default::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContextRequest {
    pub session_id: String,
    pub path: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub value: Option<Value>,
}
