//! Retrieval agent: chunked documents in a vector store, answers grounded
//! in the top-k passages.

mod chunk;

pub use chunk::{chunk_text, split_units, ChunkConfig};

use async_trait::async_trait;
use serde_json::{json, Value};
use std::sync::Arc;

use super::{question_arg, DomainAgent};
use crate::protocol::{
    Citation, InputSchema, OutputKind, ParamKind, ParamSpec, RpcError, ToolCall, ToolDescriptor,
    ToolOutput,
};
use crate::provider::{prompts, ModelProvider};
use crate::registry::AgentKind;
use crate::state::{StateError, VectorKey, VectorRecord, VectorStore};

pub const TOOL_IR_ANSWER: &str = "ir.answer";
pub const TOOL_IR_INGEST: &str = "ir.ingest";
pub const DEFAULT_TOP_K: usize = 4;
pub const EMPTY_CORPUS_ANSWER: &str = "No documents are available to answer this question.";

#[derive(Debug, Clone, PartialEq)]
pub struct IrAnswer {
    pub text: String,
    pub citations: Vec<Citation>,
}

pub struct IrAgent {
    provider: Arc<dyn ModelProvider>,
    store: Arc<VectorStore>,
    config: ChunkConfig,
}

fn state_err(e: StateError) -> RpcError {
    match e {
        StateError::InvalidArgument(m) => RpcError::invalid_params(m, Value::Null),
        other => RpcError::tool_failure(other.to_string()),
    }
}

impl IrAgent {
    pub fn new(provider: Arc<dyn ModelProvider>, store: Arc<VectorStore>) -> Self {
        Self {
            provider,
            store,
            config: ChunkConfig::default(),
        }
    }

    pub fn with_chunking(mut self, config: ChunkConfig) -> Self {
        self.config = config;
        self
    }

    pub fn store(&self) -> &VectorStore {
        &self.store
    }

    /// Replaces any chunks previously stored under `doc_id`. Returns the
    /// number of chunks written.
    pub fn ingest(&self, doc_id: &str, text: &str) -> Result<usize, RpcError> {
        if doc_id.trim().is_empty() {
            return Err(RpcError::invalid_params(
                "doc_id must be non-empty",
                json!({"parameter": "doc_id"}),
            ));
        }
        let chunks = chunk_text(text, self.config);
        if chunks.is_empty() {
            return Err(RpcError::invalid_params(
                "text must be non-empty",
                json!({"parameter": "text"}),
            ));
        }
        let mut records = Vec::with_capacity(chunks.len());
        for (i, chunk) in chunks.into_iter().enumerate() {
            let vector = self.provider.embed(&chunk).map_err(|e| e.to_rpc())?;
            records.push(VectorRecord {
                key: VectorKey::new(doc_id, i as u32),
                vector,
                payload: chunk,
            });
        }
        self.store.remove_doc(doc_id).map_err(state_err)?;
        let n = records.len();
        for r in records {
            self.store.add(r).map_err(state_err)?;
        }
        Ok(n)
    }

    pub async fn answer(&self, question: &str, k: usize) -> Result<IrAnswer, RpcError> {
        if self.store.is_empty() {
            return Ok(IrAnswer {
                text: EMPTY_CORPUS_ANSWER.into(),
                citations: Vec::new(),
            });
        }
        let query = self.provider.embed(question).map_err(|e| e.to_rpc())?;
        let hits = self.store.search(&query, k.max(1)).map_err(state_err)?;
        let mut passages = Vec::with_capacity(hits.len());
        let mut citations = Vec::with_capacity(hits.len());
        for hit in hits {
            if let Some(rec) = self.store.get(&hit.key) {
                passages.push((
                    format!("{}#{}", hit.key.doc_id, hit.key.chunk_index),
                    rec.payload,
                ));
                citations.push(Citation {
                    doc_id: hit.key.doc_id,
                    chunk_index: hit.key.chunk_index,
                });
            }
        }
        let text = self
            .provider
            .complete(&prompts::ir_answer(question, &passages))
            .await
            .map_err(|e| e.to_rpc())?;
        Ok(IrAnswer { text, citations })
    }
}

#[async_trait]
impl DomainAgent for IrAgent {
    fn kind(&self) -> AgentKind {
        AgentKind::IrAgent
    }

    fn tools(&self) -> Vec<ToolDescriptor> {
        vec![
            ToolDescriptor {
                name: TOOL_IR_ANSWER.into(),
                description: "Answer a question from the indexed engineering documents".into(),
                input_schema: InputSchema {
                    parameters: vec![
                        ParamSpec::required("question", ParamKind::String, "the question"),
                        ParamSpec::optional("k", ParamKind::Integer, "passages to retrieve"),
                    ],
                },
                output_kind: OutputKind::Text,
            },
            ToolDescriptor {
                name: TOOL_IR_INGEST.into(),
                description: "Chunk, embed and index a document, replacing earlier chunks".into(),
                input_schema: InputSchema {
                    parameters: vec![
                        ParamSpec::required("doc_id", ParamKind::String, "document id"),
                        ParamSpec::required("text", ParamKind::String, "document text"),
                    ],
                },
                output_kind: OutputKind::Text,
            },
        ]
    }

    fn delegate_tool(&self) -> &'static str {
        TOOL_IR_ANSWER
    }

    async fn call_tool(&self, call: &ToolCall) -> Result<ToolOutput, RpcError> {
        let args = &call.arguments;
        if call.tool_name == TOOL_IR_INGEST {
            let doc_id = args.get("doc_id").and_then(Value::as_str).unwrap_or_default();
            let text = args.get("text").and_then(Value::as_str).unwrap_or_default();
            let n = self.ingest(doc_id, text)?;
            return Ok(ToolOutput::text(format!("indexed {n} chunks for {doc_id}")));
        }
        let k = match args.get("k").and_then(Value::as_i64) {
            Some(k) if k < 1 => {
                return Err(RpcError::invalid_params(
                    "k must be positive",
                    json!({"parameter": "k"}),
                ))
            }
            Some(k) => k as usize,
            None => DEFAULT_TOP_K,
        };
        let answer = self.answer(question_arg(call)?, k).await?;
        Ok(ToolOutput {
            text: answer.text,
            citations: answer.citations,
            ..Default::default()
        })
    }
}
