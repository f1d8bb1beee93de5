//! Agent-to-agent task delegation messages.

use serde::{Deserialize, Serialize};

use super::envelope::RpcError;
use super::mcp::{Citation, TableResult};

pub const METHOD_DELEGATE: &str = "a2a.delegate";
pub const METHOD_RESULT: &str = "a2a.result";
pub const METHOD_CARD: &str = "a2a.card";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TaskStatus {
    Pending,
    Running,
    Completed,
    Failed,
}

impl TaskStatus {
    /// Status only moves forward: pending, running, then a terminal state.
    pub fn can_advance_to(self, next: TaskStatus) -> bool {
        use TaskStatus::*;
        matches!(
            (self, next),
            (Pending, Running) | (Running, Completed) | (Running, Failed)
        )
    }

    pub fn is_terminal(self) -> bool {
        matches!(self, TaskStatus::Completed | TaskStatus::Failed)
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("task {task_id}: illegal status transition {from:?} -> {to:?}")]
pub struct TransitionError {
    pub task_id: String,
    pub from: TaskStatus,
    pub to: TaskStatus,
}

/// A unit of work handed from one agent to another.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct A2ATask {
    pub task_id: String,
    pub origin_agent: String,
    pub target_agent: String,
    pub session_id: String,
    pub question: String,
    /// Content references (image content hashes) the target may need.
    #[serde(default)]
    pub attachments: Vec<String>,
    pub status: TaskStatus,
}

impl A2ATask {
    pub fn new(
        origin_agent: impl Into<String>,
        target_agent: impl Into<String>,
        session_id: impl Into<String>,
        question: impl Into<String>,
    ) -> Self {
        Self {
            task_id: uuid::Uuid::new_v4().to_string(),
            origin_agent: origin_agent.into(),
            target_agent: target_agent.into(),
            session_id: session_id.into(),
            question: question.into(),
            attachments: Vec::new(),
            status: TaskStatus::Pending,
        }
    }

    pub fn with_attachments(mut self, attachments: Vec<String>) -> Self {
        self.attachments = attachments;
        self
    }

    pub fn advance(&mut self, next: TaskStatus) -> Result<(), TransitionError> {
        if !self.status.can_advance_to(next) {
            return Err(TransitionError {
                task_id: self.task_id.clone(),
                from: self.status,
                to: next,
            });
        }
        self.status = next;
        Ok(())
    }
}

/// The answer (or failure) an agent returns for a delegated task.
///
/// Exactly one of `answer` / `error` is populated; the constructors and the
/// deserializer both enforce this.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "A2AResultWire", into = "A2AResultWire")]
pub struct A2AResult {
    pub task_id: String,
    pub producing_agent: String,
    answer: Option<String>,
    error: Option<RpcError>,
    pub table: Option<TableResult>,
    pub citations: Vec<Citation>,
    /// Agent-side log lines, merged into the coordinator trace in order.
    pub log_lines: Vec<String>,
}

impl A2AResult {
    pub fn answered(
        task_id: impl Into<String>,
        producing_agent: impl Into<String>,
        answer: impl Into<String>,
    ) -> Self {
        Self {
            task_id: task_id.into(),
            producing_agent: producing_agent.into(),
            answer: Some(answer.into()),
            error: None,
            table: None,
            citations: Vec::new(),
            log_lines: Vec::new(),
        }
    }

    pub fn failed(
        task_id: impl Into<String>,
        producing_agent: impl Into<String>,
        error: RpcError,
    ) -> Self {
        Self {
            task_id: task_id.into(),
            producing_agent: producing_agent.into(),
            answer: None,
            error: Some(error),
            table: None,
            citations: Vec::new(),
            log_lines: Vec::new(),
        }
    }

    pub fn answer(&self) -> Option<&str> {
        self.answer.as_deref()
    }

    pub fn error(&self) -> Option<&RpcError> {
        self.error.as_ref()
    }

    pub fn is_ok(&self) -> bool {
        self.answer.is_some()
    }
}

#[derive(Serialize, Deserialize)]
struct A2AResultWire {
    task_id: String,
    producing_agent: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    answer: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    error: Option<RpcError>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    table: Option<TableResult>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    citations: Vec<Citation>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    log_lines: Vec<String>,
}

impl TryFrom<A2AResultWire> for A2AResult {
    type Error = String;

    fn try_from(w: A2AResultWire) -> Result<Self, Self::Error> {
        if w.answer.is_some() == w.error.is_some() {
            return Err("A2AResult must carry exactly one of answer, error".into());
        }
        Ok(Self {
            task_id: w.task_id,
            producing_agent: w.producing_agent,
            answer: w.answer,
            error: w.error,
            table: w.table,
            citations: w.citations,
            log_lines: w.log_lines,
        })
    }
}

impl From<A2AResult> for A2AResultWire {
    fn from(r: A2AResult) -> Self {
        Self {
            task_id: r.task_id,
            producing_agent: r.producing_agent,
            answer: r.answer,
            error: r.error,
            table: r.table,
            citations: r.citations,
            log_lines: r.log_lines,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn status_moves_forward_only() {
        let mut t = A2ATask::new("coord", "sql-1", "s", "q");
        assert!(t.advance(TaskStatus::Completed).is_err());
        t.advance(TaskStatus::Running).unwrap();
        t.advance(TaskStatus::Failed).unwrap();
        assert!(t.advance(TaskStatus::Running).is_err());
        assert!(t.status.is_terminal());
    }

    #[test]
    fn result_rejects_both_or_neither() {
        let both = json!({"task_id":"t","producing_agent":"a","answer":"x",
                          "error":{"code":-32000,"message":"m"}});
        assert!(serde_json::from_value::<A2AResult>(both).is_err());
        let neither = json!({"task_id":"t","producing_agent":"a"});
        assert!(serde_json::from_value::<A2AResult>(neither).is_err());

        let ok = A2AResult::answered("t", "a", "x");
        let back: A2AResult = serde_json::from_value(serde_json::to_value(&ok).unwrap()).unwrap();
        assert_eq!(back, ok);
    }
}
