use serde::{Deserialize, Serialize};

use super::parse::Verdict;
use crate::protocol::{A2AResult, RpcError};
use crate::pyfmt::{repr_list, repr_str};
use crate::registry::AgentKind;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComplexityVerdict {
    pub query: String,
    pub verdict: Verdict,
    pub raw_model_output: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoutingDecision {
    pub sub_question: String,
    pub agent_kind: AgentKind,
    pub raw_model_output: String,
}

/// Places where orchestration fell back to a default instead of following
/// the model or the chosen agent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "flag", rename_all = "snake_case")]
pub enum TraceFlag {
    ComplexityUnparsed,
    DecompositionUnparsed,
    RouteUnparsed { index: usize },
    ImageOverride { index: usize },
    DispatchFallback { index: usize, from: AgentKind, reason: String },
    SynthesisDegraded { reason: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TraceStatus {
    Completed,
    Failed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrchestrationTrace {
    pub query: String,
    pub verdict: Option<ComplexityVerdict>,
    pub sub_questions: Vec<String>,
    pub decisions: Vec<RoutingDecision>,
    pub partials: Vec<A2AResult>,
    pub final_answer: String,
    pub log_lines: Vec<String>,
    #[serde(default)]
    pub flags: Vec<TraceFlag>,
    pub status: TraceStatus,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<RpcError>,
}

impl OrchestrationTrace {
    pub fn new(query: impl Into<String>) -> Self {
        Self {
            query: query.into(),
            verdict: None,
            sub_questions: Vec::new(),
            decisions: Vec::new(),
            partials: Vec::new(),
            final_answer: String::new(),
            log_lines: Vec::new(),
            flags: Vec::new(),
            status: TraceStatus::Completed,
            error: None,
        }
    }

    pub fn decision_kinds(&self) -> Vec<AgentKind> {
        self.decisions.iter().map(|d| d.agent_kind).collect()
    }

    pub fn is_completed(&self) -> bool {
        self.status == TraceStatus::Completed
    }

    /// Equal-length sub-questions, decisions and partials, pairwise
    /// matching sub-questions.
    pub fn is_consistent(&self) -> bool {
        self.sub_questions.len() == self.decisions.len()
            && self.decisions.len() == self.partials.len()
            && self
                .sub_questions
                .iter()
                .zip(&self.decisions)
                .all(|(q, d)| *q == d.sub_question)
    }

    pub fn has_flag(&self, pred: impl Fn(&TraceFlag) -> bool) -> bool {
        self.flags.iter().any(pred)
    }

    pub(crate) fn log(&mut self, line: impl Into<String>) {
        self.log_lines.push(line.into());
    }
}

pub mod lines {
    use super::*;

    pub fn received_complex(query: &str) -> String {
        format!("[Agent Server] Received complex query for coordinator: {}", repr_str(query))
    }

    pub fn received_simple(query: &str) -> String {
        format!("[Agent Server] Received simple query for coordinator: {}", repr_str(query))
    }

    pub const DECOMPOSING: &str = "[Coordinator] Decomposing user query...";

    pub fn decomposed(items: &[String]) -> String {
        format!("[Coordinator] Decomposed into: {}", repr_list(items))
    }

    pub const DECOMPOSITION_FAILED: &str =
        "[Coordinator] Decomposition unusable, handling as a single query";

    pub fn routing(sub_question: &str) -> String {
        format!("[Coordinator] Routing sub-question: {}", repr_str(sub_question))
    }

    pub fn complex_decision(kind: AgentKind) -> String {
        format!("[Complex to Single Query Router] Decision for {kind}")
    }

    pub fn simple_decision(kind: AgentKind) -> String {
        format!("[Single Query Router] Decision for {kind}")
    }

    pub fn fallback(from: AgentKind, reason: &str) -> String {
        format!("[Coordinator] {from} unavailable ({reason}), falling back to GENERAL_AGENT")
    }

    pub const SYNTHESIZING: &str = "[Coordinator] Synthesizing final answer...";
}
