//! Golden traces and their replay: exact comparison of decomposition,
//! routing and log lines, plus standalone re-submission of every
//! sub-question with a fact-containment check against the composite run.

use async_trait::async_trait;
use serde::{Deserialize, Serialize};
use std::path::Path;

use crate::coordinator::Verdict;
use crate::gateway::{Gateway, GatewayError, QueryRequest, QueryResponse};
use crate::registry::AgentKind;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GoldenTrace {
    pub query_id: String,
    pub query: String,
    pub expected_sub_questions: Vec<String>,
    pub expected_decisions: Vec<AgentKind>,
    pub expected_log_lines: Vec<String>,
    /// Per sub-question, text spans that must appear both in the composite
    /// partial and in the standalone answer.
    #[serde(default)]
    pub facts: Vec<Vec<String>>,
}

impl GoldenTrace {
    pub fn is_consistent(&self) -> bool {
        self.expected_sub_questions.len() == self.expected_decisions.len()
            && (self.facts.is_empty() || self.facts.len() == self.expected_sub_questions.len())
    }
}

#[derive(Debug, thiserror::Error)]
pub enum GoldenError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("malformed golden trace {path}: {source}")]
    Parse {
        path: String,
        source: serde_json::Error,
    },
    #[error("golden trace {0} has inconsistent lengths")]
    Inconsistent(String),
}

pub fn load_file(path: &Path) -> Result<GoldenTrace, GoldenError> {
    let p = path.display().to_string();
    let text = std::fs::read_to_string(path).map_err(|source| GoldenError::Io {
        path: p.clone(),
        source,
    })?;
    let g: GoldenTrace =
        serde_json::from_str(&text).map_err(|source| GoldenError::Parse { path: p, source })?;
    if !g.is_consistent() {
        return Err(GoldenError::Inconsistent(g.query_id));
    }
    Ok(g)
}

/// Every `q*.json` in `dir`, ordered by query id.
pub fn load_dir(dir: &Path) -> Result<Vec<GoldenTrace>, GoldenError> {
    let io = |source| GoldenError::Io {
        path: dir.display().to_string(),
        source,
    };
    let mut out = Vec::new();
    for entry in std::fs::read_dir(dir).map_err(io)? {
        let path = entry.map_err(io)?.path();
        let name = path.file_name().and_then(|n| n.to_str()).unwrap_or_default();
        if name.starts_with('q') && name.ends_with(".json") {
            out.push(load_file(&path)?);
        }
    }
    out.sort_by(|a, b| a.query_id.cmp(&b.query_id));
    Ok(out)
}

/// Loads a golden file or every golden file in a directory.
pub fn load(path: &Path) -> Result<Vec<GoldenTrace>, GoldenError> {
    if path.is_dir() {
        load_dir(path)
    } else {
        Ok(vec![load_file(path)?])
    }
}

/// Anything that can answer a query in a fresh session.
#[async_trait]
pub trait QueryClient: Send + Sync {
    async fn query(&self, text: &str) -> Result<QueryResponse, String>;
}

#[async_trait]
impl QueryClient for Gateway {
    async fn query(&self, text: &str) -> Result<QueryResponse, String> {
        let req = QueryRequest {
            text: Some(text.to_string()),
            ..Default::default()
        };
        match self.handle_query(req).await {
            Ok(r) => Ok(r),
            Err(GatewayError::Orchestration(r)) => Ok(*r),
            Err(e) => Err(e.to_string()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ReplayReport {
    pub query_id: String,
    /// Composite-trace mismatches: decomposition, decisions, log lines.
    pub trace_mismatches: Vec<String>,
    /// Standalone sub-question mismatches: verdict and fact containment.
    pub standalone_mismatches: Vec<String>,
}

impl ReplayReport {
    pub fn trace_ok(&self) -> bool {
        self.trace_mismatches.is_empty()
    }

    pub fn standalone_ok(&self) -> bool {
        self.standalone_mismatches.is_empty()
    }

    pub fn passed(&self) -> bool {
        self.trace_ok() && self.standalone_ok()
    }
}

/// Wire form of a list entry, or `<missing>`.
fn show<T: Serialize>(v: Option<&T>) -> String {
    v.and_then(|v| serde_json::to_string(v).ok())
        .unwrap_or_else(|| "<missing>".into())
}

fn diff_lists<T: PartialEq + Serialize>(what: &str, expected: &[T], actual: &[T]) -> Vec<String> {
    let mut out = Vec::new();
    for i in 0..expected.len().max(actual.len()) {
        match (expected.get(i), actual.get(i)) {
            (Some(e), Some(a)) if e == a => {}
            (e, a) => {
                out.push(format!(
                    "{what}[{i}]:\n  - expected: {}\n  + actual:   {}",
                    show(e),
                    show(a)
                ));
                break;
            }
        }
    }
    if expected.len() != actual.len() {
        out.push(format!(
            "{what}: expected {} entries, got {}",
            expected.len(),
            actual.len()
        ));
    }
    out
}

pub fn compare_trace(golden: &GoldenTrace, response: &QueryResponse) -> Vec<String> {
    let t = &response.trace;
    let mut out = Vec::new();
    if !t.is_completed() {
        out.push(format!("trace failed: {}", t.final_answer));
    }
    out.extend(diff_lists("sub_questions", &golden.expected_sub_questions, &t.sub_questions));
    out.extend(diff_lists("decisions", &golden.expected_decisions, &t.decision_kinds()));
    out.extend(diff_lists("log_lines", &golden.expected_log_lines, &t.log_lines));
    if !t.flags.is_empty() {
        out.push(format!("unexpected trace flags: {:?}", t.flags));
    }
    out
}

pub async fn replay(client: &dyn QueryClient, golden: &GoldenTrace) -> ReplayReport {
    let mut report = ReplayReport {
        query_id: golden.query_id.clone(),
        ..Default::default()
    };
    let composite = match client.query(&golden.query).await {
        Ok(r) => r,
        Err(e) => {
            report.trace_mismatches.push(format!("query failed: {e}"));
            return report;
        }
    };
    report.trace_mismatches = compare_trace(golden, &composite);

    for (i, sub) in golden.expected_sub_questions.iter().enumerate() {
        let facts = golden.facts.get(i).map(Vec::as_slice).unwrap_or_default();
        let partial = composite
            .trace
            .partials
            .get(i)
            .and_then(|p| p.answer())
            .unwrap_or_default();
        for f in facts {
            if !partial.contains(f.as_str()) {
                report
                    .standalone_mismatches
                    .push(format!("sub-question {i}: composite partial lacks {f:?}"));
            }
        }
        let alone = match client.query(sub).await {
            Ok(r) => r,
            Err(e) => {
                report
                    .standalone_mismatches
                    .push(format!("sub-question {i}: standalone query failed: {e}"));
                continue;
            }
        };
        let verdict = alone.trace.verdict.as_ref().map(|v| v.verdict);
        if verdict != Some(Verdict::Simple) {
            report
                .standalone_mismatches
                .push(format!("sub-question {i}: standalone verdict {verdict:?}, expected SIMPLE"));
        }
        for f in facts {
            if !alone.answer.contains(f.as_str()) {
                report
                    .standalone_mismatches
                    .push(format!("sub-question {i}: standalone answer lacks {f:?}"));
            }
        }
    }
    report
}
