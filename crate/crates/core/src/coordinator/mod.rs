//! Query orchestration: complexity assessment, decomposition, routing,
//! dispatch over A2A and synthesis, recorded in an [`OrchestrationTrace`].

mod parse;
mod trace;
mod transport;

pub use parse::{parse_route, parse_sub_questions, parse_verdict, Verdict};
pub use trace::{
    lines, ComplexityVerdict, OrchestrationTrace, RoutingDecision, TraceFlag, TraceStatus,
};
pub use transport::{AgentTransport, InProcessTransport};

use serde_json::json;
use std::collections::HashMap;
use std::sync::{Arc, Mutex};
use tokio::task::JoinSet;

use crate::protocol::{A2AResult, A2ATask, RpcError};
use crate::provider::prompts::{self, PartialInput};
use crate::provider::ModelProvider;
use crate::registry::{AgentKind, Registry};

pub const DEFAULT_COORDINATOR_ID: &str = "coordinator";

#[derive(Debug, Clone)]
pub struct CoordinatorConfig {
    pub agent_id: String,
    /// Dispatch all sub-questions concurrently. Log lines are still emitted
    /// in decomposition order.
    pub parallel_dispatch: bool,
}

impl Default for CoordinatorConfig {
    fn default() -> Self {
        Self {
            agent_id: DEFAULT_COORDINATOR_ID.into(),
            parallel_dispatch: false,
        }
    }
}

/// Outcome of one dispatch. `fallback` names the kind that was abandoned
/// and why, when the answer came from GENERAL_AGENT instead.
#[derive(Debug, Clone, PartialEq)]
pub struct Dispatched {
    pub result: A2AResult,
    pub fallback: Option<(AgentKind, String)>,
}

#[derive(Clone)]
struct Dispatcher {
    agent_id: String,
    registry: Arc<Registry>,
    transport: Arc<dyn AgentTransport>,
}

impl Dispatcher {
    async fn try_kind(
        &self,
        kind: AgentKind,
        question: &str,
        session_id: &str,
        attachments: &[String],
    ) -> Result<A2AResult, String> {
        let cards = self.registry.lookup_by_kind(kind);
        if cards.is_empty() {
            return Err(format!("no healthy {kind} registered"));
        }
        let mut reasons = Vec::new();
        for card in cards {
            let mut last = None;
            for _ in 0..2 {
                let task = A2ATask::new(&self.agent_id, &card.agent_id, session_id, question)
                    .with_attachments(attachments.to_vec());
                match self.transport.delegate(&card, task).await {
                    Ok(result) => {
                        let _ = self.registry.mark_health(&card.agent_id, true);
                        return Ok(result);
                    }
                    Err(e) => last = Some(e),
                }
            }
            let _ = self.registry.mark_health(&card.agent_id, false);
            let msg = last.map(|e| e.message).unwrap_or_default();
            reasons.push(format!("{}: {msg}", card.agent_id));
        }
        Err(reasons.join("; "))
    }

    async fn dispatch(
        &self,
        kind: AgentKind,
        question: &str,
        session_id: &str,
        attachments: &[String],
    ) -> Dispatched {
        let first = match self.try_kind(kind, question, session_id, attachments).await {
            Ok(result) => {
                return Dispatched {
                    result,
                    fallback: None,
                }
            }
            Err(reason) => reason,
        };
        let failed = |detail: String| {
            A2AResult::failed(
                uuid::Uuid::new_v4().to_string(),
                &self.agent_id,
                RpcError::agent_failure(detail).with_data(json!({ "agent_kind": kind })),
            )
        };
        if kind == AgentKind::GeneralAgent {
            return Dispatched {
                result: failed(first),
                fallback: None,
            };
        }
        let result = match self
            .try_kind(AgentKind::GeneralAgent, question, session_id, attachments)
            .await
        {
            Ok(result) => result,
            Err(second) => failed(format!("{first}; fallback {second}")),
        };
        Dispatched {
            result,
            fallback: Some((kind, first)),
        }
    }
}

pub struct Coordinator {
    provider: Arc<dyn ModelProvider>,
    dispatcher: Dispatcher,
    config: CoordinatorConfig,
    sessions: Mutex<HashMap<String, Arc<tokio::sync::Mutex<()>>>>,
}

fn user_facing(err: &RpcError) -> String {
    format!("Sorry, the request could not be completed ({}).", err.message)
}

fn require_text(what: &str, text: &str) -> Result<(), RpcError> {
    if text.trim().is_empty() {
        Err(RpcError::invalid_params(
            format!("{what} must be non-empty"),
            json!({ "parameter": what }),
        ))
    } else {
        Ok(())
    }
}

impl Coordinator {
    pub fn new(
        provider: Arc<dyn ModelProvider>,
        registry: Arc<Registry>,
        transport: Arc<dyn AgentTransport>,
        config: CoordinatorConfig,
    ) -> Self {
        Self {
            provider,
            dispatcher: Dispatcher {
                agent_id: config.agent_id.clone(),
                registry,
                transport,
            },
            config,
            sessions: Mutex::new(HashMap::new()),
        }
    }

    pub fn registry(&self) -> &Arc<Registry> {
        &self.dispatcher.registry
    }

    pub fn agent_id(&self) -> &str {
        &self.config.agent_id
    }

    /// The verdict, and whether it was parsed (rather than defaulted).
    pub async fn assess_complexity(
        &self,
        query: &str,
    ) -> Result<(ComplexityVerdict, bool), RpcError> {
        require_text("query", query)?;
        let raw = self
            .provider
            .complete(&prompts::complexity(query))
            .await
            .map_err(|e| e.to_rpc())?;
        let parsed = parse_verdict(&raw);
        Ok((
            ComplexityVerdict {
                query: query.to_string(),
                verdict: parsed.unwrap_or(Verdict::Simple),
                raw_model_output: raw,
            },
            parsed.is_some(),
        ))
    }

    /// `Ok(None)` when the reply holds no usable list of two or more
    /// sub-questions.
    pub async fn decompose(&self, query: &str) -> Result<Option<Vec<String>>, RpcError> {
        require_text("query", query)?;
        let raw = self
            .provider
            .complete(&prompts::decompose(query))
            .await
            .map_err(|e| e.to_rpc())?;
        Ok(parse_sub_questions(&raw))
    }

    /// Never fails: unparseable replies and provider errors both route to
    /// GENERAL_AGENT, reported by the `false` in the result.
    pub async fn route(&self, sub_question: &str) -> (RoutingDecision, bool) {
        let raw = match self.provider.complete(&prompts::route(sub_question)).await {
            Ok(raw) => raw,
            Err(e) => format!("<provider error: {e}>"),
        };
        let parsed = parse_route(&raw);
        (
            RoutingDecision {
                sub_question: sub_question.to_string(),
                agent_kind: parsed.unwrap_or(AgentKind::GeneralAgent),
                raw_model_output: raw,
            },
            parsed.is_some(),
        )
    }

    pub async fn dispatch(
        &self,
        decision: &RoutingDecision,
        session_id: &str,
        attachments: &[String],
    ) -> Dispatched {
        self.dispatcher
            .dispatch(decision.agent_kind, &decision.sub_question, session_id, attachments)
            .await
    }

    /// The synthesized answer, or a labelled concatenation plus the reason
    /// when the model call fails.
    pub async fn synthesize(
        &self,
        query: &str,
        sub_questions: &[String],
        partials: &[A2AResult],
    ) -> (String, Option<String>) {
        let inputs: Vec<PartialInput<'_>> = sub_questions
            .iter()
            .zip(partials)
            .map(|(q, p)| PartialInput {
                sub_question: q,
                answer: p.answer().ok_or_else(|| {
                    p.error().map(|e| e.message.clone()).unwrap_or_default()
                }),
            })
            .collect();
        match self.provider.complete(&prompts::synthesize(query, &inputs)).await {
            Ok(text) => (text, None),
            Err(e) => {
                let text = inputs
                    .iter()
                    .map(|p| match &p.answer {
                        Ok(a) => format!("{}\n{a}", p.sub_question),
                        Err(reason) => format!("{}\nunavailable ({reason})", p.sub_question),
                    })
                    .collect::<Vec<_>>()
                    .join("\n\n");
                (text, Some(e.to_string()))
            }
        }
    }

    fn session_lock(&self, session_id: &str) -> Arc<tokio::sync::Mutex<()>> {
        let mut map = self.sessions.lock().unwrap_or_else(|e| e.into_inner());
        map.retain(|_, lock| Arc::strong_count(lock) > 1);
        map.entry(session_id.to_string()).or_default().clone()
    }

    /// Runs the whole pipeline for one query. `images` are the content
    /// hashes of the session's images, oldest first; without any, IMAGE_AGENT
    /// decisions are redirected to GENERAL_AGENT.
    pub async fn orchestrate(
        &self,
        query: &str,
        session_id: &str,
        images: &[String],
    ) -> OrchestrationTrace {
        let lock = self.session_lock(session_id);
        let _guard = lock.lock().await;
        let mut trace = OrchestrationTrace::new(query);
        if let Err(e) = self.run(&mut trace, query, session_id, images).await {
            trace.final_answer = user_facing(&e);
            trace.status = TraceStatus::Failed;
            trace.error = Some(e);
        }
        trace
    }

    async fn run(
        &self,
        trace: &mut OrchestrationTrace,
        query: &str,
        session_id: &str,
        images: &[String],
    ) -> Result<(), RpcError> {
        let (verdict, parsed) = self.assess_complexity(query).await?;
        if !parsed {
            trace.flags.push(TraceFlag::ComplexityUnparsed);
        }
        let complex = verdict.verdict == Verdict::Complex;
        trace.verdict = Some(verdict);

        if !complex {
            trace.log(lines::received_simple(query));
            return self.run_simple(trace, query, session_id, images).await;
        }

        trace.log(lines::received_complex(query));
        trace.log(lines::DECOMPOSING);
        let Some(sub_questions) = self.decompose(query).await? else {
            trace.flags.push(TraceFlag::DecompositionUnparsed);
            trace.log(lines::DECOMPOSITION_FAILED);
            return self.run_simple(trace, query, session_id, images).await;
        };
        trace.log(lines::decomposed(&sub_questions));
        trace.sub_questions = sub_questions.clone();

        let mut decisions = Vec::with_capacity(sub_questions.len());
        for (index, q) in sub_questions.iter().enumerate() {
            decisions.push(self.decide(trace, index, q, images).await);
        }

        let dispatched = if self.config.parallel_dispatch {
            self.dispatch_all(&decisions, session_id, images).await
        } else {
            let mut out = Vec::with_capacity(decisions.len());
            for d in &decisions {
                out.push(self.dispatch(d, session_id, images).await);
            }
            out
        };

        for (index, (decision, d)) in decisions.into_iter().zip(dispatched).enumerate() {
            trace.log(lines::routing(&decision.sub_question));
            trace.log(lines::complex_decision(decision.agent_kind));
            self.record(trace, index, decision, d);
        }

        trace.log(lines::SYNTHESIZING);
        let (answer, degraded) = self
            .synthesize(query, &trace.sub_questions, &trace.partials)
            .await;
        if let Some(reason) = degraded {
            trace.flags.push(TraceFlag::SynthesisDegraded { reason });
        }
        trace.final_answer = answer;
        Ok(())
    }

    async fn run_simple(
        &self,
        trace: &mut OrchestrationTrace,
        query: &str,
        session_id: &str,
        images: &[String],
    ) -> Result<(), RpcError> {
        trace.sub_questions = vec![query.to_string()];
        let decision = self.decide(trace, 0, query, images).await;
        trace.log(lines::simple_decision(decision.agent_kind));
        let d = self.dispatch(&decision, session_id, images).await;
        self.record(trace, 0, decision, d);
        let partial = &trace.partials[0];
        match (partial.answer(), partial.error()) {
            (Some(answer), _) => {
                trace.final_answer = answer.to_string();
                Ok(())
            }
            (None, err) => Err(err
                .cloned()
                .unwrap_or_else(|| RpcError::agent_failure("empty result"))),
        }
    }

    async fn decide(
        &self,
        trace: &mut OrchestrationTrace,
        index: usize,
        question: &str,
        images: &[String],
    ) -> RoutingDecision {
        let (mut decision, parsed) = self.route(question).await;
        if !parsed {
            trace.flags.push(TraceFlag::RouteUnparsed { index });
        }
        if decision.agent_kind == AgentKind::ImageAgent && images.is_empty() {
            decision.agent_kind = AgentKind::GeneralAgent;
            trace.flags.push(TraceFlag::ImageOverride { index });
        }
        decision
    }

    fn record(
        &self,
        trace: &mut OrchestrationTrace,
        index: usize,
        decision: RoutingDecision,
        d: Dispatched,
    ) {
        if let Some((from, reason)) = d.fallback {
            trace.log(lines::fallback(from, &reason));
            trace.flags.push(TraceFlag::DispatchFallback {
                index,
                from,
                reason,
            });
        }
        trace.log_lines.extend(d.result.log_lines.iter().cloned());
        trace.decisions.push(decision);
        trace.partials.push(d.result);
    }

    async fn dispatch_all(
        &self,
        decisions: &[RoutingDecision],
        session_id: &str,
        images: &[String],
    ) -> Vec<Dispatched> {
        let mut set = JoinSet::new();
        for (i, d) in decisions.iter().enumerate() {
            let dispatcher = self.dispatcher.clone();
            let (kind, q, s, imgs) = (
                d.agent_kind,
                d.sub_question.clone(),
                session_id.to_string(),
                images.to_vec(),
            );
            set.spawn(async move { (i, dispatcher.dispatch(kind, &q, &s, &imgs).await) });
        }
        let mut out: Vec<Option<Dispatched>> = vec![None; decisions.len()];
        while let Some(joined) = set.join_next().await {
            match joined {
                Ok((i, d)) => out[i] = Some(d),
                Err(e) => tracing::error!("dispatch task panicked: {e}"),
            }
        }
        out.into_iter()
            .map(|d| {
                d.unwrap_or_else(|| Dispatched {
                    result: A2AResult::failed(
                        uuid::Uuid::new_v4().to_string(),
                        &self.config.agent_id,
                        RpcError::agent_failure("dispatch task aborted"),
                    ),
                    fallback: None,
                })
            })
            .collect()
    }
}
