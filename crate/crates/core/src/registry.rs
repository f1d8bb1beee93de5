//! In-process registry of agent cards used by the coordinator's router.

use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;
use std::sync::RwLock;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum AgentKind {
    GeneralAgent,
    SqlAgent,
    IrAgent,
    ImageAgent,
    Coordinator,
}

impl AgentKind {
    /// Kinds a sub-question may be routed to.
    pub const ROUTABLE: [AgentKind; 4] = [
        AgentKind::GeneralAgent,
        AgentKind::SqlAgent,
        AgentKind::IrAgent,
        AgentKind::ImageAgent,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            AgentKind::GeneralAgent => "GENERAL_AGENT",
            AgentKind::SqlAgent => "SQL_AGENT",
            AgentKind::IrAgent => "IR_AGENT",
            AgentKind::ImageAgent => "IMAGE_AGENT",
            AgentKind::Coordinator => "COORDINATOR",
        }
    }

    /// Default capability tags advertised by each kind.
    pub fn default_capabilities(self) -> Vec<String> {
        let tags: &[&str] = match self {
            AgentKind::GeneralAgent => &["open-domain-qa"],
            AgentKind::SqlAgent => &["sql-query"],
            AgentKind::IrAgent => &["document-retrieval"],
            AgentKind::ImageAgent => &["image-caption"],
            AgentKind::Coordinator => &["orchestration"],
        };
        tags.iter().map(|s| s.to_string()).collect()
    }
}

impl fmt::Display for AgentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for AgentKind {
    type Err = String;

    /// Accepts the wire token (`SQL_AGENT`) or the short CLI name (`sql`).
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let kind = match s.trim().to_ascii_uppercase().as_str() {
            "GENERAL_AGENT" | "GENERAL" => AgentKind::GeneralAgent,
            "SQL_AGENT" | "SQL" => AgentKind::SqlAgent,
            "IR_AGENT" | "IR" => AgentKind::IrAgent,
            "IMAGE_AGENT" | "IMAGE" => AgentKind::ImageAgent,
            "COORDINATOR" => AgentKind::Coordinator,
            other => return Err(format!("unknown agent kind '{other}'")),
        };
        Ok(kind)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgentCard {
    pub agent_id: String,
    pub kind: AgentKind,
    pub display_name: String,
    pub capabilities: Vec<String>,
    /// URL of the agent's JSON-RPC endpoint.
    pub endpoint: String,
    #[serde(default = "default_healthy")]
    pub healthy: bool,
}

fn default_healthy() -> bool {
    true
}

impl AgentCard {
    pub fn new(agent_id: impl Into<String>, kind: AgentKind, endpoint: impl Into<String>) -> Self {
        let agent_id = agent_id.into();
        Self {
            display_name: agent_id.clone(),
            agent_id,
            kind,
            capabilities: kind.default_capabilities(),
            endpoint: endpoint.into(),
            healthy: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum RegistryError {
    #[error("a coordinator is already registered as '{existing}'")]
    DuplicateCoordinator { existing: String },
    #[error("agent '{0}' advertises no capabilities")]
    NoCapabilities(String),
    #[error("agent '{0}' is not registered")]
    NotFound(String),
}

#[derive(Debug, Default)]
pub struct Registry {
    cards: RwLock<BTreeMap<String, AgentCard>>,
}

impl Registry {
    pub fn new() -> Self {
        Self::default()
    }

    /// Stores a card. Re-registering an id replaces its card.
    pub fn register(&self, card: AgentCard) -> Result<(), RegistryError> {
        if card.capabilities.is_empty() {
            return Err(RegistryError::NoCapabilities(card.agent_id));
        }
        let mut cards = self.cards.write().unwrap_or_else(|e| e.into_inner());
        if card.kind == AgentKind::Coordinator {
            if let Some(existing) = cards
                .values()
                .find(|c| c.kind == AgentKind::Coordinator && c.agent_id != card.agent_id)
            {
                return Err(RegistryError::DuplicateCoordinator {
                    existing: existing.agent_id.clone(),
                });
            }
        }
        cards.insert(card.agent_id.clone(), card);
        Ok(())
    }

    /// Healthy cards of `kind`, ascending by agent id.
    pub fn lookup_by_kind(&self, kind: AgentKind) -> Vec<AgentCard> {
        let cards = self.cards.read().unwrap_or_else(|e| e.into_inner());
        cards
            .values()
            .filter(|c| c.kind == kind && c.healthy)
            .cloned()
            .collect()
    }

    pub fn get(&self, agent_id: &str) -> Option<AgentCard> {
        let cards = self.cards.read().unwrap_or_else(|e| e.into_inner());
        cards.get(agent_id).cloned()
    }

    pub fn mark_health(&self, agent_id: &str, healthy: bool) -> Result<(), RegistryError> {
        let mut cards = self.cards.write().unwrap_or_else(|e| e.into_inner());
        let card = cards
            .get_mut(agent_id)
            .ok_or_else(|| RegistryError::NotFound(agent_id.to_string()))?;
        card.healthy = healthy;
        Ok(())
    }

    /// Every card regardless of health, ascending by agent id.
    pub fn snapshot(&self) -> Vec<AgentCard> {
        let cards = self.cards.read().unwrap_or_else(|e| e.into_inner());
        cards.values().cloned().collect()
    }
}
