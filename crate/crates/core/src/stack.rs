//! Fixture loading and an in-process deployment of the whole system: the
//! four agents, registry, coordinator and gateway wired through
//! [`InProcessTransport`].

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use crate::agents::{
    AgentHost, BridgeDbHandle, ContextSource, DomainAgent, GeneralAgent, ImageAgent, IrAgent,
    SqlAgent,
};
use crate::agents::sql::{BridgeDb, DbError};
use crate::coordinator::{Coordinator, CoordinatorConfig, InProcessTransport};
use crate::gateway::Gateway;
use crate::protocol::RpcError;
use crate::provider::ModelProvider;
use crate::registry::{AgentKind, Registry, RegistryError};
use crate::state::{ContextCache, StateError, VectorStore};

pub const DB_FILE: &str = "bridge_basic_info.csv";
pub const CORPUS_DIR: &str = "corpus";
pub const IMAGES_DIR: &str = "images";
pub const VECTOR_FILE: &str = "vectors.ndjson";

#[derive(Debug, thiserror::Error)]
pub enum StackError {
    #[error("fixture directory {0} not found")]
    MissingFixtures(PathBuf),
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error(transparent)]
    Db(#[from] DbError),
    #[error(transparent)]
    State(#[from] StateError),
    #[error(transparent)]
    Registry(#[from] RegistryError),
    #[error("{0} is not a domain agent kind")]
    NotAgent(AgentKind),
    #[error("corpus ingestion failed: {0}")]
    Ingest(RpcError),
}

/// The on-disk fixture layout: `bridge_basic_info.csv`, `corpus/*.txt`,
/// `images/*`.
#[derive(Debug, Clone)]
pub struct Fixtures {
    root: PathBuf,
}

impl Fixtures {
    pub fn open(root: impl Into<PathBuf>) -> Result<Self, StackError> {
        let root = root.into();
        if !root.join(DB_FILE).is_file() {
            return Err(StackError::MissingFixtures(root));
        }
        Ok(Self { root })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn db_path(&self) -> PathBuf {
        self.root.join(DB_FILE)
    }

    pub fn image_path(&self, name: &str) -> PathBuf {
        self.root.join(IMAGES_DIR).join(name)
    }

    pub fn load_db(&self) -> Result<BridgeDb, StackError> {
        Ok(BridgeDb::from_csv_path(self.db_path())?)
    }

    /// `(doc_id, text)` for each `corpus/*.txt`, doc id being the file stem,
    /// sorted by doc id.
    pub fn corpus(&self) -> Result<Vec<(String, String)>, StackError> {
        let dir = self.root.join(CORPUS_DIR);
        let io = |source| StackError::Io {
            path: dir.clone(),
            source,
        };
        let mut docs = Vec::new();
        if !dir.is_dir() {
            return Ok(docs);
        }
        for entry in std::fs::read_dir(&dir).map_err(io)? {
            let path = entry.map_err(io)?.path();
            if path.extension().and_then(|e| e.to_str()) != Some("txt") {
                continue;
            }
            let Some(stem) = path.file_stem().and_then(|s| s.to_str()) else {
                continue;
            };
            let text = std::fs::read_to_string(&path).map_err(|source| StackError::Io {
                path: path.clone(),
                source,
            })?;
            docs.push((stem.to_string(), text));
        }
        docs.sort();
        Ok(docs)
    }
}

/// Opens the vector store, persisted under `state_dir` when given.
pub fn open_store(dim: usize, state_dir: Option<&Path>) -> Result<VectorStore, StackError> {
    match state_dir {
        Some(dir) => {
            std::fs::create_dir_all(dir).map_err(|source| StackError::Io {
                path: dir.to_path_buf(),
                source,
            })?;
            Ok(VectorStore::open(dir.join(VECTOR_FILE), dim)?)
        }
        None => Ok(VectorStore::in_memory(dim)),
    }
}

/// Ingests every corpus document, replacing earlier chunks of the same
/// doc. Returns `(documents, chunks)`.
pub fn seed_corpus(ir: &IrAgent, fixtures: &Fixtures) -> Result<(usize, usize), StackError> {
    let docs = fixtures.corpus()?;
    let mut chunks = 0;
    for (doc_id, text) in &docs {
        chunks += ir.ingest(doc_id, text).map_err(StackError::Ingest)?;
    }
    Ok((docs.len(), chunks))
}

pub fn agent_id(kind: AgentKind) -> String {
    kind.as_str().to_lowercase().replace('_', "-")
}

pub fn local_endpoint(kind: AgentKind) -> String {
    format!("local://{}", agent_id(kind))
}

#[derive(Debug, Clone)]
pub struct StackOptions {
    pub kinds: Vec<AgentKind>,
    pub state_dir: Option<PathBuf>,
    pub coordinator: CoordinatorConfig,
}

impl Default for StackOptions {
    fn default() -> Self {
        Self {
            kinds: AgentKind::ROUTABLE.to_vec(),
            state_dir: None,
            coordinator: CoordinatorConfig::default(),
        }
    }
}

/// What [`build_agent`] may need; only the SQL agent reads `db` and only
/// the retrieval agent reads `store`.
pub struct AgentDeps {
    pub db: Option<BridgeDbHandle>,
    pub store: Option<Arc<VectorStore>>,
    pub context: Arc<dyn ContextSource>,
}

/// Builds one domain agent. `None` when a dependency it needs is missing.
pub fn build_agent(
    kind: AgentKind,
    provider: Arc<dyn ModelProvider>,
    deps: &AgentDeps,
) -> Option<Arc<dyn DomainAgent>> {
    Some(match kind {
        AgentKind::SqlAgent => Arc::new(SqlAgent::new(provider, deps.db.clone()?)),
        AgentKind::IrAgent => Arc::new(IrAgent::new(provider, deps.store.clone()?)),
        AgentKind::ImageAgent => Arc::new(ImageAgent::new(provider, deps.context.clone())),
        AgentKind::GeneralAgent => Arc::new(GeneralAgent::new(provider)),
        AgentKind::Coordinator => return None,
    })
}

pub struct LocalStack {
    pub registry: Arc<Registry>,
    pub transport: Arc<InProcessTransport>,
    pub cache: Arc<ContextCache>,
    pub coordinator: Arc<Coordinator>,
    pub gateway: Arc<Gateway>,
    pub db: BridgeDbHandle,
    pub store: Arc<VectorStore>,
    pub corpus_chunks: usize,
    hosts: BTreeMap<AgentKind, Arc<AgentHost>>,
}

impl LocalStack {
    pub fn build(
        provider: Arc<dyn ModelProvider>,
        fixtures: &Fixtures,
        options: StackOptions,
    ) -> Result<Self, StackError> {
        let db: BridgeDbHandle = Arc::new(fixtures.load_db()?);
        let store = Arc::new(open_store(provider.embedding_dim(), options.state_dir.as_deref())?);
        let (_, corpus_chunks) = seed_corpus(&IrAgent::new(provider.clone(), store.clone()), fixtures)?;
        let cache = Arc::new(ContextCache::default());
        let registry = Arc::new(Registry::new());
        let transport = Arc::new(InProcessTransport::new());
        let deps = AgentDeps {
            db: Some(db.clone()),
            store: Some(store.clone()),
            context: cache.clone(),
        };
        let mut hosts = BTreeMap::new();
        for kind in options.kinds {
            let agent = build_agent(kind, provider.clone(), &deps).ok_or(StackError::NotAgent(kind))?;
            let host = Arc::new(AgentHost::new(agent_id(kind), local_endpoint(kind), agent));
            registry.register(host.card().clone())?;
            transport.attach(host.clone());
            hosts.insert(kind, host);
        }
        let coordinator = Arc::new(Coordinator::new(
            provider,
            registry.clone(),
            transport.clone(),
            options.coordinator,
        ));
        let gateway = Arc::new(Gateway::new(coordinator.clone(), cache.clone()));
        Ok(Self {
            registry,
            transport,
            cache,
            coordinator,
            gateway,
            db,
            store,
            corpus_chunks,
            hosts,
        })
    }

    pub fn host(&self, kind: AgentKind) -> Option<&Arc<AgentHost>> {
        self.hosts.get(&kind)
    }

    /// Makes an agent unreachable (or reachable again) without touching
    /// the registry, as if its process stopped.
    pub fn set_offline(&self, kind: AgentKind, offline: bool) {
        self.transport.set_offline(&local_endpoint(kind), offline);
    }
}
