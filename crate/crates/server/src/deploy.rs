//! Starting the gateway and agent services over HTTP, either together in
//! one process or agents alone registering with a remote gateway.

use serde_json::{json, Value};
use std::collections::BTreeMap;
use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::Arc;
use std::time::Duration;
use tokio::net::TcpListener;
use tokio::sync::oneshot;
use tokio::task::JoinHandle;

use agentmesh_core::agents::{AgentHost, BridgeDbHandle, ContextSource};
use agentmesh_core::coordinator::{Coordinator, CoordinatorConfig};
use agentmesh_core::gateway::Gateway;
use agentmesh_core::protocol::a2a::METHOD_CARD;
use agentmesh_core::protocol::parse_params;
use agentmesh_core::provider::ModelProvider;
use agentmesh_core::registry::{AgentCard, AgentKind, Registry};
use agentmesh_core::stack::{
    agent_id, build_agent, open_store, seed_corpus, AgentDeps, Fixtures, StackError,
};
use agentmesh_core::agents::IrAgent;
use agentmesh_core::state::ContextCache;

use crate::client::RpcClient;
use crate::context::HttpContextSource;
use crate::http::{agent_router, gateway_router};
use crate::transport::HttpTransport;

pub const DEFAULT_GATEWAY_PORT: u16 = 8080;
const REGISTER_ATTEMPTS: u32 = 10;
const REGISTER_BACKOFF: Duration = Duration::from_millis(200);

#[derive(Debug, thiserror::Error)]
pub enum ServeError {
    #[error("cannot bind {addr}: {source}")]
    Bind {
        addr: SocketAddr,
        source: std::io::Error,
    },
    #[error("invalid {name}: {value}")]
    Env { name: &'static str, value: String },
    #[error(transparent)]
    Stack(#[from] StackError),
    #[error("agent registration failed: {0}")]
    Register(String),
}

/// `GATEWAY_PORT`, defaulting to 8080.
pub fn gateway_port_from_env() -> Result<u16, ServeError> {
    match std::env::var("GATEWAY_PORT") {
        Ok(v) if !v.trim().is_empty() => v.trim().parse().map_err(|_| ServeError::Env {
            name: "GATEWAY_PORT",
            value: v,
        }),
        _ => Ok(DEFAULT_GATEWAY_PORT),
    }
}

/// `AGENT_ENDPOINTS`: comma-separated agent RPC URLs, blanks dropped.
pub fn agent_endpoints_from_env() -> Vec<String> {
    std::env::var("AGENT_ENDPOINTS")
        .unwrap_or_default()
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(str::to_string)
        .collect()
}

/// A running HTTP server. Dropping the handle leaves the server running;
/// call [`ServerHandle::stop`] to shut it down.
pub struct ServerHandle {
    addr: SocketAddr,
    shutdown: Option<oneshot::Sender<()>>,
    task: JoinHandle<()>,
}

impl ServerHandle {
    pub fn addr(&self) -> SocketAddr {
        self.addr
    }

    pub fn url(&self) -> String {
        format!("http://{}", self.addr)
    }

    /// Stops accepting connections and waits briefly for in-flight requests.
    pub async fn stop(mut self) {
        if let Some(tx) = self.shutdown.take() {
            let _ = tx.send(());
        }
        if tokio::time::timeout(Duration::from_secs(5), &mut self.task)
            .await
            .is_err()
        {
            self.task.abort();
        }
    }

    /// Resolves when the server exits.
    pub async fn wait(self) {
        let _ = self.task.await;
    }
}

pub async fn bind(addr: SocketAddr) -> Result<TcpListener, ServeError> {
    TcpListener::bind(addr)
        .await
        .map_err(|source| ServeError::Bind { addr, source })
}

fn spawn(listener: TcpListener, router: axum::Router) -> ServerHandle {
    let addr = listener.local_addr().expect("bound listener has an address");
    let (tx, rx) = oneshot::channel::<()>();
    let task = tokio::spawn(async move {
        let result = axum::serve(listener, router)
            .with_graceful_shutdown(async {
                let _ = rx.await;
            })
            .await;
        if let Err(e) = result {
            tracing::error!("server on {addr} stopped: {e}");
        }
    });
    ServerHandle {
        addr,
        shutdown: Some(tx),
        task,
    }
}

pub fn serve_gateway(listener: TcpListener, gateway: Arc<Gateway>) -> ServerHandle {
    spawn(listener, gateway_router(gateway))
}

pub fn serve_agent(listener: TcpListener, host: Arc<AgentHost>) -> ServerHandle {
    spawn(listener, agent_router(host))
}

/// Sends `card` to the gateway with `a2a.card`, retrying while the gateway
/// comes up.
pub async fn register_card(gateway_rpc: &str, card: &AgentCard) -> Result<(), ServeError> {
    let client = RpcClient::new(gateway_rpc);
    let mut last = String::new();
    for attempt in 0..REGISTER_ATTEMPTS {
        match client.call(METHOD_CARD, json!(card)).await {
            Ok(_) => return Ok(()),
            Err(e) => last = e.message,
        }
        if attempt + 1 < REGISTER_ATTEMPTS {
            tokio::time::sleep(REGISTER_BACKOFF).await;
        }
    }
    Err(ServeError::Register(format!("{}: {last}", card.agent_id)))
}

/// Asks an agent endpoint for its card. The card's endpoint is replaced by
/// the URL it was reached at.
pub async fn fetch_card(endpoint: &str) -> Result<AgentCard, ServeError> {
    let value = RpcClient::new(endpoint)
        .call(METHOD_CARD, Value::Null)
        .await
        .map_err(|e| ServeError::Register(format!("{endpoint}: {}", e.message)))?;
    let mut card: AgentCard =
        parse_params(value).map_err(|e| ServeError::Register(format!("{endpoint}: {}", e.message)))?;
    card.endpoint = endpoint.to_string();
    Ok(card)
}

/// Loads only the fixtures the requested agents need.
fn agent_deps(
    kinds: &[AgentKind],
    provider: &Arc<dyn ModelProvider>,
    fixtures: &Fixtures,
    state_dir: Option<&std::path::Path>,
    context: Arc<dyn ContextSource>,
) -> Result<(AgentDeps, usize), ServeError> {
    let db: Option<BridgeDbHandle> = if kinds.contains(&AgentKind::SqlAgent) {
        Some(Arc::new(fixtures.load_db()?))
    } else {
        None
    };
    let mut chunks = 0;
    let store = if kinds.contains(&AgentKind::IrAgent) {
        let store = Arc::new(open_store(provider.embedding_dim(), state_dir)?);
        chunks = seed_corpus(&IrAgent::new(provider.clone(), store.clone()), fixtures)?.1;
        Some(store)
    } else {
        None
    };
    Ok((AgentDeps { db, store, context }, chunks))
}

/// Agent services bound to `host:0`, registered with the gateway at
/// `gateway_rpc`.
pub struct AgentServices {
    pub servers: BTreeMap<AgentKind, ServerHandle>,
    pub corpus_chunks: usize,
}

pub async fn start_agents(
    provider: Arc<dyn ModelProvider>,
    fixtures: &Fixtures,
    kinds: &[AgentKind],
    state_dir: Option<&std::path::Path>,
    bind_ip: std::net::IpAddr,
    gateway_rpc: &str,
) -> Result<AgentServices, ServeError> {
    let context: Arc<dyn ContextSource> = Arc::new(HttpContextSource::new(gateway_rpc));
    let (deps, corpus_chunks) = agent_deps(kinds, &provider, fixtures, state_dir, context)?;
    let mut servers = BTreeMap::new();
    for &kind in kinds {
        let agent = build_agent(kind, provider.clone(), &deps).ok_or(StackError::NotAgent(kind))?;
        let listener = bind(SocketAddr::new(bind_ip, 0)).await?;
        let endpoint = format!("http://{}/rpc", listener.local_addr().map_err(|source| ServeError::Bind {
            addr: SocketAddr::new(bind_ip, 0),
            source,
        })?);
        let host = Arc::new(AgentHost::new(agent_id(kind), endpoint, agent));
        let card = host.card().clone();
        servers.insert(kind, serve_agent(listener, host));
        register_card(gateway_rpc, &card).await?;
    }
    Ok(AgentServices {
        servers,
        corpus_chunks,
    })
}

#[derive(Debug, Clone)]
pub struct DeploymentOptions {
    pub gateway_addr: SocketAddr,
    pub kinds: Vec<AgentKind>,
    /// Agents running elsewhere, registered by fetching their cards.
    pub remote_agents: Vec<String>,
    pub state_dir: Option<PathBuf>,
    pub coordinator: CoordinatorConfig,
}

impl Default for DeploymentOptions {
    fn default() -> Self {
        Self {
            gateway_addr: SocketAddr::from(([127, 0, 0, 1], 0)),
            kinds: AgentKind::ROUTABLE.to_vec(),
            remote_agents: Vec::new(),
            state_dir: None,
            coordinator: CoordinatorConfig::default(),
        }
    }
}

/// Gateway plus agent services, each on its own port, talking JSON-RPC
/// over HTTP.
pub struct Deployment {
    gateway: Arc<Gateway>,
    server: ServerHandle,
    agents: BTreeMap<AgentKind, ServerHandle>,
    corpus_chunks: usize,
}

impl Deployment {
    pub async fn start(
        provider: Arc<dyn ModelProvider>,
        fixtures: &Fixtures,
        options: DeploymentOptions,
    ) -> Result<Self, ServeError> {
        let listener = bind(options.gateway_addr).await?;
        let registry = Arc::new(Registry::new());
        let cache = Arc::new(ContextCache::default());
        let coordinator = Arc::new(Coordinator::new(
            provider.clone(),
            registry.clone(),
            Arc::new(HttpTransport::new()),
            options.coordinator,
        ));
        let gateway = Arc::new(Gateway::new(coordinator, cache));
        let server = serve_gateway(listener, gateway.clone());
        let rpc = format!("{}/rpc", server.url());

        for endpoint in &options.remote_agents {
            let card = fetch_card(endpoint).await?;
            registry
                .register(card)
                .map_err(|e| ServeError::Register(format!("{endpoint}: {e}")))?;
        }
        let services = match start_agents(
            provider,
            fixtures,
            &options.kinds,
            options.state_dir.as_deref(),
            options.gateway_addr.ip(),
            &rpc,
        )
        .await
        {
            Ok(s) => s,
            Err(e) => {
                server.stop().await;
                return Err(e);
            }
        };
        Ok(Self {
            gateway,
            server,
            agents: services.servers,
            corpus_chunks: services.corpus_chunks,
        })
    }

    pub fn gateway(&self) -> &Arc<Gateway> {
        &self.gateway
    }

    pub fn gateway_url(&self) -> String {
        self.server.url()
    }

    pub fn gateway_addr(&self) -> SocketAddr {
        self.server.addr()
    }

    pub fn agent_url(&self, kind: AgentKind) -> Option<String> {
        self.agents.get(&kind).map(|h| format!("{}/rpc", h.url()))
    }

    pub fn corpus_chunks(&self) -> usize {
        self.corpus_chunks
    }

    /// Shuts one agent service down, as if its process stopped. Its card
    /// stays registered.
    pub async fn stop_agent(&mut self, kind: AgentKind) -> bool {
        match self.agents.remove(&kind) {
            Some(h) => {
                h.stop().await;
                true
            }
            None => false,
        }
    }

    /// Runs until the gateway server exits.
    pub async fn wait(self) {
        self.server.wait().await
    }

    pub async fn shutdown(self) {
        for (_, h) in self.agents {
            h.stop().await;
        }
        self.server.stop().await;
    }
}
