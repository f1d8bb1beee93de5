//! Network side of agentmesh: JSON-RPC over HTTP between gateway and agents,
//! the gateway's public HTTP API, and a chat-completion model client.

pub mod client;
pub mod context;
pub mod deploy;
pub mod http;
pub mod live;
pub mod transport;

pub use client::{HttpQueryClient, QueryError, RpcClient};
pub use context::HttpContextSource;
pub use deploy::{
    agent_endpoints_from_env, bind, fetch_card, gateway_port_from_env, register_card, serve_agent,
    serve_gateway, start_agents, AgentServices, Deployment, DeploymentOptions, ServeError,
    ServerHandle, DEFAULT_GATEWAY_PORT,
};
pub use http::{agent_router, gateway_router, ImageBody, QueryBody};
pub use live::{LiveConfig, LiveProvider};
pub use transport::HttpTransport;
