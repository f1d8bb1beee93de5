//! Operator CLI: run the services, ask questions, replay golden traces,
//! seed fixtures. Exit codes: 0 success, 1 mismatch or failed answer,
//! 2 environment error.

use clap::{Args, Parser, Subcommand};
use std::net::{IpAddr, SocketAddr};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use agentmesh_core::coordinator::CoordinatorConfig;
use agentmesh_core::golden::{self, QueryClient, ReplayReport};
use agentmesh_core::provider::{ModelProvider, ScriptedProvider};
use agentmesh_core::registry::AgentKind;
use agentmesh_core::stack::{open_store, seed_corpus, Fixtures, LocalStack, StackOptions};
use agentmesh_core::agents::IrAgent;
use agentmesh_server::{
    agent_endpoints_from_env, start_agents, Deployment, DeploymentOptions, HttpQueryClient,
    ImageBody, LiveConfig, LiveProvider, QueryError, DEFAULT_GATEWAY_PORT,
};

const EXIT_MISMATCH: u8 = 1;
const EXIT_ENV: u8 = 2;

#[derive(Parser)]
#[command(name = "agentmesh", version, about = "Multi-agent question answering runtime")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the gateway and agent services until interrupted.
    Serve(ServeArgs),
    /// Send one query to a running gateway.
    Ask(AskArgs),
    /// Replay golden traces and report mismatches.
    Replay(ReplayArgs),
    /// Load the database and corpus and print their counts.
    Seed(SeedArgs),
}

#[derive(Args)]
struct ProviderArgs {
    /// Scripted provider file; without it the live provider is configured
    /// from MODEL_ENDPOINT, MODEL_NAME and MODEL_API_KEY.
    #[arg(long)]
    script: Option<PathBuf>,
}

#[derive(Args)]
struct ServeArgs {
    #[command(flatten)]
    provider: ProviderArgs,
    #[arg(long, default_value = "fixtures")]
    fixtures: PathBuf,
    /// Agents to run: comma-separated kinds (sql, ir, image, general) or `none`.
    #[arg(long, default_value = "sql,ir,image,general")]
    agents: String,
    #[arg(long, default_value = "127.0.0.1")]
    host: IpAddr,
    #[arg(long, env = "GATEWAY_PORT", default_value_t = DEFAULT_GATEWAY_PORT)]
    port: u16,
    #[arg(long, env = "STATE_DIR")]
    state_dir: Option<PathBuf>,
    /// Run only the agents and register them with this gateway.
    #[arg(long)]
    gateway_url: Option<String>,
    /// Dispatch sub-questions concurrently.
    #[arg(long)]
    parallel: bool,
}

#[derive(Args)]
struct AskArgs {
    text: Option<String>,
    #[arg(long, env = "AGENTMESH_GATEWAY")]
    gateway: Option<String>,
    #[arg(long)]
    image: Option<PathBuf>,
    #[arg(long)]
    session: Option<String>,
    /// Print the coordinator log lines after the answer.
    #[arg(long)]
    trace: bool,
}

#[derive(Args)]
struct ReplayArgs {
    /// A golden trace file or a directory of them.
    #[arg(default_value = "golden")]
    path: PathBuf,
    #[arg(long, default_value = "golden/script.json")]
    script: PathBuf,
    #[arg(long, default_value = "fixtures")]
    fixtures: PathBuf,
    /// Replay against a running gateway instead of an in-process stack.
    #[arg(long)]
    gateway: Option<String>,
}

#[derive(Args)]
struct SeedArgs {
    #[arg(default_value = "fixtures")]
    dir: PathBuf,
    #[arg(long, env = "STATE_DIR")]
    state_dir: Option<PathBuf>,
}

fn env_error(msg: impl std::fmt::Display) -> ExitCode {
    eprintln!("error: {msg}");
    ExitCode::from(EXIT_ENV)
}

fn parse_kinds(spec: &str) -> Result<Vec<AgentKind>, String> {
    if spec.trim().eq_ignore_ascii_case("none") {
        return Ok(Vec::new());
    }
    let mut kinds = Vec::new();
    for part in spec.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        let kind: AgentKind = part.parse()?;
        if !AgentKind::ROUTABLE.contains(&kind) {
            return Err(format!("'{part}' is not a domain agent"));
        }
        if !kinds.contains(&kind) {
            kinds.push(kind);
        }
    }
    Ok(kinds)
}

fn load_provider(args: &ProviderArgs) -> Result<Arc<dyn ModelProvider>, String> {
    match &args.script {
        Some(path) => ScriptedProvider::from_path(path)
            .map(|p| Arc::new(p) as Arc<dyn ModelProvider>)
            .map_err(|e| format!("{}: {e}", path.display())),
        None => {
            let config = LiveConfig::from_env().map_err(|e| e.to_string())?;
            LiveProvider::new(config)
                .map(|p| Arc::new(p) as Arc<dyn ModelProvider>)
                .map_err(|e| e.to_string())
        }
    }
}

async fn serve(args: ServeArgs) -> ExitCode {
    let kinds = match parse_kinds(&args.agents) {
        Ok(k) => k,
        Err(e) => return env_error(e),
    };
    let provider = match load_provider(&args.provider) {
        Ok(p) => p,
        Err(e) => return env_error(e),
    };
    let fixtures = match Fixtures::open(&args.fixtures) {
        Ok(f) => f,
        Err(e) => return env_error(e),
    };

    if let Some(gateway) = args.gateway_url {
        let rpc = format!("{}/rpc", gateway.trim_end_matches('/'));
        let services = match start_agents(
            provider,
            &fixtures,
            &kinds,
            args.state_dir.as_deref(),
            args.host,
            &rpc,
        )
        .await
        {
            Ok(s) => s,
            Err(e) => return env_error(e),
        };
        for (kind, h) in &services.servers {
            println!("{kind} listening on {}/rpc", h.url());
        }
        let _ = tokio::signal::ctrl_c().await;
        for (_, h) in services.servers {
            h.stop().await;
        }
        return ExitCode::SUCCESS;
    }

    let options = DeploymentOptions {
        gateway_addr: SocketAddr::new(args.host, args.port),
        kinds,
        remote_agents: agent_endpoints_from_env(),
        state_dir: args.state_dir,
        coordinator: CoordinatorConfig {
            parallel_dispatch: args.parallel,
            ..Default::default()
        },
    };
    let deployment = match Deployment::start(provider, &fixtures, options).await {
        Ok(d) => d,
        Err(e) => return env_error(e),
    };
    println!("gateway listening on {}", deployment.gateway_url());
    for card in deployment.gateway().registry().snapshot() {
        println!("{} {} at {}", card.kind, card.agent_id, card.endpoint);
    }
    let _ = tokio::signal::ctrl_c().await;
    deployment.shutdown().await;
    ExitCode::SUCCESS
}

fn media_type(path: &Path) -> &'static str {
    match path
        .extension()
        .and_then(|e| e.to_str())
        .map(str::to_ascii_lowercase)
        .as_deref()
    {
        Some("png") => "image/png",
        Some("jpg" | "jpeg") => "image/jpeg",
        Some("gif") => "image/gif",
        Some("webp") => "image/webp",
        _ => "application/octet-stream",
    }
}

fn default_gateway() -> String {
    let port = std::env::var("GATEWAY_PORT").unwrap_or_else(|_| DEFAULT_GATEWAY_PORT.to_string());
    format!("http://127.0.0.1:{port}")
}

async fn ask(args: AskArgs) -> ExitCode {
    let image = match &args.image {
        Some(path) => match std::fs::read(path) {
            Ok(bytes) => Some(ImageBody::from_bytes(media_type(path), &bytes)),
            Err(e) => return env_error(format!("{}: {e}", path.display())),
        },
        None => None,
    };
    if args.text.is_none() && image.is_none() {
        return env_error("give a question, an --image, or both");
    }
    let client = HttpQueryClient::new(args.gateway.unwrap_or_else(default_gateway));
    let (status, resp) = match client
        .ask(args.text.as_deref(), args.session.as_deref(), image)
        .await
    {
        Ok(r) => r,
        Err(e @ QueryError::Unreachable(_)) => return env_error(e),
        Err(e) => return env_error(e),
    };
    println!("{}", resp.answer);
    if let Some(table) = &resp.table {
        println!();
        println!("{}", table.columns.join("\t"));
        for row in &table.rows {
            let cells: Vec<String> = row
                .iter()
                .map(|v| match v {
                    serde_json::Value::String(s) => s.clone(),
                    other => other.to_string(),
                })
                .collect();
            println!("{}", cells.join("\t"));
        }
        if table.truncated {
            println!("(truncated)");
        }
    }
    if args.trace {
        println!();
        for line in &resp.trace.log_lines {
            println!("{line}");
        }
    }
    eprintln!("session: {}", resp.session_id);
    if status == 200 {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(EXIT_MISMATCH)
    }
}

fn print_report(report: &ReplayReport) {
    let verdict = if report.passed() { "PASS" } else { "FAIL" };
    println!("{verdict} {}", report.query_id);
    for m in report.trace_mismatches.iter().chain(&report.standalone_mismatches) {
        for line in m.lines() {
            println!("    {line}");
        }
    }
}

async fn replay(args: ReplayArgs) -> ExitCode {
    let goldens = match golden::load(&args.path) {
        Ok(g) if !g.is_empty() => g,
        Ok(_) => return env_error(format!("no golden traces in {}", args.path.display())),
        Err(e) => return env_error(e),
    };
    let stack;
    let http;
    let client: &dyn QueryClient = match &args.gateway {
        Some(url) => {
            http = HttpQueryClient::new(url.clone());
            if let Err(e) = http.health().await {
                return env_error(e);
            }
            &http
        }
        None => {
            let provider = match ScriptedProvider::from_path(&args.script) {
                Ok(p) => Arc::new(p),
                Err(e) => return env_error(format!("{}: {e}", args.script.display())),
            };
            let fixtures = match Fixtures::open(&args.fixtures) {
                Ok(f) => f,
                Err(e) => return env_error(e),
            };
            stack = match LocalStack::build(provider, &fixtures, StackOptions::default()) {
                Ok(s) => s,
                Err(e) => return env_error(e),
            };
            stack.gateway.as_ref()
        }
    };
    let mut failed = 0;
    for g in &goldens {
        let report = golden::replay(client, g).await;
        print_report(&report);
        if !report.passed() {
            failed += 1;
        }
    }
    println!("{} passed, {failed} failed", goldens.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(EXIT_MISMATCH)
    }
}

fn seed(args: SeedArgs) -> ExitCode {
    if !args.dir.is_dir() {
        return env_error(format!("fixture directory {} not found", args.dir.display()));
    }
    let run = || -> Result<(), Box<dyn std::error::Error>> {
        let fixtures = Fixtures::open(&args.dir)?;
        let db = fixtures.load_db()?;
        let provider = Arc::new(ScriptedProvider::new(Vec::new())?);
        let store = Arc::new(open_store(provider.embedding_dim(), args.state_dir.as_deref())?);
        let ir = IrAgent::new(provider, store.clone());
        let (docs, chunks) = seed_corpus(&ir, &fixtures)?;
        println!("rows: {}", db.row_count()?);
        println!("virginia: {}", db.count_state("Virginia")?);
        println!("documents: {docs}");
        println!("chunks: {chunks}");
        println!("vectors: {}", store.len());
        Ok(())
    };
    match run() {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => env_error(e),
    }
}

#[tokio::main]
async fn main() -> ExitCode {
    tracing_subscriber::fmt()
        .with_env_filter(tracing_subscriber::EnvFilter::from_default_env())
        .with_writer(std::io::stderr)
        .init();
    let cli = Cli::parse();
    match cli.command {
        Command::Serve(a) => serve(a).await,
        Command::Ask(a) => ask(a).await,
        Command::Replay(a) => replay(a).await,
        Command::Seed(a) => seed(a),
    }
}
