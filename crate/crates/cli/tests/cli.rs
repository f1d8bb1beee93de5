use std::io::{BufRead, BufReader};
use std::path::PathBuf;
use std::process::{Child, Command, Output, Stdio};

use agentmesh_core::golden;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_agentmesh"));
    c.current_dir(repo_root());
    c.env_remove("GATEWAY_PORT").env_remove("STATE_DIR").env_remove("AGENT_ENDPOINTS");
    c
}

fn repo_root() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

/// A `serve` child process, killed on drop.
struct Served {
    child: Child,
    url: String,
    lines: Vec<String>,
}

impl Drop for Served {
    fn drop(&mut self) {
        let _ = self.child.kill();
        let _ = self.child.wait();
    }
}

fn serve(extra: &[&str]) -> Served {
    let mut child = bin()
        .args(["serve", "--script", "golden/script.json", "--port", "0"])
        .args(extra)
        .stdout(Stdio::piped())
        .stderr(Stdio::null())
        .spawn()
        .unwrap();
    let mut reader = BufReader::new(child.stdout.take().unwrap());
    let mut first = String::new();
    reader.read_line(&mut first).unwrap();
    let url = first
        .trim()
        .strip_prefix("gateway listening on ")
        .unwrap_or_else(|| panic!("unexpected serve output {first:?}"))
        .to_string();
    let lines: Vec<String> = reader.lines().map_while(Result::ok).take_while(|l| !l.is_empty()).take(agents(extra)).collect();
    Served { child, url, lines }
}

fn agents(extra: &[&str]) -> usize {
    match extra.iter().position(|a| *a == "--agents") {
        Some(i) => extra[i + 1].split(',').count(),
        None => 4,
    }
}

fn csv_virginia_count() -> usize {
    csv::Reader::from_path(repo_root().join("fixtures/bridge_basic_info.csv"))
        .unwrap()
        .records()
        .filter(|r| r.as_ref().unwrap().get(1) == Some("Virginia"))
        .count()
}

#[test]
fn seed_prints_counts_and_is_idempotent() {
    let state = tempfile::tempdir().unwrap();
    let s = state.path().to_str().unwrap();
    let first = run(&["seed", "fixtures", "--state-dir", s]);
    assert!(first.status.success());
    let out = stdout(&first);
    assert!(out.contains(&format!("virginia: {}\n", csv_virginia_count())), "{out}");
    let again = run(&["seed", "fixtures", "--state-dir", s]);
    assert_eq!(stdout(&again), out);
}

#[test]
fn seed_missing_dir_is_exit_2() {
    assert_eq!(run(&["seed", "no/such/dir"]).status.code(), Some(2));
}

#[test]
fn replay_passes_all_goldens() {
    let o = run(&["replay"]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    for q in ["Q1", "Q2", "Q3", "Q4", "Q5", "Q6"] {
        assert!(stdout(&o).contains(&format!("PASS {q}\n")));
    }
}

#[test]
fn tampered_golden_fails_with_diff() {
    let dir = tempfile::tempdir().unwrap();
    let mut g = golden::load_file(&repo_root().join("golden/q1.json")).unwrap();
    g.expected_decisions[1] = agentmesh_core::registry::AgentKind::IrAgent;
    let path = dir.path().join("q1.json");
    std::fs::write(&path, serde_json::to_string(&g).unwrap()).unwrap();
    let o = run(&["replay", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    let out = stdout(&o);
    assert!(out.contains("FAIL Q1"), "{out}");
    assert!(out.contains("- expected: \"IR_AGENT\"") && out.contains("+ actual:   \"SQL_AGENT\""), "{out}");
}

#[test]
fn replay_environment_errors_are_exit_2() {
    assert_eq!(run(&["replay", "no/such/golden"]).status.code(), Some(2));
    assert_eq!(run(&["replay", "--script", "missing.json"]).status.code(), Some(2));
}

#[test]
fn serve_registers_agents_and_answers() {
    let s = serve(&[]);
    assert_eq!(s.lines.len(), 4, "{:?}", s.lines);
    let q1 = golden::load_file(&repo_root().join("golden/q1.json")).unwrap();
    let o = run(&["ask", &q1.query, "--gateway", &s.url, "--trace"]);
    assert_eq!(o.status.code(), Some(0));
    let out = stdout(&o);
    assert!(!out.trim().is_empty());
    let expected = q1.expected_log_lines.join("\n");
    assert!(out.contains(&expected), "{out}");

    let o = run(&["ask", "--image", "fixtures/images/bridge_sketch.png", "--gateway", &s.url]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("colour gradient"));
}

#[test]
fn serve_selected_agents() {
    let s = serve(&["--agents", "sql,general"]);
    let mut kinds: Vec<&str> = s.lines.iter().filter_map(|l| l.split(' ').next()).collect();
    kinds.sort();
    assert_eq!(kinds, ["GENERAL_AGENT", "SQL_AGENT"]);
}

#[test]
fn serve_port_in_use_exits_nonzero() {
    let s = serve(&["--agents", "general"]);
    let port = s.url.rsplit(':').next().unwrap().to_string();
    let o = bin()
        .args(["serve", "--script", "golden/script.json", "--agents", "general", "--port", &port])
        .output()
        .unwrap();
    assert_ne!(o.status.code(), Some(0));
}

#[test]
fn ask_unreachable_gateway_is_exit_2() {
    let o = run(&["ask", "hello", "--gateway", "http://127.0.0.1:9"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn serve_without_fixtures_is_exit_2() {
    let o = run(&["serve", "--script", "golden/script.json", "--fixtures", "nope", "--port", "0"]);
    assert_eq!(o.status.code(), Some(2));
}
