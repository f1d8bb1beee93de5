#![allow(dead_code)]

use std::path::PathBuf;
use std::sync::Arc;

use agentmesh_core::provider::ScriptedProvider;
use agentmesh_core::stack::{Fixtures, LocalStack, StackOptions};

pub fn repo_root() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../..")
}

pub fn fixtures() -> Fixtures {
    Fixtures::open(repo_root().join("fixtures")).unwrap()
}

pub fn script() -> Arc<ScriptedProvider> {
    Arc::new(ScriptedProvider::from_path(repo_root().join("golden/script.json")).unwrap())
}

pub fn stack() -> LocalStack {
    LocalStack::build(script(), &fixtures(), StackOptions::default()).unwrap()
}
