#![allow(dead_code)]

use std::path::PathBuf;
use std::sync::Arc;

use agentmesh_core::provider::ScriptedProvider;
use agentmesh_core::stack::Fixtures;
use agentmesh_server::{Deployment, DeploymentOptions};

pub fn repo_root() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../..")
}

pub fn fixtures() -> Fixtures {
    Fixtures::open(repo_root().join("fixtures")).unwrap()
}

pub fn script() -> Arc<ScriptedProvider> {
    Arc::new(ScriptedProvider::from_path(repo_root().join("golden/script.json")).unwrap())
}

pub async fn deploy() -> Deployment {
    deploy_with(DeploymentOptions::default()).await
}

pub async fn deploy_with(options: DeploymentOptions) -> Deployment {
    Deployment::start(script(), &fixtures(), options).await.unwrap()
}

pub fn sketch_png() -> Vec<u8> {
    std::fs::read(fixtures().image_path("bridge_sketch.png")).unwrap()
}
