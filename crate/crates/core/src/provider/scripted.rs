use async_trait::async_trait;
use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use std::path::Path;
use std::sync::atomic::{AtomicUsize, Ordering};

use super::{CompletionRequest, HashingEmbedder, ModelProvider, ProviderError, Purpose};
use crate::state::StoredImage;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScriptEntry {
    pub purpose: Purpose,
    /// Normalized subject, or a pattern where `*` matches any run of
    /// characters. Caption entries use the image's SHA-256 hex digest.
    pub match_key: String,
    pub response: String,
}

#[derive(Debug, thiserror::Error)]
pub enum ScriptError {
    #[error("cannot read script file: {0}")]
    Io(#[from] std::io::Error),
    #[error("malformed script file: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("duplicate script entry for purpose {purpose} and key '{key}'")]
    Duplicate { purpose: Purpose, key: String },
    #[error("script entry for purpose {purpose} and key '{key}' has an empty response")]
    EmptyResponse { purpose: Purpose, key: String },
}

/// Casefolds, trims, collapses internal whitespace and strips trailing
/// punctuation, so `"What is X?"` and `"what is  x."` share a key.
pub fn normalize_key(text: &str) -> String {
    let collapsed = text.split_whitespace().collect::<Vec<_>>().join(" ");
    collapsed
        .trim_end_matches(|c: char| ".?!,;:'\"`".contains(c) || c.is_whitespace())
        .to_lowercase()
}

/// Replays canned completions. A pure function of `(purpose, key)`: a miss
/// is an error, never an improvised answer.
#[derive(Debug)]
pub struct ScriptedProvider {
    entries: Vec<ScriptEntry>,
    exact: HashMap<(Purpose, String), usize>,
    patterns: Vec<usize>,
    embedder: HashingEmbedder,
    calls: AtomicUsize,
}

impl ScriptedProvider {
    pub fn new(entries: Vec<ScriptEntry>) -> Result<Self, ScriptError> {
        let mut exact = HashMap::new();
        let mut patterns = Vec::new();
        let mut seen = std::collections::HashSet::new();
        for (i, e) in entries.iter().enumerate() {
            let key = normalize_key(&e.match_key);
            if e.response.trim().is_empty() {
                return Err(ScriptError::EmptyResponse {
                    purpose: e.purpose,
                    key,
                });
            }
            if !seen.insert((e.purpose, key.clone())) {
                return Err(ScriptError::Duplicate {
                    purpose: e.purpose,
                    key,
                });
            }
            if key.contains('*') {
                patterns.push(i);
            } else {
                exact.insert((e.purpose, key), i);
            }
        }
        Ok(Self {
            entries,
            exact,
            patterns,
            embedder: HashingEmbedder::default(),
            calls: AtomicUsize::new(0),
        })
    }

    pub fn from_json(text: &str) -> Result<Self, ScriptError> {
        Self::new(serde_json::from_str(text)?)
    }

    pub fn from_path(path: impl AsRef<Path>) -> Result<Self, ScriptError> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn with_embedder(mut self, embedder: HashingEmbedder) -> Self {
        self.embedder = embedder;
        self
    }

    pub fn entries(&self) -> &[ScriptEntry] {
        &self.entries
    }

    /// Number of completion and caption calls served so far, hits and misses.
    pub fn calls(&self) -> usize {
        self.calls.load(Ordering::SeqCst)
    }

    pub fn lookup(&self, purpose: Purpose, subject: &str) -> Result<&str, ProviderError> {
        let key = normalize_key(subject);
        if let Some(&i) = self.exact.get(&(purpose, key.clone())) {
            return Ok(&self.entries[i].response);
        }
        self.patterns
            .iter()
            .map(|&i| &self.entries[i])
            .find(|e| e.purpose == purpose && wildcard_match(&normalize_key(&e.match_key), &key))
            .map(|e| e.response.as_str())
            .ok_or(ProviderError::ScriptMiss { purpose, key })
    }
}

#[async_trait]
impl ModelProvider for ScriptedProvider {
    async fn complete(&self, request: &CompletionRequest) -> Result<String, ProviderError> {
        self.calls.fetch_add(1, Ordering::SeqCst);
        self.lookup(request.purpose, &request.subject).map(str::to_string)
    }

    async fn caption(&self, image: &StoredImage, _prompt: &str) -> Result<String, ProviderError> {
        self.calls.fetch_add(1, Ordering::SeqCst);
        self.lookup(Purpose::Caption, &image.hash).map(str::to_string)
    }

    fn embed(&self, text: &str) -> Result<Vec<f64>, ProviderError> {
        self.embedder.embed(text)
    }

    fn embedding_dim(&self) -> usize {
        self.embedder.dim()
    }
}

fn wildcard_match(pattern: &str, text: &str) -> bool {
    let p: Vec<char> = pattern.chars().collect();
    let t: Vec<char> = text.chars().collect();
    let (mut pi, mut ti) = (0, 0);
    let mut star: Option<(usize, usize)> = None;
    while ti < t.len() {
        if pi < p.len() && p[pi] == '*' {
            star = Some((pi, ti));
            pi += 1;
        } else if pi < p.len() && p[pi] == t[ti] {
            pi += 1;
            ti += 1;
        } else if let Some((sp, st)) = star {
            pi = sp + 1;
            ti = st + 1;
            star = Some((sp, st + 1));
        } else {
            return false;
        }
    }
    p[pi..].iter().all(|&c| c == '*')
}
