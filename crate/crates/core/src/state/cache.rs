use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use std::collections::{BTreeMap, HashMap};
use std::sync::{Arc, Mutex};
use std::time::{Duration, SystemTime};

use super::{Clock, StateError, StoredImage, SystemClock};
use crate::coordinator::OrchestrationTrace;
use crate::protocol::A2AResult;
use crate::provider::Role;

pub const DEFAULT_TTL: Duration = Duration::from_secs(30 * 60);

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionMessage {
    pub role: Role,
    pub text: String,
}

#[derive(Debug, Clone)]
pub struct SessionContext {
    pub session_id: String,
    pub messages: Vec<SessionMessage>,
    /// Uploaded images, oldest first.
    pub images: Vec<StoredImage>,
    /// Latest partial answer per sub-question.
    pub partials: BTreeMap<String, A2AResult>,
    pub last_trace: Option<OrchestrationTrace>,
    pub created_at: SystemTime,
    pub last_touched: SystemTime,
    pub ttl: Duration,
    scratch: BTreeMap<String, Value>,
}

impl SessionContext {
    fn new(session_id: String, now: SystemTime, ttl: Duration) -> Self {
        Self {
            session_id,
            messages: Vec::new(),
            images: Vec::new(),
            partials: BTreeMap::new(),
            last_trace: None,
            created_at: now,
            last_touched: now,
            ttl,
            scratch: BTreeMap::new(),
        }
    }

    fn expired_at(&self, now: SystemTime) -> bool {
        now.duration_since(self.last_touched)
            .map(|idle| idle > self.ttl)
            .unwrap_or(false)
    }

    fn touch(&mut self, now: SystemTime) {
        if now > self.last_touched {
            self.last_touched = now;
        }
    }

    pub fn latest_image(&self) -> Option<&StoredImage> {
        self.images.last()
    }

    pub fn image(&self, hash: &str) -> Option<&StoredImage> {
        self.images.iter().rev().find(|i| i.hash == hash)
    }

    pub fn add_image(&mut self, image: StoredImage) {
        self.images.push(image);
    }

    pub fn push_message(&mut self, role: Role, text: impl Into<String>) {
        self.messages.push(SessionMessage {
            role,
            text: text.into(),
        });
    }

    /// Resolves a field path. Reserved paths: `messages`, `images`,
    /// `images.latest`, `images.<hash>`, `partials`, `trace`; anything else
    /// is a free-form field written by `put`.
    fn get_path(&self, path: &str) -> Option<Value> {
        match path {
            "messages" => Some(json!(self.messages)),
            "images" => Some(Value::Array(
                self.images
                    .iter()
                    .map(|i| json!({"hash": i.hash, "media_type": i.media_type, "size": i.bytes.len()}))
                    .collect(),
            )),
            "images.latest" => self.latest_image().map(|i| json!(i)),
            "partials" => Some(json!(self.partials)),
            "trace" => self.last_trace.as_ref().map(|t| json!(t)),
            p => match p.strip_prefix("images.") {
                Some(hash) => self.image(hash).map(|i| json!(i)),
                None => self.scratch.get(p).cloned(),
            },
        }
    }
}

fn is_reserved(path: &str) -> bool {
    matches!(path, "messages" | "images" | "partials" | "trace") || path.starts_with("images.")
}

/// Memory-only per-session store with idle expiry driven by an injectable
/// clock. Expired sessions are unreadable and are dropped on access.
#[derive(Debug)]
pub struct ContextCache {
    sessions: Mutex<HashMap<String, SessionContext>>,
    ttl: Duration,
    clock: Arc<dyn Clock>,
}

impl Default for ContextCache {
    fn default() -> Self {
        Self::new(DEFAULT_TTL, Arc::new(SystemClock))
    }
}

impl ContextCache {
    pub fn new(ttl: Duration, clock: Arc<dyn Clock>) -> Self {
        Self {
            sessions: Mutex::new(HashMap::new()),
            ttl,
            clock,
        }
    }

    pub fn ttl(&self) -> Duration {
        self.ttl
    }

    fn lock(&self) -> std::sync::MutexGuard<'_, HashMap<String, SessionContext>> {
        self.sessions.lock().unwrap_or_else(|e| e.into_inner())
    }

    /// Returns the live session, creating it (or replacing an expired one).
    pub fn ensure(&self, session_id: &str) -> String {
        let now = self.clock.now();
        let mut sessions = self.lock();
        let fresh = match sessions.get_mut(session_id) {
            Some(s) if !s.expired_at(now) => {
                s.touch(now);
                false
            }
            _ => true,
        };
        if fresh {
            sessions.insert(
                session_id.to_string(),
                SessionContext::new(session_id.to_string(), now, self.ttl),
            );
        }
        session_id.to_string()
    }

    pub fn create(&self) -> String {
        self.ensure(&uuid::Uuid::new_v4().to_string())
    }

    pub fn exists(&self, session_id: &str) -> bool {
        self.read(session_id, |_| ()).is_ok()
    }

    /// Runs `f` against a live session without touching it.
    pub fn read<R>(
        &self,
        session_id: &str,
        f: impl FnOnce(&SessionContext) -> R,
    ) -> Result<R, StateError> {
        let now = self.clock.now();
        let mut sessions = self.lock();
        match sessions.get(session_id) {
            Some(s) if !s.expired_at(now) => Ok(f(s)),
            Some(_) => {
                sessions.remove(session_id);
                Err(StateError::NotFound(format!("session '{session_id}' expired")))
            }
            None => Err(StateError::NotFound(format!("session '{session_id}'"))),
        }
    }

    /// Mutates a live session and touches it.
    pub fn update<R>(
        &self,
        session_id: &str,
        f: impl FnOnce(&mut SessionContext) -> R,
    ) -> Result<R, StateError> {
        let now = self.clock.now();
        let mut sessions = self.lock();
        match sessions.get_mut(session_id) {
            Some(s) if !s.expired_at(now) => {
                s.touch(now);
                Ok(f(s))
            }
            Some(_) => {
                sessions.remove(session_id);
                Err(StateError::NotFound(format!("session '{session_id}' expired")))
            }
            None => Err(StateError::NotFound(format!("session '{session_id}'"))),
        }
    }

    /// Writes a free-form field, creating the session if needed.
    pub fn put(&self, session_id: &str, path: &str, value: Value) -> Result<(), StateError> {
        if path.is_empty() || is_reserved(path) {
            return Err(StateError::InvalidArgument(format!(
                "field path '{path}' is reserved or empty"
            )));
        }
        self.ensure(session_id);
        self.update(session_id, |s| {
            s.scratch.insert(path.to_string(), value);
        })
    }

    pub fn get(&self, session_id: &str, path: &str) -> Result<Value, StateError> {
        self.read(session_id, |s| s.get_path(path))?
            .ok_or_else(|| StateError::NotFound(format!("field '{path}' in session '{session_id}'")))
    }

    pub fn touch(&self, session_id: &str) -> Result<(), StateError> {
        self.update(session_id, |_| ())
    }

    pub fn purge_expired(&self) -> usize {
        let now = self.clock.now();
        let mut sessions = self.lock();
        let before = sessions.len();
        sessions.retain(|_, s| !s.expired_at(now));
        before - sessions.len()
    }
}
