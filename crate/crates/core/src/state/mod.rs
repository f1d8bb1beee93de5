//! Vector store for persistent semantic memory and a TTL context cache for
//! per-session data.

mod cache;
mod clock;
mod vector;

pub use cache::{ContextCache, SessionContext, SessionMessage, DEFAULT_TTL};
pub use clock::{Clock, ManualClock, SystemClock};
pub use vector::{SearchHit, VectorKey, VectorRecord, VectorStore};

use base64::Engine;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::sync::Arc;

#[derive(Debug, thiserror::Error)]
pub enum StateError {
    #[error("vector dimension {got} does not match store dimension {expected}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("not found: {0}")]
    NotFound(String),
    #[error("state file error: {0}")]
    Io(#[from] std::io::Error),
    #[error("corrupt state file {path} line {line}: {detail}")]
    Corrupt {
        path: String,
        line: usize,
        detail: String,
    },
}

/// An uploaded image addressed by the SHA-256 hex digest of its bytes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StoredImage {
    pub hash: String,
    pub media_type: String,
    pub bytes: Arc<Vec<u8>>,
}

impl StoredImage {
    pub fn new(media_type: impl Into<String>, bytes: Vec<u8>) -> Self {
        Self {
            hash: content_hash(&bytes),
            media_type: media_type.into(),
            bytes: Arc::new(bytes),
        }
    }
}

pub fn content_hash(bytes: &[u8]) -> String {
    let digest = Sha256::digest(bytes);
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

#[derive(Serialize, Deserialize)]
struct StoredImageWire {
    hash: String,
    media_type: String,
    data: String,
}

impl Serialize for StoredImage {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        StoredImageWire {
            hash: self.hash.clone(),
            media_type: self.media_type.clone(),
            data: base64::engine::general_purpose::STANDARD.encode(self.bytes.as_slice()),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for StoredImage {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let w = StoredImageWire::deserialize(d)?;
        let bytes = base64::engine::general_purpose::STANDARD
            .decode(w.data.as_bytes())
            .map_err(serde::de::Error::custom)?;
        let image = StoredImage::new(w.media_type, bytes);
        if image.hash != w.hash {
            return Err(serde::de::Error::custom("image hash does not match its bytes"));
        }
        Ok(image)
    }
}
