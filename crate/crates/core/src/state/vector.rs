use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::{Mutex, RwLock};

use super::StateError;
use crate::provider::{cosine, l2_norm};

const UNIT_NORM_TOLERANCE: f64 = 1e-6;

/// Record key; the derived ordering (doc id, then chunk index) is the
/// tie-break order for equal similarities.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct VectorKey {
    pub doc_id: String,
    pub chunk_index: u32,
}

impl VectorKey {
    pub fn new(doc_id: impl Into<String>, chunk_index: u32) -> Self {
        Self {
            doc_id: doc_id.into(),
            chunk_index,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VectorRecord {
    #[serde(flatten)]
    pub key: VectorKey,
    pub vector: Vec<f64>,
    pub payload: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SearchHit {
    pub key: VectorKey,
    pub similarity: f64,
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case")]
enum LogLine {
    Put(VectorRecord),
    DeleteDoc { doc_id: String },
}

/// Exact cosine-similarity index. Optionally backed by a newline-delimited
/// JSON log that is compacted each time the store is opened.
#[derive(Debug)]
pub struct VectorStore {
    dim: usize,
    records: RwLock<BTreeMap<VectorKey, VectorRecord>>,
    log: Option<Mutex<PathBuf>>,
}

impl VectorStore {
    pub fn in_memory(dim: usize) -> Self {
        Self {
            dim,
            records: RwLock::new(BTreeMap::new()),
            log: None,
        }
    }

    pub fn open(path: impl AsRef<Path>, dim: usize) -> Result<Self, StateError> {
        let path = path.as_ref().to_path_buf();
        let mut records = BTreeMap::new();
        if path.exists() {
            let reader = BufReader::new(File::open(&path)?);
            for (n, line) in reader.lines().enumerate() {
                let line = line?;
                if line.trim().is_empty() {
                    continue;
                }
                let corrupt = |detail: String| StateError::Corrupt {
                    path: path.display().to_string(),
                    line: n + 1,
                    detail,
                };
                match serde_json::from_str::<LogLine>(&line).map_err(|e| corrupt(e.to_string()))? {
                    LogLine::Put(r) => {
                        if r.vector.len() != dim {
                            return Err(corrupt(format!(
                                "vector dimension {} != {dim}",
                                r.vector.len()
                            )));
                        }
                        records.insert(r.key.clone(), r);
                    }
                    LogLine::DeleteDoc { doc_id } => records.retain(|k, _| k.doc_id != doc_id),
                }
            }
        } else if let Some(parent) = path.parent() {
            std::fs::create_dir_all(parent)?;
        }
        let store = Self {
            dim,
            records: RwLock::new(records),
            log: Some(Mutex::new(path)),
        };
        store.compact()?;
        Ok(store)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.records.read().unwrap_or_else(|e| e.into_inner()).len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Inserts or replaces a record.
    pub fn add(&self, record: VectorRecord) -> Result<(), StateError> {
        if record.vector.len() != self.dim {
            return Err(StateError::DimensionMismatch {
                expected: self.dim,
                got: record.vector.len(),
            });
        }
        if (l2_norm(&record.vector) - 1.0).abs() > UNIT_NORM_TOLERANCE {
            return Err(StateError::InvalidArgument(
                "vector must have unit L2 norm".into(),
            ));
        }
        let mut records = self.records.write().unwrap_or_else(|e| e.into_inner());
        self.append(&LogLine::Put(record.clone()))?;
        records.insert(record.key.clone(), record);
        Ok(())
    }

    /// Drops every chunk of `doc_id`; returns how many were removed.
    pub fn remove_doc(&self, doc_id: &str) -> Result<usize, StateError> {
        let mut records = self.records.write().unwrap_or_else(|e| e.into_inner());
        let before = records.len();
        records.retain(|k, _| k.doc_id != doc_id);
        let removed = before - records.len();
        if removed > 0 {
            self.append(&LogLine::DeleteDoc {
                doc_id: doc_id.to_string(),
            })?;
        }
        Ok(removed)
    }

    pub fn get(&self, key: &VectorKey) -> Option<VectorRecord> {
        self.records
            .read()
            .unwrap_or_else(|e| e.into_inner())
            .get(key)
            .cloned()
    }

    /// Top-`k` records by cosine similarity, descending, ties broken by
    /// ascending key.
    pub fn search(&self, query: &[f64], k: usize) -> Result<Vec<SearchHit>, StateError> {
        if query.len() != self.dim {
            return Err(StateError::DimensionMismatch {
                expected: self.dim,
                got: query.len(),
            });
        }
        if k == 0 {
            return Ok(Vec::new());
        }
        let records = self.records.read().unwrap_or_else(|e| e.into_inner());
        let mut hits: Vec<SearchHit> = records
            .values()
            .map(|r| SearchHit {
                key: r.key.clone(),
                similarity: cosine(query, &r.vector),
            })
            .collect();
        // BTreeMap iteration is key-ascending and the sort is stable, so
        // equal similarities keep key order.
        hits.sort_by(|a, b| b.similarity.total_cmp(&a.similarity));
        hits.truncate(k);
        Ok(hits)
    }

    fn append(&self, line: &LogLine) -> Result<(), StateError> {
        let Some(log) = &self.log else {
            return Ok(());
        };
        let path = log.lock().unwrap_or_else(|e| e.into_inner());
        let mut file = OpenOptions::new().create(true).append(true).open(&*path)?;
        let mut buf = serde_json::to_vec(line).expect("log lines serialize");
        buf.push(b'\n');
        file.write_all(&buf)?;
        Ok(())
    }

    /// Rewrites the backing file so it holds exactly the live records.
    pub fn compact(&self) -> Result<(), StateError> {
        let Some(log) = &self.log else {
            return Ok(());
        };
        let records = self.records.read().unwrap_or_else(|e| e.into_inner());
        let path = log.lock().unwrap_or_else(|e| e.into_inner());
        let tmp = path.with_extension("ndjson.tmp");
        {
            let mut w = BufWriter::new(File::create(&tmp)?);
            for r in records.values() {
                serde_json::to_writer(&mut w, &LogLine::Put(r.clone()))
                    .map_err(|e| StateError::Io(e.into()))?;
                w.write_all(b"\n")?;
            }
            w.flush()?;
        }
        std::fs::rename(&tmp, &*path)?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::provider::HashingEmbedder;

    fn record(doc: &str, idx: u32, text: &str) -> VectorRecord {
        VectorRecord {
            key: VectorKey::new(doc, idx),
            vector: HashingEmbedder::new(16).embed(text).unwrap(),
            payload: text.into(),
        }
    }

    #[test]
    fn own_vector_ranks_first() {
        let s = VectorStore::in_memory(16);
        s.add(record("a", 0, "steel truss")).unwrap();
        s.add(record("b", 0, "concrete arch lifespan")).unwrap();
        let q = record("b", 0, "concrete arch lifespan").vector;
        let hits = s.search(&q, 1).unwrap();
        assert_eq!(hits[0].key, VectorKey::new("b", 0));
        assert!((hits[0].similarity - 1.0).abs() < 1e-12);
    }

    #[test]
    fn dimension_and_norm_checked() {
        let s = VectorStore::in_memory(8);
        assert!(matches!(
            s.add(record("a", 0, "x")),
            Err(StateError::DimensionMismatch { expected: 8, got: 16 })
        ));
        let bad = VectorRecord {
            key: VectorKey::new("a", 0),
            vector: vec![1.0; 8],
            payload: String::new(),
        };
        assert!(matches!(s.add(bad), Err(StateError::InvalidArgument(_))));
        assert!(s.search(&[0.0; 3], 1).is_err());
    }

    #[test]
    fn replace_key_returns_new_payload() {
        let s = VectorStore::in_memory(16);
        s.add(record("a", 0, "old text")).unwrap();
        s.add(record("a", 0, "new text")).unwrap();
        assert_eq!(s.len(), 1);
        assert_eq!(s.get(&VectorKey::new("a", 0)).unwrap().payload, "new text");
    }

    #[test]
    fn empty_store_and_large_k() {
        let s = VectorStore::in_memory(16);
        let q = record("q", 0, "anything").vector;
        assert!(s.search(&q, 4).unwrap().is_empty());
        s.add(record("a", 0, "x")).unwrap();
        s.add(record("a", 1, "y")).unwrap();
        assert_eq!(s.search(&q, 10).unwrap().len(), 2);
        assert!(s.search(&q, 0).unwrap().is_empty());
    }

    #[test]
    fn ties_break_by_key() {
        let s = VectorStore::in_memory(16);
        for (doc, idx) in [("b", 1), ("a", 2), ("b", 0), ("a", 0)] {
            s.add(record(doc, idx, "same text")).unwrap();
        }
        let q = record("q", 0, "same text").vector;
        let keys: Vec<_> = s.search(&q, 4).unwrap().into_iter().map(|h| h.key).collect();
        assert_eq!(
            keys,
            [
                VectorKey::new("a", 0),
                VectorKey::new("a", 2),
                VectorKey::new("b", 0),
                VectorKey::new("b", 1)
            ]
        );
    }

    #[test]
    fn persistence_replays_and_compacts() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("vectors.ndjson");
        {
            let s = VectorStore::open(&path, 16).unwrap();
            s.add(record("a", 0, "one")).unwrap();
            s.add(record("a", 0, "one again")).unwrap();
            s.add(record("b", 0, "two")).unwrap();
            s.add(record("c", 0, "three")).unwrap();
            s.remove_doc("c").unwrap();
        }
        let lines_before = std::fs::read_to_string(&path).unwrap().lines().count();
        assert_eq!(lines_before, 5);
        let s = VectorStore::open(&path, 16).unwrap();
        assert_eq!(s.len(), 2);
        assert_eq!(s.get(&VectorKey::new("a", 0)).unwrap().payload, "one again");
        assert_eq!(std::fs::read_to_string(&path).unwrap().lines().count(), 2);
        assert!(VectorStore::open(&path, 8).is_err());
    }

    #[test]
    fn corrupt_file_reports_line() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("v.ndjson");
        std::fs::write(&path, "{\"op\":\"put\"\n").unwrap();
        match VectorStore::open(&path, 16) {
            Err(StateError::Corrupt { line, .. }) => assert_eq!(line, 1),
            other => panic!("{other:?}"),
        }
    }
}
