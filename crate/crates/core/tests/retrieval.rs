mod common;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::json;
use std::sync::Arc;

use agentmesh_core::agents::ir::{chunk_text, ChunkConfig, EMPTY_CORPUS_ANSWER};
use agentmesh_core::agents::IrAgent;
use agentmesh_core::protocol::Citation;
use agentmesh_core::provider::{HashingEmbedder, ScriptedProvider};
use agentmesh_core::state::{VectorKey, VectorRecord, VectorStore};

const VOCAB: &[&str] = &[
    "bridge", "deck", "pier", "span", "truss", "arch", "steel", "concrete", "traffic", "load",
    "fatigue", "corrosion", "inspection", "scour", "bearing", "joint", "girder", "cable",
];

fn random_text(rng: &mut ChaCha8Rng) -> String {
    let n = rng.gen_range(1..6);
    (0..n).map(|_| *VOCAB.choose(rng).unwrap()).collect::<Vec<_>>().join(" ")
}

/// Plain exhaustive scan: cosine for every record, sort by similarity
/// descending then key ascending.
fn brute_force(records: &[VectorRecord], q: &[f64], k: usize) -> Vec<(VectorKey, f64)> {
    let norm = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>().sqrt();
    let mut all: Vec<(VectorKey, f64)> = records
        .iter()
        .map(|r| {
            let dot: f64 = q.iter().zip(&r.vector).map(|(a, b)| a * b).sum();
            (r.key.clone(), dot / (norm(q) * norm(&r.vector)))
        })
        .collect();
    all.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then_with(|| a.0.cmp(&b.0)));
    all.truncate(k);
    all
}

fn seeded_corpus(seed: u64) -> (Vec<VectorRecord>, ChaCha8Rng) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let e = HashingEmbedder::default();
    let mut texts: Vec<String> = (0..40).map(|_| random_text(&mut rng)).collect();
    // exact duplicates force similarity ties
    for i in 0..10 {
        texts.push(texts[i * 3].clone());
    }
    let records = texts
        .into_iter()
        .enumerate()
        .map(|(i, t)| VectorRecord {
            key: VectorKey::new(format!("doc{}", i % 7), (i / 7) as u32),
            vector: e.embed(&t).unwrap(),
            payload: t,
        })
        .collect();
    (records, rng)
}

#[test]
fn top4_equals_exhaustive_ranking() {
    let (records, mut rng) = seeded_corpus(0x5eed);
    let store = VectorStore::in_memory(HashingEmbedder::default().dim());
    // insertion order is shuffled so tie order cannot come from insertion
    let mut shuffled = records.clone();
    shuffled.shuffle(&mut rng);
    for r in shuffled {
        store.add(r).unwrap();
    }
    assert_eq!(store.len(), 50);
    let e = HashingEmbedder::default();
    let mut ties = 0;
    for _ in 0..100 {
        let q = e.embed(&random_text(&mut rng)).unwrap();
        let got = store.search(&q, 4).unwrap();
        let want = brute_force(&records, &q, 4);
        let got: Vec<_> = got.into_iter().map(|h| (h.key, h.similarity)).collect();
        assert_eq!(got, want);
        ties += want.windows(2).filter(|w| w[0].1 == w[1].1).count();
    }
    assert!(ties > 0, "corpus should exercise tie order");
}

#[test]
fn store_contract_examples() {
    let e = HashingEmbedder::default();
    let store = VectorStore::in_memory(e.dim());
    assert!(store.search(&e.embed("deck").unwrap(), 4).unwrap().is_empty());
    let v = e.embed("steel truss").unwrap();
    store
        .add(VectorRecord { key: VectorKey::new("a", 0), vector: v.clone(), payload: "old".into() })
        .unwrap();
    let hits = store.search(&v, 10).unwrap();
    assert_eq!(hits.len(), 1);
    assert!((hits[0].similarity - 1.0).abs() < 1e-12);
    store
        .add(VectorRecord { key: VectorKey::new("a", 0), vector: v.clone(), payload: "new".into() })
        .unwrap();
    assert_eq!(store.get(&VectorKey::new("a", 0)).unwrap().payload, "new");
    let bad = VectorRecord { key: VectorKey::new("b", 0), vector: vec![1.0; 3], payload: String::new() };
    assert!(store.add(bad).is_err());
}

#[test]
fn persisted_store_survives_reopen() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("vectors.ndjson");
    let (records, _) = seeded_corpus(7);
    {
        let store = VectorStore::open(&path, 256).unwrap();
        for r in records.iter().cloned() {
            store.add(r).unwrap();
        }
        store.remove_doc("doc3").unwrap();
    }
    let reopened = VectorStore::open(&path, 256).unwrap();
    let kept: Vec<_> = records.iter().filter(|r| r.key.doc_id != "doc3").cloned().collect();
    assert_eq!(reopened.len(), kept.len());
    let q = HashingEmbedder::default().embed("steel bridge").unwrap();
    let got: Vec<_> = reopened.search(&q, 4).unwrap().into_iter().map(|h| (h.key, h.similarity)).collect();
    assert_eq!(got, brute_force(&kept, &q, 4));
}

/// Reference splitter: word-level sentence detection, then greedy packing
/// over prefix sums of unit lengths.
fn oracle_chunk_count(text: &str, c: usize, overlap: usize) -> usize {
    let mut units: Vec<usize> = Vec::new();
    let normalized = text.replace("\r\n", "\n");
    for para in normalized.split("\n\n") {
        let words: Vec<&str> = para.split_whitespace().collect();
        let mut sentence: Vec<&str> = Vec::new();
        for (i, w) in words.iter().enumerate() {
            sentence.push(w);
            if w.ends_with(['.', '!', '?']) || i + 1 == words.len() {
                let chars: Vec<char> = sentence.join(" ").chars().collect();
                let mut at = 0;
                while at < chars.len() {
                    let piece: String = chars[at..(at + c).min(chars.len())].iter().collect();
                    let len = piece.trim().chars().count();
                    if len > 0 {
                        units.push(len);
                    }
                    at += c;
                }
                sentence.clear();
            }
        }
    }
    let mut prefix = vec![0usize];
    for u in &units {
        prefix.push(prefix.last().unwrap() + u);
    }
    // characters of units[s..e] joined by single spaces
    let span = |s: usize, e: usize| prefix[e] - prefix[s] + (e - s).saturating_sub(1);
    let (mut s, mut count) = (0, 0);
    while s < units.len() {
        let mut e = s + 1;
        while e < units.len() && span(s, e + 1) <= c {
            e += 1;
        }
        count += 1;
        if e == units.len() {
            break;
        }
        let mut next = e;
        while next > s && span(next - 1, e) <= overlap {
            next -= 1;
        }
        if next < e && span(next, e + 1) > c {
            next = e;
        }
        s = next;
    }
    count
}

fn fixture_doc_2000() -> String {
    let docs = common::fixtures().corpus().unwrap();
    let all: Vec<&str> = docs.iter().map(|(_, t)| t.as_str()).collect();
    all.join("\n\n").chars().take(2000).collect()
}

#[test]
fn chunk_count_matches_reference_splitter() {
    let doc = fixture_doc_2000();
    assert_eq!(doc.chars().count(), 2000);
    let want = oracle_chunk_count(&doc, 800, 100);
    let got = chunk_text(&doc, ChunkConfig::default());
    assert_eq!(got.len(), want);
    // frozen from the reference splitter
    assert_eq!(want, 3);
    assert!(got.iter().all(|c| c.chars().count() <= 800));
}

#[test]
fn chunk_counts_agree_on_random_documents() {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    for _ in 0..300 {
        let mut doc = String::new();
        for _ in 0..rng.gen_range(1..40) {
            let words = rng.gen_range(1..30);
            let s: Vec<String> = (0..words)
                .map(|_| "x".repeat(rng.gen_range(1..12)))
                .collect();
            doc.push_str(&s.join(" "));
            doc.push_str(["." , "!", "?"][rng.gen_range(0..3)]);
            doc.push_str(if rng.gen_bool(0.2) { "\n\n" } else { " " });
        }
        let (c, o) = (rng.gen_range(20..200), rng.gen_range(0..40));
        let cfg = ChunkConfig { max_chars: c, overlap: o };
        assert_eq!(chunk_text(&doc, cfg).len(), oracle_chunk_count(&doc, c, o), "{doc:?} c={c} o={o}");
    }
}

fn ir_agent(script: serde_json::Value) -> (IrAgent, Arc<ScriptedProvider>) {
    let provider = Arc::new(ScriptedProvider::from_json(&script.to_string()).unwrap());
    let store = Arc::new(VectorStore::in_memory(256));
    (IrAgent::new(provider.clone(), store), provider)
}

#[tokio::test]
async fn empty_corpus_answers_without_model_call() {
    let (agent, provider) = ir_agent(json!([]));
    let a = agent.answer("anything?", 4).await.unwrap();
    assert_eq!(a.text, EMPTY_CORPUS_ANSWER);
    assert!(a.citations.is_empty());
    assert_eq!(provider.calls(), 0);
}

#[tokio::test]
async fn ingest_replaces_and_answer_cites_retrieved_chunks() {
    let (agent, _) = ir_agent(json!([{ "purpose": "ir_answer", "match_key": "*", "response": "grounded" }]));
    assert_eq!(agent.ingest("short", &"a".repeat(100)).unwrap(), 1);
    assert!(agent.ingest("empty", "   ").is_err());
    for (id, text) in common::fixtures().corpus().unwrap() {
        agent.ingest(&id, &text).unwrap();
    }
    let total = agent.store().len();
    let (id, text) = &common::fixtures().corpus().unwrap()[0];
    agent.ingest(id, text).unwrap();
    assert_eq!(agent.store().len(), total);

    let q = "How do you calculate the average daily traffic?";
    let a = agent.answer(q, 4).await.unwrap();
    assert_eq!(a.text, "grounded");
    let e = HashingEmbedder::default();
    let records: Vec<VectorRecord> = common::fixtures()
        .corpus()
        .unwrap()
        .iter()
        .chain([("short".to_string(), "a".repeat(100))].iter())
        .flat_map(|(id, t)| {
            chunk_text(t, ChunkConfig::default())
                .into_iter()
                .enumerate()
                .map(|(i, c)| VectorRecord {
                    key: VectorKey::new(id.clone(), i as u32),
                    vector: e.embed(&c).unwrap(),
                    payload: c,
                })
                .collect::<Vec<_>>()
        })
        .collect();
    let want: Vec<Citation> = brute_force(&records, &e.embed(q).unwrap(), 4)
        .into_iter()
        .map(|(k, _)| Citation { doc_id: k.doc_id, chunk_index: k.chunk_index })
        .collect();
    assert_eq!(a.citations, want);
    assert_eq!(a.citations[0].doc_id, "traffic_counting");
}

#[tokio::test]
async fn question_equal_to_a_chunk_ranks_it_first() {
    let (agent, _) = ir_agent(json!([{ "purpose": "ir_answer", "match_key": "*", "response": "ok" }]));
    for (id, text) in common::fixtures().corpus().unwrap() {
        agent.ingest(&id, &text).unwrap();
    }
    let target = agent.store().get(&VectorKey::new("steel_truss_bridges", 1)).unwrap();
    let a = agent.answer(&target.payload, 4).await.unwrap();
    assert_eq!(a.citations[0], Citation { doc_id: "steel_truss_bridges".into(), chunk_index: 1 });
}
