//! Sentence-aware greedy chunking.
//!
//! Text is cut into units (sentences within paragraphs; over-long sentences
//! are hard-split), then units are packed greedily into chunks of at most
//! `max_chars` characters joined by single spaces. Each new chunk is seeded
//! with the longest run of trailing units from the previous chunk that fits
//! in `overlap` characters, dropped if it would leave no room for the next
//! unit.

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ChunkConfig {
    pub max_chars: usize,
    pub overlap: usize,
}

impl Default for ChunkConfig {
    fn default() -> Self {
        Self {
            max_chars: 800,
            overlap: 100,
        }
    }
}

fn char_len(s: &str) -> usize {
    s.chars().count()
}

/// Sentences and paragraph pieces, whitespace-collapsed, each at most
/// `max_chars` characters long.
pub fn split_units(text: &str, max_chars: usize) -> Vec<String> {
    let mut units = Vec::new();
    let mut paragraph = Vec::new();
    let flush = |paragraph: &mut Vec<&str>, units: &mut Vec<String>| {
        if paragraph.is_empty() {
            return;
        }
        let joined = paragraph.join(" ");
        paragraph.clear();
        let collapsed = joined.split_whitespace().collect::<Vec<_>>().join(" ");
        for sentence in sentences(&collapsed) {
            hard_split(sentence, max_chars, units);
        }
    };
    for line in text.lines() {
        if line.trim().is_empty() {
            flush(&mut paragraph, &mut units);
        } else {
            paragraph.push(line);
        }
    }
    flush(&mut paragraph, &mut units);
    units
}

fn sentences(paragraph: &str) -> Vec<&str> {
    let mut out = Vec::new();
    let mut start = 0;
    let mut chars = paragraph.char_indices().peekable();
    while let Some((i, c)) = chars.next() {
        if matches!(c, '.' | '!' | '?') && chars.peek().is_some_and(|(_, n)| n.is_whitespace()) {
            let end = i + c.len_utf8();
            let s = paragraph[start..end].trim();
            if !s.is_empty() {
                out.push(s);
            }
            start = end;
        }
    }
    let tail = paragraph[start..].trim();
    if !tail.is_empty() {
        out.push(tail);
    }
    out
}

fn hard_split(sentence: &str, max_chars: usize, out: &mut Vec<String>) {
    let chars: Vec<char> = sentence.chars().collect();
    for piece in chars.chunks(max_chars.max(1)) {
        let s: String = piece.iter().collect();
        let s = s.trim();
        if !s.is_empty() {
            out.push(s.to_string());
        }
    }
}

fn joined_len(units: &[String]) -> usize {
    if units.is_empty() {
        0
    } else {
        units.iter().map(|u| char_len(u)).sum::<usize>() + units.len() - 1
    }
}

pub fn chunk_text(text: &str, config: ChunkConfig) -> Vec<String> {
    let units = split_units(text, config.max_chars);
    let mut chunks = Vec::new();
    let mut current: Vec<String> = Vec::new();
    for unit in units {
        let mut candidate = current.clone();
        candidate.push(unit.clone());
        if joined_len(&candidate) <= config.max_chars {
            current = candidate;
            continue;
        }
        chunks.push(current.join(" "));
        let mut keep = 0;
        while keep < current.len() && joined_len(&current[current.len() - keep - 1..]) <= config.overlap {
            keep += 1;
        }
        let mut next: Vec<String> = current[current.len() - keep..].to_vec();
        next.push(unit.clone());
        if joined_len(&next) > config.max_chars {
            next = vec![unit];
        }
        current = next;
    }
    if !current.is_empty() {
        chunks.push(current.join(" "));
    }
    chunks
}
