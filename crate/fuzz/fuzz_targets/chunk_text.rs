#![no_main]

use agentmesh_core::agents::ir::{chunk_text, ChunkConfig};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|input: (u8, u8, &str)| {
    let (max, overlap, text) = input;
    let config = ChunkConfig {
        max_chars: max as usize % 200 + 1,
        overlap: overlap as usize % 100,
    };
    for chunk in chunk_text(text, config) {
        assert!(!chunk.is_empty());
        assert!(chunk.chars().count() <= config.max_chars);
    }
});
