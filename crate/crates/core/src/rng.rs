//! Keyed random streams.
//!
//! Every randomized operation derives its generator from an explicit seed plus
//! a small tuple of stream coordinates (pair index, trial index, ...). Results
//! therefore do not depend on evaluation order or thread scheduling.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Generator for the stream identified by `(seed, a, b, c)`.
pub fn stream(seed: u64, a: u64, b: u64, c: u64) -> ChaCha8Rng {
    let mut key = [0u8; 32];
    for (chunk, word) in key.chunks_exact_mut(8).zip([seed, a, b, c]) {
        chunk.copy_from_slice(&word.to_le_bytes());
    }
    ChaCha8Rng::from_seed(key)
}
