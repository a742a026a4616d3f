//! Deterministic seed derivation.
//!
//! Every stochastic component draws from a `ChaCha8Rng` seeded through
//! [`derive`], so independent subsystems (walks, restarts, agents, ticks)
//! get decorrelated streams that are reproducible across platforms and
//! independent of thread scheduling.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

/// Derives a child seed from a base seed, a domain tag, and index parts.
pub fn derive(base: u64, tag: &str, parts: &[u64]) -> u64 {
    let mut hasher = Sha256::new();
    hasher.update(base.to_le_bytes());
    hasher.update([tag.len() as u8]);
    hasher.update(tag.as_bytes());
    for part in parts {
        hasher.update(part.to_le_bytes());
    }
    let digest = hasher.finalize();
    u64::from_le_bytes(digest[..8].try_into().expect("digest is at least 8 bytes"))
}

/// A seeded RNG for the given stream.
pub fn rng(base: u64, tag: &str, parts: &[u64]) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive(base, tag, parts))
}
