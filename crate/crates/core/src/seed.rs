//! Sub-seed derivation.
//!
//! A sub-seed is the first eight bytes of `SHA-256(master_le || tag)`. Tags
//! name the consumer (`"subsample/22/happiness"`, `"tree/17"`, ...), which
//! makes every random stream addressable independently of execution order.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

/// Derives a child seed from `master` and a tag.
pub fn derive(master: u64, tag: &str) -> u64 {
    let mut hasher = Sha256::new();
    hasher.update(master.to_le_bytes());
    hasher.update(tag.as_bytes());
    let digest = hasher.finalize();
    let mut bytes = [0u8; 8];
    bytes.copy_from_slice(&digest[..8]);
    u64::from_le_bytes(bytes)
}

/// Seeded generator used throughout the crate.
pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Shorthand for `rng(derive(master, tag))`.
pub fn rng_for(master: u64, tag: &str) -> ChaCha8Rng {
    rng(derive(master, tag))
}
