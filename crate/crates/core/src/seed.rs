//! Named seed derivation. Every random stream is keyed by
//! `(master seed, stage, key)` so stages and groups can be replayed on their own.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

pub fn derive(master: u64, stage: &str, key: &str) -> u64 {
    let mut hasher = Sha256::new();
    hasher.update(master.to_le_bytes());
    hasher.update((stage.len() as u64).to_le_bytes());
    hasher.update(stage.as_bytes());
    hasher.update(key.as_bytes());
    let digest = hasher.finalize();
    let mut bytes = [0u8; 8];
    bytes.copy_from_slice(&digest[..8]);
    u64::from_le_bytes(bytes)
}

pub fn rng(master: u64, stage: &str, key: &str) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive(master, stage, key))
}
