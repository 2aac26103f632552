//! Replication seed derivation.
//!
//! Replication `k` of an experiment draws from a key obtained by hashing
//! `(master_seed, kind tag, k)` with SHA-256.  The encoding is
//! length-prefixed, so the map is injective; replications can therefore run
//! in any order (or concurrently) without changing a single record.

use gote_core::rng::SeedKey;
use sha2::{Digest, Sha256};

/// Key for replication `k` of the experiment tagged `tag`.
pub fn replication_key(master_seed: u64, tag: &str, k: u64) -> SeedKey {
    let mut hasher = Sha256::new();
    hasher.update(master_seed.to_le_bytes());
    hasher.update((tag.len() as u64).to_le_bytes());
    hasher.update(tag.as_bytes());
    hasher.update(k.to_le_bytes());
    SeedKey::from_bytes(hasher.finalize().into())
}

/// Key for experiment-level draws shared across replications (for example
/// a random direction), separated from every per-replication key by the
/// tag suffix.
pub fn shared_key(master_seed: u64, tag: &str) -> SeedKey {
    replication_key(master_seed, &format!("{tag}/shared"), 0)
}
