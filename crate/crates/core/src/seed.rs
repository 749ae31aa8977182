//! Seed splitting.
//!
//! Every random stream is keyed by `(master seed, purpose, indices)` and
//! hashed with SHA-256, so a sub-seed never depends on execution order or on
//! how many threads are running.

use sha2::{Digest, Sha256};

pub fn derive_seed(master: u64, purpose: &str, indices: &[u64]) -> u64 {
    let mut h = Sha256::new();
    h.update(master.to_le_bytes());
    h.update(purpose.as_bytes());
    h.update([0u8]);
    for i in indices {
        h.update(i.to_le_bytes());
    }
    let digest = h.finalize();
    u64::from_le_bytes(digest[..8].try_into().expect("sha256 digest has 32 bytes"))
}
