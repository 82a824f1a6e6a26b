//! Deterministic seed derivation.
//!
//! Every random stream in the crate is derived from a master seed, a textual
//! tag naming the consumer, and an index (replica, environment, ...). The mix
//! is SHA-256, so streams for distinct `(tag, index)` pairs are independent for
//! all practical purposes and any single stream can be replayed in isolation.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

/// Random stream type used throughout the crate.
pub type StreamRng = ChaCha8Rng;

fn digest(master: u64, tag: &str, index: u64) -> [u8; 32] {
    let mut hasher = Sha256::new();
    hasher.update(master.to_le_bytes());
    hasher.update((tag.len() as u64).to_le_bytes());
    hasher.update(tag.as_bytes());
    hasher.update(index.to_le_bytes());
    hasher.finalize().into()
}

/// A master seed from which tagged, indexed child streams are derived.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SeedSequence {
    master: u64,
}

impl SeedSequence {
    pub fn new(master: u64) -> Self {
        Self { master }
    }

    pub fn master(&self) -> u64 {
        self.master
    }

    /// 64-bit child seed for `(tag, index)`.
    pub fn child_seed(&self, tag: &str, index: u64) -> u64 {
        let d = digest(self.master, tag, index);
        u64::from_le_bytes(d[..8].try_into().expect("8 bytes"))
    }

    /// Child sequence, for handing a sub-experiment its own namespace.
    pub fn child(&self, tag: &str, index: u64) -> SeedSequence {
        SeedSequence::new(self.child_seed(tag, index))
    }

    /// Random stream for `(tag, index)`, seeded with the full 256-bit digest.
    pub fn rng(&self, tag: &str, index: u64) -> StreamRng {
        StreamRng::from_seed(digest(self.master, tag, index))
    }
}

/// Uniform draw in the open interval (0, 1) keyed by `(seed, key)`.
///
/// Used to assign edge weights by canonical identifier so that nested boxes
/// share weights on common edges.
pub fn keyed_unit(seed: u64, key: &[u8]) -> f64 {
    let mut hasher = Sha256::new();
    hasher.update(seed.to_le_bytes());
    hasher.update(key);
    let d: [u8; 32] = hasher.finalize().into();
    let bits = u64::from_le_bytes(d[..8].try_into().expect("8 bytes")) >> 11;
    (bits as f64 + 0.5) * (1.0 / (1u64 << 53) as f64)
}
