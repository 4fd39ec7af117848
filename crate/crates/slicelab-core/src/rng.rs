//! Seeded randomness with per-component substreams.
//!
//! Every source of randomness in the workspace derives from one master seed.
//! Substreams are domain-separated by label (and optionally an index), so the
//! simulator, the agents and the scenario harness consume independent streams
//! and adding a consumer never perturbs the others.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

/// The concrete RNG handed to components. Cloneable, deterministic, fast.
pub type RngStream = ChaCha8Rng;

/// A master seed from which labelled substreams are derived.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RngSource {
    seed: u64,
}

impl RngSource {
    pub fn new(seed: u64) -> Self {
        Self { seed }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Deterministic substream for a named component.
    pub fn substream(&self, label: &str) -> RngStream {
        self.substream_indexed(label, 0)
    }

    /// Deterministic substream for a named component and an index
    /// (episode number, evaluation slot, ...).
    pub fn substream_indexed(&self, label: &str, index: u64) -> RngStream {
        let mut hasher = Sha256::new();
        hasher.update(self.seed.to_le_bytes());
        hasher.update([0x1f]); // separator so ("ab", x) and ("a", bx) differ
        hasher.update(label.as_bytes());
        hasher.update([0x1f]);
        hasher.update(index.to_le_bytes());
        let digest: [u8; 32] = hasher.finalize().into();
        ChaCha8Rng::from_seed(digest)
    }
}
