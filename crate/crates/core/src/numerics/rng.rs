//! Seeded, forkable randomness. A stream is named by a `(seed, stream)` pair
//! of integers; the generator behind it is ChaCha12, which is specified
//! byte-for-byte and therefore reproducible across platforms and versions.
//! Child streams are derived by mixing a label into the stream id, so every
//! consumer (sampling, gating, initialization, each benchmark run) gets its
//! own independent sequence and never perturbs anyone else's draws.

use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};

/// FNV-1a 64-bit hash; fixed here rather than taken from `std` so that
/// derived stream ids never change across Rust releases.
pub fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

/// splitmix64 step: advances `state` and returns a well-mixed output word.
fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9e37_79b9_7f4a_7c15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Copyable handle naming one deterministic random stream.
///
/// Equal handles always produce identical generators; handles differing in
/// either field produce statistically independent ones.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RngStream {
    pub seed: u64,
    pub stream: u64,
}

impl RngStream {
    pub fn new(seed: u64, stream: u64) -> Self {
        Self { seed, stream }
    }

    /// Forks a child stream for the given numeric label.
    pub fn derive(self, label: u64) -> Self {
        let mut s = self
            .stream
            .wrapping_add(label.wrapping_mul(0x9e37_79b9_7f4a_7c15));
        Self {
            seed: self.seed,
            stream: splitmix64(&mut s),
        }
    }

    /// Forks a child stream for a string label such as `"sample"` or `"gate"`.
    pub fn derive_str(self, label: &str) -> Self {
        self.derive(fnv1a64(label.as_bytes()))
    }

    /// Instantiates the generator. The 256-bit ChaCha key is squeezed out of
    /// splitmix64 seeded with both fields, so every `(seed, stream)` pair maps
    /// to its own key.
    pub fn rng(self) -> ChaCha12Rng {
        let mut state = self
            .seed
            .wrapping_add(self.stream.wrapping_mul(0x9e37_79b9_7f4a_7c15));
        let mut key = [0u8; 32];
        for chunk in key.chunks_exact_mut(8) {
            chunk.copy_from_slice(&splitmix64(&mut state).to_le_bytes());
        }
        ChaCha12Rng::from_seed(key)
    }
}
