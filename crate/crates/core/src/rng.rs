//! Counter-based seed derivation.
//!
//! A generator is a pure function of `(master_seed, stream_id, trial_index)`:
//! the three words are mixed into a ChaCha key, so trials can be evaluated in
//! any order, on any number of workers, and still reproduce bit for bit.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Stream labels used across the crate. Keeping them in one place avoids
/// two subsystems accidentally sharing draws.
pub mod streams {
    pub const COVARIANCE: u64 = 0x01;
    pub const MOMENTS: u64 = 0x02;
    pub const TIER0: u64 = 0x10;
    pub const TIER1: u64 = 0x11;
    pub const TIER2: u64 = 0x12;
    pub const BOUNDS: u64 = 0x20;
    pub const CURVE: u64 = 0x30;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct RngSeed {
    pub master_seed: u64,
    pub stream_id: u64,
    pub trial_index: u64,
}

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

#[inline]
fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(GOLDEN);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

impl RngSeed {
    pub const fn new(master_seed: u64) -> Self {
        Self { master_seed, stream_id: 0, trial_index: 0 }
    }

    /// Replaces the stream id outright.
    pub const fn with_stream(self, stream_id: u64) -> Self {
        Self { stream_id, ..self }
    }

    /// Derives a child stream; nesting `stream(a).stream(b)` differs from
    /// `stream(b).stream(a)`.
    pub fn stream(self, label: u64) -> Self {
        let stream_id = splitmix64(self.stream_id.rotate_left(23) ^ splitmix64(label));
        Self { stream_id, ..self }
    }

    pub const fn trial(self, trial_index: u64) -> Self {
        Self { trial_index, ..self }
    }

    pub fn rng(&self) -> ChaCha8Rng {
        let words = [
            splitmix64(self.master_seed),
            splitmix64(self.stream_id ^ 0xA076_1D64_78BD_642F),
            splitmix64(self.trial_index ^ 0xE703_7ED1_A0B4_28DB),
            splitmix64(self.master_seed ^ self.stream_id.rotate_left(21) ^ self.trial_index.rotate_left(42)),
        ];
        let mut key = [0u8; 32];
        for (chunk, w) in key.chunks_exact_mut(8).zip(words) {
            chunk.copy_from_slice(&w.to_le_bytes());
        }
        ChaCha8Rng::from_seed(key)
    }
}
