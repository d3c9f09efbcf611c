//! Deterministic Gaussian draws for harmonic coefficients.
//!
//! Each `(seed, replicate, stream)` triple keys its own ChaCha8 generator.
//! Coefficient `(ℓ, m)` always consumes the four 32-bit words at position
//! `4 (ℓ(ℓ+1)/2 + m)`, so a draw depends only on its key and its `(ℓ, m)`,
//! not on band limits, evaluation order or thread scheduling.

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Stream tags separating independent fields drawn within one replicate.
pub mod stream {
    pub const FIELD: u64 = 0;
    pub const SURROGATE: u64 = 1;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct RngKey {
    pub seed: u64,
    pub replicate: u64,
    pub stream: u64,
}

impl RngKey {
    pub fn new(seed: u64, replicate: u64, stream: u64) -> Self {
        RngKey {
            seed,
            replicate,
            stream,
        }
    }

    pub fn with_stream(self, stream: u64) -> Self {
        RngKey { stream, ..self }
    }

    fn chacha_seed(&self) -> [u8; 32] {
        // SplitMix64 expansion of the three key words
        let mut state = self.seed ^ 0x6a09_e667_f3bc_c908;
        let mut out = [0u8; 32];
        let words = [
            self.replicate,
            self.stream,
            0x5851_f42d_4c95_7f2d,
            self.seed,
        ];
        for (chunk, w) in out.chunks_mut(8).zip(words) {
            state = state.wrapping_add(0x9e37_79b9_7f4a_7c15 ^ w);
            let mut z = state;
            z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
            z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
            z ^= z >> 31;
            chunk.copy_from_slice(&z.to_le_bytes());
        }
        out
    }
}

/// Standard normal pairs in `(ℓ, m)` order.
pub(crate) struct NormalPairs {
    rng: ChaCha8Rng,
}

impl NormalPairs {
    pub(crate) fn new(key: RngKey) -> Self {
        NormalPairs {
            rng: ChaCha8Rng::from_seed(key.chacha_seed()),
        }
    }

    /// Next Box-Muller pair; consumes exactly four words.
    pub(crate) fn next_pair(&mut self) -> (f64, f64) {
        let to_unit = |x: u64| (x >> 11) as f64 * (1.0 / (1u64 << 53) as f64);
        let u1 = 1.0 - to_unit(self.rng.next_u64());
        let u2 = to_unit(self.rng.next_u64());
        let r = (-2.0 * u1.ln()).sqrt();
        let (s, c) = (std::f64::consts::TAU * u2).sin_cos();
        (r * c, r * s)
    }
}
