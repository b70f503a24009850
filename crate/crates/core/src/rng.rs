//! Counter-addressed random streams.
//!
//! Every draw is a pure function of `(seed, label, stream, counter)`: the
//! seed and a label pick a ChaCha8 key, the stream id selects the ChaCha
//! stream and the counter positions the block counter. A walker's noise at a
//! given step is therefore the same under any parallel schedule.

use rand::RngCore;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// 64-bit finalizer from SplitMix64; used to derive keys from labels.
#[inline]
pub fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derive a sub-seed from a parent seed and a text label.
pub fn derive_seed(seed: u64, label: &str) -> u64 {
    label.bytes().fold(mix64(seed), |h, b| mix64(h ^ b as u64))
}

/// A family of independent streams sharing one key.
#[derive(Debug, Clone)]
pub struct StreamFamily {
    key: u64,
}

impl StreamFamily {
    pub fn new(seed: u64, label: &str) -> Self {
        Self {
            key: derive_seed(seed, label),
        }
    }

    /// Generator positioned at `counter` blocks of `words_per_counter` 32-bit
    /// words into stream `stream`.
    pub fn at(&self, stream: u64, counter: u64, words_per_counter: u64) -> NormalSource {
        let mut rng = ChaCha8Rng::seed_from_u64(self.key);
        rng.set_stream(stream);
        rng.set_word_pos(counter as u128 * words_per_counter as u128);
        NormalSource { rng, spare: None }
    }
}

/// Standard normals by the Box-Muller transform. Each pair of normals uses
/// exactly four 32-bit words, which keeps stream positions predictable.
pub struct NormalSource {
    rng: ChaCha8Rng,
    spare: Option<f64>,
}

impl NormalSource {
    /// Words consumed per `n` normals.
    pub fn words_for(n: usize) -> u64 {
        4 * n.div_ceil(2) as u64
    }

    #[inline]
    fn open_unit(&mut self) -> f64 {
        // 53 random bits mapped into (0, 1].
        ((self.rng.next_u64() >> 11) as f64 + 1.0) * (1.0 / (1u64 << 53) as f64)
    }

    #[inline]
    pub fn uniform(&mut self) -> f64 {
        (self.rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    #[inline]
    pub fn normal(&mut self) -> f64 {
        if let Some(z) = self.spare.take() {
            return z;
        }
        let u1 = self.open_unit();
        let u2 = self.open_unit();
        let r = (-2.0 * u1.ln()).sqrt();
        let (s, c) = (2.0 * std::f64::consts::PI * u2).sin_cos();
        self.spare = Some(r * s);
        r * c
    }
}
