//! Counter-style Gaussian streams.
//!
//! Every sampler in this crate draws from a [`GaussianStream`]: a ChaCha8
//! keystream read two 64-bit words at a time through a fixed Box-Muller map.
//! Draw `k` always occupies words `4k..4k + 4` of the keystream, so a stream
//! is random-access ([`GaussianStream::normal_at`]) and the value of draw `k`
//! is independent of how earlier draws were consumed.

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

/// 256-bit stream key.  Distinct keys give independent keystreams.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SeedKey([u8; 32]);

impl SeedKey {
    pub fn from_bytes(bytes: [u8; 32]) -> Self {
        SeedKey(bytes)
    }

    /// Expands a 64-bit seed with SplitMix64, the standard key-stretching
    /// step for counter RNGs.
    pub fn from_u64(seed: u64) -> Self {
        let mut state = seed;
        let mut bytes = [0u8; 32];
        for chunk in bytes.chunks_exact_mut(8) {
            state = state.wrapping_add(0x9e37_79b9_7f4a_7c15);
            let mut z = state;
            z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
            z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
            z ^= z >> 31;
            chunk.copy_from_slice(&z.to_le_bytes());
        }
        SeedKey(bytes)
    }

    pub fn as_bytes(&self) -> &[u8; 32] {
        &self.0
    }
}

/// Sequential reader of a keyed Gaussian stream.  `next_normal` consumes
/// exactly two 64-bit words, so the `k`-th sequential draw equals
/// `normal_at(k)`.
pub struct GaussianStream {
    rng: ChaCha8Rng,
}

impl GaussianStream {
    pub fn new(key: &SeedKey) -> Self {
        GaussianStream {
            rng: ChaCha8Rng::from_seed(*key.as_bytes()),
        }
    }

    /// Standard normal draw via Box-Muller on two fixed-width uniforms.
    pub fn next_normal(&mut self) -> f64 {
        let u1 = u64_to_open01(self.rng.next_u64());
        let u2 = u64_to_open01(self.rng.next_u64());
        (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
    }

    /// Random access to draw `k` of this stream.  Leaves the cursor after
    /// draw `k`, so sequential reads may resume from there.
    pub fn normal_at(&mut self, k: u128) -> f64 {
        self.rng.set_word_pos(4 * k);
        self.next_normal()
    }

    pub fn next_normal_vec(&mut self, len: usize) -> Vec<f64> {
        (0..len).map(|_| self.next_normal()).collect()
    }

    /// Uniform direction on the unit sphere of dimension `len`.
    pub fn next_unit_vec(&mut self, len: usize) -> Vec<f64> {
        loop {
            let mut v = self.next_normal_vec(len);
            let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            if norm > 1e-8 {
                for x in &mut v {
                    *x /= norm;
                }
                return v;
            }
        }
    }
}

/// Maps a 64-bit word to (0, 1), symmetric about 1/2 and never hitting an
/// endpoint, so `ln` and `cos` stay finite.  52 mantissa bits are used:
/// k + 0.5 is then exactly representable for every k, so no rounding can
/// push the ratio to 0 or 1.
fn u64_to_open01(x: u64) -> f64 {
    ((x >> 12) as f64 + 0.5) * (1.0 / (1u64 << 52) as f64)
}
