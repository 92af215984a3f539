//! Deterministic, labelled random streams.
//!
//! Every random quantity in a run (playout suffixes, rounding coins, adversary
//! draws, Monte-Carlo sign vectors) comes from a stream keyed by
//! `(master_seed, purpose, round, draw)`. Equal keys give bit-identical draws
//! on any machine; distinct keys give independent-looking streams.

use rand::seq::SliceRandom;
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::scalar::Scalar;

#[inline]
fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn fnv1a64(s: &str) -> u64 {
    s.bytes().fold(0xCBF2_9CE4_8422_2325, |h, b| (h ^ u64::from(b)).wrapping_mul(0x0000_0100_0000_01B3))
}

/// Derives a child seed from a parent seed and a label; used to split
/// per-trial and per-component seeds out of a master seed.
pub fn derive_seed(master_seed: u64, purpose: &str, index: u64) -> u64 {
    splitmix64(splitmix64(splitmix64(master_seed) ^ fnv1a64(purpose)) ^ index)
}

#[derive(Debug, Clone)]
pub struct RandomStream {
    rng: ChaCha8Rng,
}

impl RandomStream {
    pub fn derive(master_seed: u64, purpose: &str, round: u64, draw: u64) -> Self {
        let mut state = splitmix64(derive_seed(master_seed, purpose, round) ^ splitmix64(draw));
        let mut seed = [0u8; 32];
        for chunk in seed.chunks_exact_mut(8) {
            state = splitmix64(state);
            chunk.copy_from_slice(&state.to_le_bytes());
        }
        Self { rng: ChaCha8Rng::from_seed(seed) }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }

    /// Uniform on `[0, 1)`.
    pub fn uniform(&mut self) -> f64 {
        self.rng.gen::<f64>()
    }

    pub fn uniform_in<T: Scalar>(&mut self, lo: T, hi: T) -> T {
        lo + (hi - lo) * T::lit(self.uniform())
    }

    /// `true` with probability `p` (`p <= 0` never, `p >= 1` always).
    pub fn bernoulli(&mut self, p: f64) -> bool {
        self.uniform() < p
    }

    /// A uniform `±1`.
    pub fn rademacher<T: Scalar>(&mut self) -> T {
        if self.rng.gen::<bool>() {
            T::one()
        } else {
            -T::one()
        }
    }

    pub fn rademacher_vec<T: Scalar>(&mut self, n: usize) -> Vec<T> {
        (0..n).map(|_| self.rademacher()).collect()
    }

    /// Uniform index in `0..n`.
    pub fn below(&mut self, n: usize) -> usize {
        self.rng.gen_range(0..n)
    }

    pub fn shuffle<E>(&mut self, items: &mut [E]) {
        items.shuffle(&mut self.rng);
    }
}
