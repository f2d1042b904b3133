//! Keyed random streams and row resamplers.
//!
//! Every parallel task derives its generator from the master seed and its
//! own indices, so results never depend on scheduling or worker count.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Mixes a seed with a path of indices into a new 64-bit seed.
pub fn derive_seed(seed: u64, keys: &[u64]) -> u64 {
    keys.iter()
        .fold(splitmix64(seed), |acc, &k| splitmix64(acc ^ splitmix64(k)))
}

/// Generator for the task identified by `keys` under `seed`.
pub fn stream(seed: u64, keys: &[u64]) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(seed, keys))
}

/// Source of bootstrap row indices.
pub trait Resampler {
    /// `n` indices into a dataset of `n` rows.
    fn draw(&mut self, n: usize) -> Vec<usize>;
}

/// Uniform draws with replacement.
pub struct WithReplacement<R>(pub R);

impl<R: Rng> Resampler for WithReplacement<R> {
    fn draw(&mut self, n: usize) -> Vec<usize> {
        (0..n).map(|_| self.0.random_range(0..n)).collect()
    }
}

/// Returns the original sample every time. Used to check that a bootstrap
/// replicate on unchanged data reproduces the point estimate.
pub struct Identity;

impl Resampler for Identity {
    fn draw(&mut self, n: usize) -> Vec<usize> {
        (0..n).collect()
    }
}
