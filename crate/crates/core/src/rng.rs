//! Deterministic seed derivation.
//!
//! Every random stream in the crate is a `ChaCha8Rng` seeded through
//! [`derive_seed`]. The mixing function is part of the file-format contract:
//! it is the `index + 1`-th output of a SplitMix64 generator whose state starts
//! at `master`,
//!
//! ```text
//! z = master + 0x9E3779B97F4A7C15 * (index + 1)      (wrapping)
//! z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9
//! z = (z ^ (z >> 27)) * 0x94D049BB133111EB
//! z =  z ^ (z >> 31)
//! ```
//!
//! Both steps are bijections on `u64`, so distinct indices under one master
//! seed never collide.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type SimRng = ChaCha8Rng;

const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

/// SplitMix64 finalizer.
pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn derive_seed(master: u64, index: u64) -> u64 {
    mix64(master.wrapping_add(GOLDEN_GAMMA.wrapping_mul(index.wrapping_add(1))))
}

pub fn rng_from_seed(seed: u64) -> SimRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Independent sub-streams of one episode seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stream {
    /// Reward noise.
    Environment = 0,
    /// Action selection.
    Policy = 1,
    /// Draw of the true parameter.
    Truth = 2,
}

pub fn stream_rng(episode_seed: u64, stream: Stream) -> SimRng {
    rng_from_seed(derive_seed(episode_seed, stream as u64))
}
