//! Deterministic random streams.
//!
//! Trial `t` of experiment `id` under master seed `s` draws from a ChaCha8
//! stream seeded with
//!
//! ```text
//! seed = mix(mix(mix(s ^ C) ^ fnv1a(id)) ^ t)
//! ```
//!
//! where `mix` is the SplitMix64 finalizer and `fnv1a` the 64-bit FNV-1a hash
//! of the UTF-8 experiment id. Streams for different trials are therefore
//! disjoint and independent of how trials are scheduled.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::linalg::C64;
use num_traits::Float;

/// Random stream used everywhere in the simulator.
pub type Stream = ChaCha8Rng;

const MASTER_SALT: u64 = 0x6466_6d75_642d_7631;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

/// Seed for trial `trial` of experiment `experiment` under `master`.
pub fn derive_seed(master: u64, experiment: &str, trial: u64) -> u64 {
    let h = splitmix64(master ^ MASTER_SALT);
    let h = splitmix64(h ^ fnv1a(experiment.as_bytes()));
    splitmix64(h ^ trial)
}

pub fn trial_stream(master: u64, experiment: &str, trial: u64) -> Stream {
    Stream::seed_from_u64(derive_seed(master, experiment, trial))
}

/// Child stream keyed by an index, for sub-structures of one trial (blocks,
/// codewords) that must not depend on consumption order elsewhere.
pub fn child_stream(parent: &mut Stream, index: u64) -> Stream {
    let base: u64 = parent.random();
    Stream::seed_from_u64(splitmix64(base ^ splitmix64(index)))
}

/// Circularly symmetric complex Gaussian sample with total variance
/// `variance` (`variance / 2` per real dimension).
pub fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R, variance: f64) -> C64 {
    let s = (0.5 * variance).sqrt();
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    C64::new(s * re, s * im)
}

/// Uniform ±1.
pub fn random_sign<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    if rng.random::<bool>() {
        1.0
    } else {
        -1.0
    }
}
