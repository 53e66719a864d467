//! Deterministic random streams.
//!
//! Every consumer of randomness in a run gets its own ChaCha stream derived
//! from the run seed, so adding draws in one place never shifts another.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;

pub type StreamRng = ChaCha20Rng;

/// Named stream identifiers.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Stream {
    Init = 1,
    Noise = 2,
    Optimizer = 3,
    Thompson = 4,
    Objective = 5,
    Diagnostics = 6,
}

pub fn stream(seed: u64, which: Stream) -> StreamRng {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(which as u64);
    rng
}

pub fn from_seed(seed: u64) -> StreamRng {
    ChaCha20Rng::seed_from_u64(seed)
}

/// Independent stream for replication `index` of a study.
pub fn replication(seed: u64, index: u64) -> StreamRng {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(1 << 32 | index);
    rng
}

/// Derives a child seed, e.g. one per iteration.
pub fn child_seed(rng: &mut StreamRng) -> u64 {
    rng.random::<u64>()
}

pub fn normal(rng: &mut impl Rng) -> f64 {
    rng.sample(StandardNormal)
}

pub fn uniform(rng: &mut impl Rng) -> f64 {
    rng.random::<f64>()
}
