//! Seeded generators.
//!
//! Every random draw in the crate comes from ChaCha8 (`rand_chacha`), which is
//! platform independent and supports independent streams. A `(seed, stream)`
//! pair fully determines a sequence; the stream tag separates purposes so that,
//! for example, data generation and index sampling never share draws.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Stream tags. Each purpose gets its own ChaCha stream.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stream {
    Indices = 1,
    Landmarks = 2,
    SynthMatrix = 3,
    SynthDiag = 4,
    SynthLinear = 5,
    PearsonX = 6,
    PearsonXPrime = 7,
    CutNormBase = 8,
}

pub fn stream_rng(seed: u64, stream: Stream) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream as u64);
    rng
}

/// Seed for trial `trial` of a run seeded with `seed`.
pub fn trial_seed(seed: u64, trial: usize) -> u64 {
    seed ^ trial as u64
}

/// Maps the top 53 bits of a word to a uniform double in `[0, 1)`.
pub(crate) fn unit_f64(word: u64) -> f64 {
    (word >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}
