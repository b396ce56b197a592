//! Seeded randomness. All randomness in the artifact flows from the run seed
//! through per-purpose ChaCha8 streams, so enabling or disabling one consumer
//! does not perturb the others.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stream {
    Ingest = 1,
    Bootstrap = 2,
    Selection = 3,
    Sweep = 4,
}

pub fn derive_rng(seed: u64, stream: Stream) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream as u64);
    rng
}

/// Derived seed for one point of a sweep grid. splitmix64 finalizer over the
/// base seed and point index.
pub fn derive_point_seed(base: u64, index: u64) -> u64 {
    let mut z = base ^ index.wrapping_mul(0x9E3779B97F4A7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58476D1CE4E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D049BB133111EB);
    z ^ (z >> 31)
}
