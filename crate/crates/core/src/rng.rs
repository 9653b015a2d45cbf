//! Seed splitting for Monte Carlo work.
//!
//! Every random stream is a ChaCha8 generator keyed by the master seed and
//! selected by a stream number, so a task's draws depend only on
//! `(seed, stream)` and never on scheduling:
//!
//! * global Moran permutations: stream 0
//! * local Moran conditional permutations for zone `i`: stream `i + 1`
//! * K-means restart `r`: stream `r`

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub const GLOBAL_PERMUTATION_STREAM: u64 = 0;

pub fn stream(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

pub fn local_permutation_stream(seed: u64, zone: usize) -> ChaCha8Rng {
    stream(seed, zone as u64 + 1)
}
