//! Counter-based seed derivation.
//!
//! Every experiment has one root seed. Each replication (and each random
//! stream inside a replication) gets its own seed by hashing the root with a
//! path of counters, so results do not depend on the order in which
//! replications are scheduled.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Stream labels used inside one replication.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Stream {
    Design = 1,
    Noise = 2,
    Folds = 3,
    Truth = 4,
    Pilot = 5,
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derives a child seed from `root` and a path of counters.
pub fn derive_seed(root: u64, path: &[u64]) -> u64 {
    path.iter()
        .fold(splitmix64(root), |acc, &c| splitmix64(acc ^ splitmix64(c)))
}

/// Seed for stream `stream` of replication `rep`.
pub fn replication_seed(root: u64, rep: u64, stream: Stream) -> u64 {
    derive_seed(root, &[rep, stream as u64])
}

pub fn rng_from_seed(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
