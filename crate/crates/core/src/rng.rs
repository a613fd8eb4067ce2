//! Seeded random streams.
//!
//! Every random draw in the crate comes from a [`ChaCha8Rng`] built by
//! [`stream`]. A run is identified by a 64-bit seed; each consumer inside the
//! run takes its own numbered stream so that adding draws to one consumer
//! never shifts the numbers seen by another.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Stream numbers used by the simulator. Kept in one place so the draw order
/// is documented.
pub mod streams {
    pub const TRUE_TEACHER: u64 = 0;
    pub const ENSEMBLE: u64 = 1;
    pub const STUDENT: u64 = 2;
    pub const TRAINING_INPUTS: u64 = 3;
    pub const TEACHER_SCHEDULE: u64 = 4;
    pub const TEST_INPUTS: u64 = 5;
    pub const POTENTIAL_INPUTS: u64 = 6;
}

pub fn stream(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// SplitMix64 finalizer; mixes a seed with a tag into a new seed.
pub fn derive_seed(seed: u64, tag: u64) -> u64 {
    let mut z = seed ^ tag.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
