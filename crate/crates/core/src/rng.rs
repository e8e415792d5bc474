//! Seed derivation.
//!
//! Every random stream in the crate is a `ChaCha8Rng` seeded from a single
//! master seed through [`derive_seed`]. Streams are addressed by a `(stream,
//! index)` pair so that e.g. the k-th loss evaluation of a QNN fit always sees
//! the same sub-seed regardless of evaluation order.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Stream tags used across the crate. Values are arbitrary but fixed.
pub mod stream {
    pub const QNN_INIT: u64 = 0x01;
    pub const QNN_EVAL: u64 = 0x02;
    pub const CMAES: u64 = 0x03;
    pub const GENETIC: u64 = 0x04;
    pub const GBM: u64 = 0x05;
    pub const SUBSAMPLE: u64 = 0x06;
    pub const SYNTH: u64 = 0x07;
    pub const PREDICT: u64 = 0x08;
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Mixes a master seed with a stream tag and an index into a fresh seed.
pub fn derive_seed(master: u64, stream: u64, index: u64) -> u64 {
    splitmix64(splitmix64(splitmix64(master) ^ stream) ^ index)
}

pub fn rng_from(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn derived_rng(master: u64, stream: u64, index: u64) -> ChaCha8Rng {
    rng_from(derive_seed(master, stream, index))
}
