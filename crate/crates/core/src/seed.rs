//! Seed derivation shared by every parallel loop in the crate.
//!
//! Replication `i` of an experiment with master seed `m` runs on a ChaCha8
//! stream seeded with `derive(m, i) = splitmix64(m + (i + 1) * 0x9E3779B97F4A7C15)`.
//! The mapping is fixed so results are reproducible across machines and worker
//! counts.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// The random stream type used for simulations.
pub type SimRng = ChaCha8Rng;

const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(GOLDEN_GAMMA);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn derive(master: u64, index: u64) -> u64 {
    splitmix64(master.wrapping_add(index.wrapping_add(1).wrapping_mul(GOLDEN_GAMMA)))
}

pub fn rng_for(master: u64, index: u64) -> SimRng {
    SimRng::seed_from_u64(derive(master, index))
}
