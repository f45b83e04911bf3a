//! Deterministic random streams.
//!
//! Every (master seed, replication, agent) triple gets its own ChaCha8
//! stream, so results do not depend on scheduling or thread count.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type StreamRng = ChaCha8Rng;

/// Stream index used for scenario construction (geometry, event draws).
pub const SCENARIO_STREAM: u64 = u64::MAX;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed derived as `splitmix(splitmix(splitmix(master) ^ replication) ^ stream)`.
pub fn derive_seed(master: u64, replication: u64, stream: u64) -> u64 {
    splitmix64(splitmix64(splitmix64(master) ^ replication) ^ stream)
}

pub fn stream(master: u64, replication: u64, stream: u64) -> StreamRng {
    StreamRng::seed_from_u64(derive_seed(master, replication, stream))
}
