//! Seed derivation. Every random stream is a `ChaCha8Rng` seeded from a
//! master seed and a stream index, so results do not depend on how work is
//! split across threads.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

/// Stream indices below this are per-context blocks (`Context::index`).
pub const STREAM_SPREADSHEET: u64 = 8;
pub const STREAM_TIMESERIES_HIDDEN: u64 = 16;
pub const STREAM_TIMESERIES_ALICE: u64 = 17;
pub const STREAM_TIMESERIES_BOB: u64 = 18;

pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(GOLDEN_GAMMA);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn derive_seed(master: u64, stream: u64) -> u64 {
    splitmix64(master.wrapping_add(GOLDEN_GAMMA.wrapping_mul(stream.wrapping_add(1))))
}

pub fn stream_rng(master: u64, stream: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(master, stream))
}
