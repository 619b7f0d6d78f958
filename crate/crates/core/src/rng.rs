//! Seeded, portable random streams.
//!
//! A master seed spawns independent child streams by counter, so item `k` of
//! any batch can be regenerated in isolation and serial/parallel generation
//! agree bit for bit.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Rng = ChaCha8Rng;

/// Stream selector for independent uses of one master seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Purpose {
    Engagement,
    Split,
    Noise,
    Init,
    Batches,
    Dropout,
}

impl Purpose {
    fn tag(self) -> u64 {
        match self {
            Purpose::Engagement => 1,
            Purpose::Split => 2,
            Purpose::Noise => 3,
            Purpose::Init => 4,
            Purpose::Batches => 5,
            Purpose::Dropout => 6,
        }
    }
}

/// Root generator for `seed`.
pub fn master(seed: u64) -> Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Child stream `index` of `seed` for the given purpose.
pub fn child(seed: u64, purpose: Purpose, index: u64) -> Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ purpose.tag().wrapping_mul(0x9E37_79B9_7F4A_7C15));
    rng.set_stream(index);
    rng
}

/// Deterministic per-instance seed derived from a master seed.
pub fn child_seed(seed: u64, index: u64) -> u64 {
    // splitmix64 finalizer over (seed, index)
    let mut z = seed ^ index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
