//! Named random streams.
//!
//! Every random draw in the crate comes from a ChaCha8 stream keyed by the
//! user seed, a purpose tag and a task index, so results do not depend on how
//! work is split across threads.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

fn fnv1a(tag: &str) -> u64 {
    tag.bytes().fold(0xcbf2_9ce4_8422_2325, |h, b| {
        (h ^ u64::from(b)).wrapping_mul(0x0000_0100_0000_01b3)
    })
}

/// A 64-bit seed for sub-task `index` of purpose `tag`.
pub fn derive_seed(seed: u64, tag: &str, index: u64) -> u64 {
    splitmix64(splitmix64(seed ^ fnv1a(tag)) ^ splitmix64(index.wrapping_add(0x5851_f42d_4c95_7f2d)))
}

/// Independent generator for sub-task `index` of purpose `tag`.
pub fn stream(seed: u64, tag: &str, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(splitmix64(seed ^ fnv1a(tag)));
    rng.set_stream(index);
    rng
}
