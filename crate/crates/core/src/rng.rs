//! Seed derivation and counter-addressed random streams.
//!
//! Every stochastic quantity in the crate is drawn from a ChaCha8 stream
//! addressed by `(seed, stream id)`. Work is split into fixed-size units
//! (blocks of bins, display bins of gates), and each unit owns its own stream,
//! so results never depend on how the units are scheduled across threads.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Stream-id namespaces. The tag occupies the upper 32 bits of the stream id,
/// the unit index the lower 32.
pub(crate) mod tag {
    pub const HOMODYNE_SIGNAL: u64 = 1;
    pub const HOMODYNE_DARK: u64 = 2;
    pub const SPDM_BRIGHT: u64 = 3;
    pub const SPDM_DARK: u64 = 4;
}

const GOLDEN: u64 = 0x9e37_79b9_7f4a_7c15;

fn splitmix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Derives a child seed from `seed` and a path of indices (SplitMix64 chain).
pub fn derive_seed(seed: u64, path: &[u64]) -> u64 {
    path.iter()
        .fold(splitmix64(seed.wrapping_add(GOLDEN)), |acc, &p| splitmix64(acc ^ splitmix64(p.wrapping_add(GOLDEN))))
}

/// The ChaCha8 stream for `(seed, tag, unit)`.
pub(crate) fn stream(seed: u64, tag: u64, unit: u64) -> ChaCha8Rng {
    debug_assert!(unit < (1 << 32));
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream((tag << 32) | unit);
    rng
}
