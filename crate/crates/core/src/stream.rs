//! Deterministic keyed RNG streams.
//!
//! Every random decision in the pipeline draws from a stream identified by a
//! root seed plus a short key path (replicate, sweep, variable, ...). The
//! stream id is a pure function of those keys, so results do not depend on
//! thread scheduling or worker count.

use rand_xoshiro::rand_core::SeedableRng;
use rand_xoshiro::Xoshiro256PlusPlus;

/// One SplitMix64 step.
#[inline]
fn splitmix64(state: u64) -> u64 {
    let mut z = state.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Collapse a root seed and a key path into a single 64-bit stream id.
#[inline]
pub fn mix(seed: u64, keys: &[u64]) -> u64 {
    let mut acc = splitmix64(seed);
    for &k in keys {
        acc = splitmix64(acc ^ k.wrapping_mul(0xff51_afd7_ed55_8ccd));
    }
    acc
}

/// RNG owning the stream identified by `(seed, keys)`.
#[inline]
pub fn stream_rng(seed: u64, keys: &[u64]) -> Xoshiro256PlusPlus {
    Xoshiro256PlusPlus::seed_from_u64(mix(seed, keys))
}
