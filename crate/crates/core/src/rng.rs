//! Seed derivation for reproducible, splittable random streams.
//!
//! Every randomized operation in the crate draws from a ChaCha8 generator
//! obtained through [`stream_rng`]. The derivation rule is fixed: the master
//! seed keys the cipher, and the tag list is folded through SplitMix64 into
//! the 64-bit stream id. Two calls with the same `(master, tags)` produce
//! identical streams; distinct tag lists give independent streams. Parallel
//! code derives one stream per work item (benchmark cell, tree node) so that
//! results never depend on scheduling or worker count.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// SplitMix64 finalizer; the standard 64-bit mixing function.
pub fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

/// Folds a tag list into a single stream id.
pub fn stream_id(tags: &[u64]) -> u64 {
    let mut acc = 0x243f_6a88_85a3_08d3; // arbitrary nonzero start
    for &t in tags {
        acc = splitmix64(acc ^ t);
    }
    acc
}

/// Derives the ChaCha stream for `(master, tags)`.
pub fn stream_rng(master: u64, tags: &[u64]) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master);
    rng.set_stream(stream_id(tags));
    rng
}
