//! Deterministic seed splitting.
//!
//! Every stochastic routine takes a `u64` seed. Independent streams (Monte
//! Carlo trials, scan points, cycles) are derived from a master seed by
//! [`split`], which applies the SplitMix64 finaliser to `master` mixed with
//! the stream index. The derived seed then seeds a `ChaCha8Rng`.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const GOLDEN: u64 = 0x9e37_79b9_7f4a_7c15;

fn mix(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Derives the seed of stream `index` from `master`.
pub fn split(master: u64, index: u64) -> u64 {
    mix(master.wrapping_add(GOLDEN.wrapping_mul(index.wrapping_add(1))))
}

/// Derives a seed from a path of stream indices, e.g. `[point, cycle]`.
pub fn split_path(master: u64, path: &[u64]) -> u64 {
    path.iter().fold(master, |s, &i| split(s, i))
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
