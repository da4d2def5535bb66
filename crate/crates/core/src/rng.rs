//! Seeded random streams.
//!
//! Every stochastic operation takes an explicit `u64` seed and draws from a
//! ChaCha stream keyed by it. Independent substreams are derived by mixing a
//! stream index into the seed.

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

pub type Rng = ChaCha20Rng;

pub fn rng_from_seed(seed: u64) -> Rng {
    ChaCha20Rng::seed_from_u64(seed)
}

/// SplitMix64 finalizer.
fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seed of substream `index` under `seed`: seed XOR hash(index).
pub fn substream_seed(seed: u64, index: u64) -> u64 {
    seed ^ mix64(index)
}
