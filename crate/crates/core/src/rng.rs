//! Seeded, splittable random streams.
//!
//! Every random quantity in the crate is a pure function of
//! `(seed, domain, stream index)`: the seed and domain tag form the ChaCha8
//! key and the stream index selects one of its 2^64 independent streams.
//! Environment cell `(i, j)` and path number `k` therefore get their own
//! stream, which makes results independent of evaluation order and of the
//! number of worker threads.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Key-space separator so that environment and path randomness never share
/// a stream even when the caller passes identical seeds.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Domain {
    Environment = 0x656e_7669_726f_6e00,
    Path = 0x7061_7468_0000_0000,
    Moments = 0x6d6f_6d65_6e74_7300,
    Experiment = 0x6578_7065_7269_6d00,
}

/// The stream `stream` of the generator keyed by `(seed, domain)`.
pub fn stream(seed: u64, domain: Domain, stream: u64) -> ChaCha8Rng {
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&seed.to_le_bytes());
    key[8..16].copy_from_slice(&(domain as u64).to_le_bytes());
    let mut rng = ChaCha8Rng::from_seed(key);
    rng.set_stream(stream);
    rng
}

/// SplitMix64 finalizer, used to derive child seeds (e.g. one environment
/// seed per grid point) from a parent seed.
pub fn derive_seed(parent: u64, index: u64) -> u64 {
    let mut z = parent ^ index.wrapping_mul(0x9e37_79b9_7f4a_7c15);
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}
