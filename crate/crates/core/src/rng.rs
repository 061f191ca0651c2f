//! Seeded, portable random streams.
//!
//! Every consumer of randomness gets its own ChaCha8 stream derived from
//! `(seed, domain, generation, index)`. Streams never share state, so the
//! order in which individuals are evaluated (or how many worker threads do
//! it) cannot change any draw.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type StreamRng = ChaCha8Rng;

/// Stream domains. The numeric tags are part of the reproducibility contract.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Domain {
    /// GA generation-0 sampling.
    GaInit = 1,
    /// GA operator dispatch, one stream per generation.
    GaDispatch = 2,
    /// GA per-new-individual stream (tournaments, cut points, mutation).
    GaIndividual = 3,
    /// Random baseline sampling.
    RandomBaseline = 4,
    /// GA fallback resampling after an all-invalid generation.
    GaResample = 5,
}

/// SplitMix64 finalizer.
pub fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Stable 64-bit FNV-1a hash, used to turn labels into seeds.
pub fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in bytes {
        h ^= u64::from(*b);
        h = h.wrapping_mul(0x0000_0100_0000_01B3);
    }
    h
}

/// Derive a child seed, e.g. per scenario or per repetition.
pub fn derive_seed(seed: u64, salt: u64) -> u64 {
    mix64(seed ^ mix64(salt))
}

/// Identifier of the stream used for `(domain, generation, index)`.
pub fn stream_id(domain: Domain, generation: u64, index: u64) -> u64 {
    mix64(mix64(mix64(domain as u64) ^ generation) ^ index)
}

pub fn stream(seed: u64, domain: Domain, generation: u64, index: u64) -> StreamRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream_id(domain, generation, index));
    rng
}
