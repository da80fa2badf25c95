//! Deterministic seed derivation.
//!
//! Every stochastic stage derives its RNG from the master seed plus stable
//! identifiers (genotype structure, patient id, run index). Results therefore
//! depend only on the configuration, never on thread scheduling or iteration
//! order.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

/// Finalizer from splitmix64; breaks up the linearity of plain FNV.
fn finalize(mut x: u64) -> u64 {
    x ^= x >> 30;
    x = x.wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x ^= x >> 27;
    x = x.wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

/// Stable hash of a byte string (FNV-1a with a splitmix finalizer).
pub fn hash_bytes(bytes: &[u8]) -> u64 {
    let mut h = FNV_OFFSET;
    for &b in bytes {
        h ^= u64::from(b);
        h = h.wrapping_mul(FNV_PRIME);
    }
    finalize(h)
}

/// Stable hash of a string.
pub fn hash_str(s: &str) -> u64 {
    hash_bytes(s.as_bytes())
}

/// Combines a seed with additional words into a new seed.
pub fn mix(seed: u64, parts: &[u64]) -> u64 {
    let mut h = seed ^ FNV_OFFSET;
    for &p in parts {
        for b in p.to_le_bytes() {
            h ^= u64::from(b);
            h = h.wrapping_mul(FNV_PRIME);
        }
    }
    finalize(h)
}

/// A small, fast, reproducible RNG seeded from a derived seed.
pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
