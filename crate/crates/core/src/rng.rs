//! Labelled seed derivation.
//!
//! Every consumer of randomness gets its own sub-seed derived from the master
//! seed and a stream label, so adding a new consumer never shifts the streams
//! of existing ones. The derivation is a fixed FNV-1a hash over the master
//! seed bytes and the label, finished with a splitmix64 avalanche; it must
//! never change once traces exist.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

/// Sub-seed for the named stream: `hash64(master, label)`.
pub fn derive_seed(master: u64, label: &str) -> u64 {
    let mut h = FNV_OFFSET;
    for b in master.to_le_bytes() {
        h = (h ^ u64::from(b)).wrapping_mul(FNV_PRIME);
    }
    for b in label.as_bytes() {
        h = (h ^ u64::from(*b)).wrapping_mul(FNV_PRIME);
    }
    // splitmix64 finalizer
    h ^= h >> 30;
    h = h.wrapping_mul(0xbf58_476d_1ce4_e5b9);
    h ^= h >> 27;
    h = h.wrapping_mul(0x94d0_49bb_1331_11eb);
    h ^ (h >> 31)
}

/// Deterministic generator for a derived seed. ChaCha8 output is stable
/// across platforms and releases.
pub fn rng_from_seed(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
