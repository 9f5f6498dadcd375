//! Seed derivation and the single PRNG used across the crate.
//!
//! Every stochastic step draws from its own ChaCha8 stream whose seed is a
//! stable hash of a parent seed plus a label and an index, so results never
//! depend on execution order or thread count.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type SeededRng = ChaCha8Rng;

pub fn seeded(seed: u64) -> SeededRng {
    ChaCha8Rng::seed_from_u64(seed)
}

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Stable 64-bit hash of `(parent, label, index)`.
///
/// FNV-1a over the little-endian bytes followed by a splitmix64 finalizer.
/// The value is part of the on-disk ledger format and must not change.
pub fn derive_seed(parent: u64, label: &str, index: u64) -> u64 {
    let mut h = FNV_OFFSET;
    let mut feed = |bytes: &[u8]| {
        for &b in bytes {
            h ^= u64::from(b);
            h = h.wrapping_mul(FNV_PRIME);
        }
    };
    feed(&parent.to_le_bytes());
    feed(&(label.len() as u64).to_le_bytes());
    feed(label.as_bytes());
    feed(&index.to_le_bytes());
    splitmix64(h)
}

/// Rng for element `index` of a set processed under `seed`.
pub fn element_rng(seed: u64, index: usize) -> SeededRng {
    seeded(derive_seed(seed, "element", index as u64))
}

/// Uniform draw from the closed range `[lo, hi]`; `lo == hi` is allowed.
pub fn uniform(rng: &mut SeededRng, lo: f64, hi: f64) -> f64 {
    use rand::Rng;
    lo + (hi - lo) * rng.gen::<f64>()
}
