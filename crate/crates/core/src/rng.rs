//! Seeded random numbers: SplitMix64 streams and per-replication seeds.

use rand_core::{RngCore, SeedableRng};
pub use rand_xoshiro::SplitMix64;

/// Golden-ratio increment of the SplitMix64 state.
const PHI: u64 = 0x9e37_79b9_7f4a_7c15;

/// Seed of replication `r`: the first SplitMix64 output after seeding with
/// `master + r * 0x9e3779b97f4a7c15`, which is output `r` (from zero) of the
/// SplitMix64 stream seeded with `master`.
pub fn replication_seed(master: u64, r: u64) -> u64 {
    SplitMix64::seed_from_u64(master.wrapping_add(r.wrapping_mul(PHI))).next_u64()
}

/// Generator for one trajectory.
pub fn stream(seed: u64) -> SplitMix64 {
    SplitMix64::seed_from_u64(seed)
}

/// Uniform double in `[0, 1)` from the top 53 bits.
#[inline]
pub fn uniform(rng: &mut impl RngCore) -> f64 {
    (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}
