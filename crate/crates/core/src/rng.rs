//! Deterministic random-number plumbing.
//!
//! All randomness in the crate flows from a single root seed through
//! counter-based splitting: stream `i` of root `s` is
//! `splitmix64(s ^ splitmix64(i + GAMMA))`. Child streams are therefore
//! independent of evaluation order, which keeps parallel and serial runs
//! bit-identical.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

const GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

/// SplitMix64 finalizer; a cheap, well-mixed 64-bit permutation.
pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(GAMMA);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derive the seed of child stream `stream` from a root seed.
pub fn child_seed(root: u64, stream: u64) -> u64 {
    splitmix64(root ^ splitmix64(stream.wrapping_add(GAMMA)))
}

/// A deterministic generator for the given root seed and stream index.
pub fn stream_rng(root: u64, stream: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(child_seed(root, stream))
}

/// A deterministic generator seeded directly.
pub fn seeded_rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::RngExt;

    #[test]
    fn streams_are_reproducible_and_distinct() {
        let mut a = stream_rng(7, 0);
        let mut b = stream_rng(7, 0);
        let mut c = stream_rng(7, 1);
        let xa: f64 = a.random();
        let xb: f64 = b.random();
        let xc: f64 = c.random();
        assert_eq!(xa.to_bits(), xb.to_bits());
        assert_ne!(xa.to_bits(), xc.to_bits());
    }

    #[test]
    fn child_seeds_do_not_collide_on_small_streams() {
        let mut seen = std::collections::HashSet::new();
        for s in 0..1000u64 {
            assert!(seen.insert(child_seed(42, s)));
        }
    }
}
