//! Seeded randomness shared by every sampler.
//!
//! All randomness flows from `u64` seeds through ChaCha8 so that a run is
//! reproducible from its configuration alone. Sub-seeds are derived with
//! SplitMix64 so independent streams never share state.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Rng = ChaCha8Rng;

pub fn seeded(seed: u64) -> Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// SplitMix64 finalizer.
pub fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derive an independent seed for a labelled sub-stream.
pub fn derive(seed: u64, stream: u64) -> u64 {
    mix64(seed ^ mix64(stream.wrapping_add(0x5851_F42D_4C95_7F2D)))
}

/// A standard normal deviate that depends only on `(seed, i, j)`.
///
/// Used by generator-backed sources, which must return the same entry no
/// matter in which order or how often it is read.
pub fn entry_normal(seed: u64, i: usize, j: usize) -> f64 {
    let h1 = mix64(seed ^ mix64((i as u64) << 32 ^ j as u64));
    let h2 = mix64(h1);
    // 53-bit uniforms in (0, 1].
    let u1 = ((h1 >> 11) as f64 + 1.0) / (1u64 << 53) as f64;
    let u2 = (h2 >> 11) as f64 / (1u64 << 53) as f64;
    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}
