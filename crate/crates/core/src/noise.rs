//! Deterministic noise and seed derivation.
//!
//! Generator: ChaCha8 (`rand_chacha` 0.9) keyed with `SeedableRng::seed_from_u64`.
//! A uniform in `[0, 1)` is the top 53 bits of `next_u64` scaled by 2⁻⁵³.
//! Gaussian samples use the Box–Muller transform on consecutive uniform
//! pairs `(u1, u2)`: `r = sqrt(-2 ln(1 - u1))`, emitting `r cos(2π u2)` then
//! `r sin(2π u2)`. Samples are generated in `f64` and then converted, so a
//! seed produces the same stream for every scalar type.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::real::Real;
use crate::signal::{Signal, SAMPLE_RATE};

pub type NoiseRng = ChaCha8Rng;

pub fn rng_from_seed(seed: u64) -> NoiseRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Mixes a master seed with an index (splitmix64 finaliser), so parallel
/// workers can derive independent streams without coordinating.
pub fn derive_seed(master: u64, index: u64) -> u64 {
    let mut z = master ^ index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn uniform01(rng: &mut impl RngCore) -> f64 {
    (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

pub fn uniform_in(rng: &mut impl RngCore, lo: f64, hi: f64) -> f64 {
    lo + (hi - lo) * uniform01(rng)
}

/// Uniform on a log scale between two positive bounds.
pub fn log_uniform_in(rng: &mut impl RngCore, lo: f64, hi: f64) -> f64 {
    (lo.ln() + (hi.ln() - lo.ln()) * uniform01(rng)).exp()
}

/// Fills `out` with standard normal samples.
pub fn fill_gaussian(rng: &mut impl RngCore, out: &mut [f64]) {
    let mut chunks = out.chunks_mut(2);
    for pair in &mut chunks {
        let u1 = uniform01(rng);
        let u2 = uniform01(rng);
        let r = (-2.0 * (1.0 - u1).ln()).sqrt();
        let theta = 2.0 * std::f64::consts::PI * u2;
        pair[0] = r * theta.cos();
        if pair.len() > 1 {
            pair[1] = r * theta.sin();
        }
    }
}

/// Zero-mean, unit-variance white Gaussian noise at the reference rate.
pub fn seeded_noise<T: Real>(n: usize, seed: u64) -> Result<Signal<T>> {
    if n == 0 {
        return Err(Error::Config("noise length must be positive".into()));
    }
    let mut buf = vec![0.0; n];
    fill_gaussian(&mut rng_from_seed(seed), &mut buf);
    Ok(Signal::from_parts(
        buf.into_iter().map(T::lit).collect(),
        SAMPLE_RATE,
    ))
}
