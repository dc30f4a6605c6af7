//! Hann windows and complementary crossfade ramps.

use serde::{Deserialize, Serialize};

use crate::real::Real;

/// Tapering function applied to STFT frames.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WindowKind {
    /// Periodic Hann, `0.5 - 0.5 cos(2πn/N)`.
    #[default]
    Hann,
    Rectangular,
}

impl WindowKind {
    pub fn coefficients<T: Real>(self, len: usize) -> Vec<T> {
        match self {
            WindowKind::Hann => hann_periodic(len),
            WindowKind::Rectangular => vec![T::one(); len],
        }
    }
}

pub fn hann_periodic<T: Real>(len: usize) -> Vec<T> {
    let two_pi = T::PI() + T::PI();
    let n = T::from_usize_lossy(len);
    (0..len)
        .map(|i| {
            let phase = two_pi * T::from_usize_lossy(i) / n;
            T::lit(0.5) - T::lit(0.5) * phase.cos()
        })
        .collect()
}

/// Rising half-Hann ramp of `len` samples, sampled at bin centres so it never
/// reaches exactly 0 or 1. `1 - r` is the matching fade-out.
pub fn hann_fade_in<T: Real>(len: usize) -> Vec<T> {
    let n = T::from_usize_lossy(len);
    (0..len)
        .map(|i| {
            let x = (T::from_usize_lossy(i) + T::lit(0.5)) / n;
            T::lit(0.5) - T::lit(0.5) * (T::PI() * x).cos()
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hann_periodic_shape() {
        let w: Vec<f64> = hann_periodic(8);
        assert_eq!(w[0], 0.0);
        assert!((w[4] - 1.0).abs() < 1e-15);
        assert!((w[2] - 0.5).abs() < 1e-15);
        assert!((w[6] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn fade_is_monotone_and_complementary() {
        let r: Vec<f64> = hann_fade_in(480);
        assert!(r.windows(2).all(|p| p[1] > p[0]));
        assert!(r[0] > 0.0 && r[479] < 1.0);
        for &x in &r {
            assert!(((1.0 - x) + x - 1.0).abs() <= 1e-12);
        }
    }
}
