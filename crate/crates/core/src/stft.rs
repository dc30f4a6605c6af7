//! Magnitude short-time Fourier transform.
//!
//! Frames are taken without centring or padding: frame `i` covers samples
//! `[i * hop, i * hop + fft_size)`, so a signal of length `L` yields
//! `1 + (L - fft_size) / hop` frames and `fft_size / 2 + 1` bins per frame.

use std::sync::Arc;

use realfft::{RealFftPlanner, RealToComplex};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::real::Real;
use crate::signal::Signal;
use crate::window::WindowKind;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct StftConfig {
    pub fft_size: usize,
    pub hop_size: usize,
    #[serde(default)]
    pub window: WindowKind,
}

impl StftConfig {
    pub fn new(fft_size: usize, hop_size: usize) -> Result<Self> {
        let cfg = Self {
            fft_size,
            hop_size,
            window: WindowKind::Hann,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Hann window with a hop of a quarter frame.
    pub fn quarter_hop(fft_size: usize) -> Result<Self> {
        Self::new(fft_size, fft_size / 4)
    }

    pub fn validate(&self) -> Result<()> {
        if !self.fft_size.is_power_of_two() || self.fft_size < 2 {
            return Err(Error::Config(format!(
                "fft size {} is not a power of two",
                self.fft_size
            )));
        }
        if self.hop_size == 0 || self.hop_size > self.fft_size {
            return Err(Error::Config(format!(
                "hop {} must lie in 1..={}",
                self.hop_size, self.fft_size
            )));
        }
        Ok(())
    }

    pub fn n_bins(&self) -> usize {
        self.fft_size / 2 + 1
    }

    pub fn n_frames(&self, len: usize) -> Option<usize> {
        (len >= self.fft_size).then(|| 1 + (len - self.fft_size) / self.hop_size)
    }
}

/// Magnitude spectrogram stored row-major, one row per frame.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectrogramMag<T> {
    data: Vec<T>,
    n_frames: usize,
    n_bins: usize,
    config: StftConfig,
}

impl<T: Real> SpectrogramMag<T> {
    pub fn n_frames(&self) -> usize {
        self.n_frames
    }

    pub fn n_bins(&self) -> usize {
        self.n_bins
    }

    pub fn config(&self) -> &StftConfig {
        &self.config
    }

    pub fn frame(&self, i: usize) -> &[T] {
        &self.data[i * self.n_bins..(i + 1) * self.n_bins]
    }

    pub fn get(&self, frame: usize, bin: usize) -> T {
        self.data[frame * self.n_bins + bin]
    }

    /// All magnitudes in row-major order.
    pub fn as_slice(&self) -> &[T] {
        &self.data
    }
}

/// A planned STFT that can be applied repeatedly.
pub struct Stft<T: Real> {
    config: StftConfig,
    window: Vec<T>,
    fft: Arc<dyn RealToComplex<T>>,
}

impl<T: Real> Stft<T> {
    pub fn new(config: StftConfig) -> Result<Self> {
        config.validate()?;
        let fft = RealFftPlanner::new().plan_fft_forward(config.fft_size);
        Ok(Self {
            window: config.window.coefficients(config.fft_size),
            config,
            fft,
        })
    }

    pub fn config(&self) -> &StftConfig {
        &self.config
    }

    pub fn magnitudes(&self, x: &Signal<T>) -> Result<SpectrogramMag<T>> {
        self.magnitudes_of(x.samples())
    }

    pub(crate) fn magnitudes_of(&self, x: &[T]) -> Result<SpectrogramMag<T>> {
        let n = self.config.fft_size;
        let n_frames = self.config.n_frames(x.len()).ok_or(Error::TooShort {
            needed: n,
            got: x.len(),
        })?;
        let n_bins = self.config.n_bins();

        let mut data = Vec::with_capacity(n_frames * n_bins);
        let mut buf = self.fft.make_input_vec();
        let mut spectrum = self.fft.make_output_vec();
        let mut scratch = self.fft.make_scratch_vec();
        for f in 0..n_frames {
            let start = f * self.config.hop_size;
            for ((b, &s), &w) in buf.iter_mut().zip(&x[start..start + n]).zip(&self.window) {
                *b = s * w;
            }
            self.fft
                .process_with_scratch(&mut buf, &mut spectrum, &mut scratch)
                .expect("buffer sizes match the plan");
            data.extend(spectrum.iter().map(|c| c.norm_sqr().sqrt()));
        }
        Ok(SpectrogramMag {
            data,
            n_frames,
            n_bins,
            config: self.config,
        })
    }
}

pub fn stft_mag<T: Real>(x: &Signal<T>, cfg: &StftConfig) -> Result<SpectrogramMag<T>> {
    Stft::new(*cfg)?.magnitudes(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::noise::seeded_noise;

    #[test]
    fn frame_count_formula() {
        let cfg = StftConfig::new(1024, 256).unwrap();
        let x = Signal::<f64>::zeros(4096, 48_000);
        let s = stft_mag(&x, &cfg).unwrap();
        assert_eq!(s.n_frames(), 13);
        assert_eq!(s.n_bins(), 513);
        assert!(s.as_slice().iter().all(|&m| m == 0.0));
    }

    #[test]
    fn too_short_is_an_error() {
        let cfg = StftConfig::new(1024, 256).unwrap();
        let x = Signal::<f64>::zeros(1000, 48_000);
        assert!(matches!(
            stft_mag(&x, &cfg),
            Err(Error::TooShort {
                needed: 1024,
                got: 1000
            })
        ));
    }

    #[test]
    fn config_validation() {
        assert!(StftConfig::new(1000, 250).is_err());
        assert!(StftConfig::new(1024, 0).is_err());
        assert!(StftConfig::new(1024, 2048).is_err());
        assert!(StftConfig::new(1024, 1024).is_ok());
    }

    #[test]
    fn bin_centred_sinusoid_matches_direct_dft() {
        let n = 256;
        let k0 = 19;
        let x: Vec<f64> = (0..n)
            .map(|i| (2.0 * std::f64::consts::PI * k0 as f64 * i as f64 / n as f64).cos())
            .collect();
        let cfg = StftConfig::new(n, n).unwrap();
        let s = stft_mag(&Signal::new(x.clone(), 48_000).unwrap(), &cfg).unwrap();
        assert_eq!(s.n_frames(), 1);

        // Independent direct DFT with an explicitly written periodic Hann.
        for k in 0..=n / 2 {
            let (mut re, mut im) = (0.0, 0.0);
            for (i, &v) in x.iter().enumerate() {
                let w = 0.5 - 0.5 * (2.0 * std::f64::consts::PI * i as f64 / n as f64).cos();
                let ph = -2.0 * std::f64::consts::PI * (k * i) as f64 / n as f64;
                re += v * w * ph.cos();
                im += v * w * ph.sin();
            }
            assert!((s.get(0, k) - (re * re + im * im).sqrt()).abs() < 1e-9);
        }
        let peak_bin = (0..=n / 2)
            .max_by(|&a, &b| s.get(0, a).partial_cmp(&s.get(0, b)).unwrap())
            .unwrap();
        assert_eq!(peak_bin, k0);
        let total: f64 = s.frame(0).iter().map(|m| m * m).sum();
        let near: f64 = (k0 - 1..=k0 + 1).map(|k| s.get(0, k).powi(2)).sum();
        assert!(near / total > 0.999);
    }

    #[test]
    fn parseval_ratio_is_stable() {
        // Sum of one-sided |X|^2 over windowed energy is N/2 up to the DC and
        // Nyquist terms, so the ratio barely moves between random inputs.
        let cfg = StftConfig::new(512, 128).unwrap();
        let win: Vec<f64> = WindowKind::Hann.coefficients(512);
        let mut ratios = Vec::new();
        for seed in 0..8 {
            let x: Signal<f64> = seeded_noise(8192, seed).unwrap();
            let s = stft_mag(&x, &cfg).unwrap();
            let spec: f64 = s.as_slice().iter().map(|m| m * m).sum();
            let mut windowed = 0.0;
            for f in 0..s.n_frames() {
                let frame = &x.samples()[f * 128..f * 128 + 512];
                windowed += frame
                    .iter()
                    .zip(&win)
                    .map(|(v, w)| (v * w).powi(2))
                    .sum::<f64>();
            }
            ratios.push(spec / windowed);
        }
        let mean = ratios.iter().sum::<f64>() / ratios.len() as f64;
        for r in &ratios {
            assert!((r / mean - 1.0).abs() < 0.01, "ratio {r} vs mean {mean}");
        }
        assert!((mean / 256.0 - 1.0).abs() < 0.01);
    }
}
