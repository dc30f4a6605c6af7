use crate::error::{Error, Result};
use crate::real::Real;

/// Reference sample rate of the whole toolkit.
pub const SAMPLE_RATE: u32 = 48_000;

/// Mono sampled audio.
#[derive(Debug, Clone, PartialEq)]
pub struct Signal<T> {
    samples: Vec<T>,
    sample_rate: u32,
}

impl<T: Real> Signal<T> {
    /// Wraps samples, rejecting a zero rate or non-finite samples.
    pub fn new(samples: Vec<T>, sample_rate: u32) -> Result<Self> {
        if sample_rate == 0 {
            return Err(Error::InvalidSignal("sample rate must be positive".into()));
        }
        if let Some(i) = samples.iter().position(|s| !s.is_finite()) {
            return Err(Error::InvalidSignal(format!(
                "non-finite sample at index {i}"
            )));
        }
        Ok(Self {
            samples,
            sample_rate,
        })
    }

    /// Builds a signal from samples that are finite by construction.
    pub(crate) fn from_parts(samples: Vec<T>, sample_rate: u32) -> Self {
        debug_assert!(sample_rate > 0);
        debug_assert!(samples.iter().all(|s| s.is_finite()));
        Self {
            samples,
            sample_rate,
        }
    }

    pub fn zeros(len: usize, sample_rate: u32) -> Self {
        Self::from_parts(vec![T::zero(); len], sample_rate)
    }

    /// Unit impulse at `at`.
    pub fn impulse(len: usize, at: usize, sample_rate: u32) -> Self {
        let mut s = Self::zeros(len, sample_rate);
        s.samples[at] = T::one();
        s
    }

    pub fn samples(&self) -> &[T] {
        &self.samples
    }

    pub fn samples_mut(&mut self) -> &mut [T] {
        &mut self.samples
    }

    pub fn into_samples(self) -> Vec<T> {
        self.samples
    }

    pub fn sample_rate(&self) -> u32 {
        self.sample_rate
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn duration_secs(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate as f64
    }

    pub fn energy(&self) -> T {
        self.samples.iter().map(|&s| s * s).sum()
    }

    pub fn rms(&self) -> T {
        if self.samples.is_empty() {
            return T::zero();
        }
        (self.energy() / T::from_usize_lossy(self.samples.len())).sqrt()
    }

    /// Largest absolute sample value.
    pub fn peak(&self) -> T {
        self.samples.iter().fold(T::zero(), |m, s| m.max(s.abs()))
    }

    /// Index of the largest absolute sample (first one on ties).
    pub fn peak_index(&self) -> usize {
        let mut best = 0;
        let mut best_val = T::neg_infinity();
        for (i, s) in self.samples.iter().enumerate() {
            if s.abs() > best_val {
                best_val = s.abs();
                best = i;
            }
        }
        best
    }

    pub fn scaled(&self, gain: T) -> Self {
        Self::from_parts(
            self.samples.iter().map(|&s| s * gain).collect(),
            self.sample_rate,
        )
    }

    /// Truncates or zero-pads to exactly `len` samples.
    pub fn fit_to_len(&self, len: usize) -> Self {
        let mut samples = self.samples.clone();
        samples.resize(len, T::zero());
        Self::from_parts(samples, self.sample_rate)
    }

    /// Copy of `[start, start + len)`, zero-padded past the end.
    pub fn slice_padded(&self, start: usize, len: usize) -> Self {
        let mut out = vec![T::zero(); len];
        if start < self.samples.len() {
            let end = (start + len).min(self.samples.len());
            out[..end - start].copy_from_slice(&self.samples[start..end]);
        }
        Self::from_parts(out, self.sample_rate)
    }

    /// Elementwise sum; the result has the longer of the two lengths.
    pub fn add(&self, other: &Self) -> Result<Self> {
        check_rates(self.sample_rate, other.sample_rate)?;
        let n = self.len().max(other.len());
        let mut out = self.fit_to_len(n).samples;
        for (o, &s) in out.iter_mut().zip(other.samples.iter()) {
            *o = *o + s;
        }
        Ok(Self::from_parts(out, self.sample_rate))
    }

    pub fn require_rate(&self, expected: u32) -> Result<()> {
        if self.sample_rate != expected {
            return Err(Error::UnsupportedRate {
                got: self.sample_rate,
                expected,
            });
        }
        Ok(())
    }

    /// Converts to another scalar type.
    pub fn cast<U: Real>(&self) -> Signal<U> {
        Signal::from_parts(
            self.samples.iter().map(|s| U::lit(s.as_f64())).collect(),
            self.sample_rate,
        )
    }
}

pub(crate) fn check_rates(left: u32, right: u32) -> Result<()> {
    if left != right {
        return Err(Error::RateMismatch { left, right });
    }
    Ok(())
}

/// Two-channel audio, left and right of equal length and rate.
#[derive(Debug, Clone, PartialEq)]
pub struct StereoSignal<T> {
    left: Signal<T>,
    right: Signal<T>,
}

impl<T: Real> StereoSignal<T> {
    pub fn new(left: Signal<T>, right: Signal<T>) -> Result<Self> {
        check_rates(left.sample_rate(), right.sample_rate())?;
        if left.len() != right.len() {
            return Err(Error::InvalidSignal(format!(
                "channel lengths differ: {} vs {}",
                left.len(),
                right.len()
            )));
        }
        Ok(Self { left, right })
    }

    pub fn left(&self) -> &Signal<T> {
        &self.left
    }

    pub fn right(&self) -> &Signal<T> {
        &self.right
    }

    pub fn into_channels(self) -> (Signal<T>, Signal<T>) {
        (self.left, self.right)
    }

    pub fn len(&self) -> usize {
        self.left.len()
    }

    pub fn is_empty(&self) -> bool {
        self.left.is_empty()
    }

    pub fn sample_rate(&self) -> u32 {
        self.left.sample_rate()
    }

    pub fn peak(&self) -> T {
        self.left.peak().max(self.right.peak())
    }
}
