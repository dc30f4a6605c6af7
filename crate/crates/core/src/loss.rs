//! Multi-resolution STFT loss.
//!
//! For a reference `h` and estimate `ĥ` at one resolution:
//!
//! * spectral convergence `‖|S(h)| − |S(ĥ)|‖_F / ‖|S(h)|‖_F`
//! * log magnitude `(1/N) Σ |ln max(|S(h)|, ε) − ln max(|S(ĥ)|, ε)|`, where the
//!   sum runs over every frame and bin and `N` is the number of frames.
//!
//! The multi-resolution loss is the sum of both terms over all configured
//! resolutions. Natural logarithms are used throughout.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::real::Real;
use crate::signal::{check_rates, Signal};
use crate::stft::{SpectrogramMag, Stft, StftConfig};

/// Default magnitude floor applied before taking logs.
pub const DEFAULT_EPSILON: f64 = 1e-7;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MultiResConfig {
    pub resolutions: Vec<StftConfig>,
    pub epsilon: f64,
}

impl Default for MultiResConfig {
    /// FFT sizes 512, 1024 and 2048, hop a quarter frame, Hann window.
    fn default() -> Self {
        Self::from_fft_sizes(&[512, 1024, 2048]).expect("default resolutions are valid")
    }
}

impl MultiResConfig {
    pub fn from_fft_sizes(sizes: &[usize]) -> Result<Self> {
        let resolutions = sizes
            .iter()
            .map(|&n| StftConfig::quarter_hop(n))
            .collect::<Result<_>>()?;
        let cfg = Self {
            resolutions,
            epsilon: DEFAULT_EPSILON,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.resolutions.is_empty() {
            return Err(Error::Config(
                "at least one STFT resolution is required".into(),
            ));
        }
        if !(self.epsilon > 0.0) {
            return Err(Error::Config("epsilon must be positive".into()));
        }
        self.resolutions.iter().try_for_each(StftConfig::validate)
    }

    pub fn max_fft_size(&self) -> usize {
        self.resolutions
            .iter()
            .map(|r| r.fft_size)
            .max()
            .unwrap_or(0)
    }
}

/// Both loss terms at one resolution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossTerms<T> {
    pub spectral_convergence: T,
    pub log_magnitude: T,
}

impl<T: Real> LossTerms<T> {
    pub fn total(&self) -> T {
        self.spectral_convergence + self.log_magnitude
    }
}

fn check_pair<T: Real>(h: &Signal<T>, h_hat: &Signal<T>) -> Result<()> {
    check_rates(h.sample_rate(), h_hat.sample_rate())?;
    if h.len() != h_hat.len() {
        return Err(Error::InvalidSignal(format!(
            "loss operands differ in length: {} vs {}",
            h.len(),
            h_hat.len()
        )));
    }
    Ok(())
}

fn spectral_convergence_of<T: Real>(
    s: &SpectrogramMag<T>,
    s_hat: &SpectrogramMag<T>,
    ref_norm: T,
) -> Result<T> {
    if ref_norm == T::zero() {
        return Err(Error::DivisionByZero);
    }
    let diff: T = s
        .as_slice()
        .iter()
        .zip(s_hat.as_slice())
        .map(|(&a, &b)| (a - b) * (a - b))
        .sum();
    Ok(diff.sqrt() / ref_norm)
}

fn floored_logs<T: Real>(s: &SpectrogramMag<T>, eps: T) -> Vec<T> {
    s.as_slice().iter().map(|&a| a.max(eps).ln()).collect()
}

/// Log-magnitude term against precomputed reference logs.
fn log_magnitude_of<T: Real>(reference_log: &[T], s_hat: &SpectrogramMag<T>, eps: T) -> T {
    let l1: T = reference_log
        .iter()
        .zip(s_hat.as_slice())
        .map(|(&la, &b)| (la - b.max(eps).ln()).abs())
        .sum();
    l1 / T::from_usize_lossy(s_hat.n_frames())
}

fn frobenius<T: Real>(s: &SpectrogramMag<T>) -> T {
    s.as_slice().iter().map(|&m| m * m).sum::<T>().sqrt()
}

pub fn spectral_convergence<T: Real>(
    h: &Signal<T>,
    h_hat: &Signal<T>,
    cfg: &StftConfig,
) -> Result<T> {
    check_pair(h, h_hat)?;
    let stft = Stft::new(*cfg)?;
    let s = stft.magnitudes(h)?;
    spectral_convergence_of(&s, &stft.magnitudes(h_hat)?, frobenius(&s))
}

pub fn log_mag_loss<T: Real>(
    h: &Signal<T>,
    h_hat: &Signal<T>,
    cfg: &StftConfig,
    epsilon: f64,
) -> Result<T> {
    check_pair(h, h_hat)?;
    let stft = Stft::new(*cfg)?;
    let eps = T::lit(epsilon);
    Ok(log_magnitude_of(
        &floored_logs(&stft.magnitudes(h)?, eps),
        &stft.magnitudes(h_hat)?,
        eps,
    ))
}

pub fn multires_stft_loss<T: Real>(
    h: &Signal<T>,
    h_hat: &Signal<T>,
    mcfg: &MultiResConfig,
) -> Result<T> {
    check_pair(h, h_hat)?;
    MultiResLoss::new(h, mcfg)?.evaluate(h_hat)
}

struct Resolution<T: Real> {
    stft: Stft<T>,
    reference: SpectrogramMag<T>,
    reference_log: Vec<T>,
    reference_norm: T,
}

/// Multi-resolution loss against a fixed reference, with the reference
/// spectrograms computed once. Used directly by the parameter fitter.
pub struct MultiResLoss<T: Real> {
    resolutions: Vec<Resolution<T>>,
    epsilon: T,
    len: usize,
    sample_rate: u32,
}

impl<T: Real> MultiResLoss<T> {
    pub fn new(reference: &Signal<T>, mcfg: &MultiResConfig) -> Result<Self> {
        mcfg.validate()?;
        let resolutions = mcfg
            .resolutions
            .iter()
            .map(|cfg| {
                let stft = Stft::new(*cfg)?;
                let reference = stft.magnitudes(reference)?;
                let reference_norm = frobenius(&reference);
                let reference_log = floored_logs(&reference, T::lit(mcfg.epsilon));
                Ok(Resolution {
                    stft,
                    reference,
                    reference_log,
                    reference_norm,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            resolutions,
            epsilon: T::lit(mcfg.epsilon),
            len: reference.len(),
            sample_rate: reference.sample_rate(),
        })
    }

    pub fn terms(&self, candidate: &Signal<T>) -> Result<Vec<LossTerms<T>>> {
        check_rates(self.sample_rate, candidate.sample_rate())?;
        self.terms_of(candidate.samples())
    }

    pub(crate) fn terms_of(&self, candidate: &[T]) -> Result<Vec<LossTerms<T>>> {
        if candidate.len() != self.len {
            return Err(Error::InvalidSignal(format!(
                "loss operands differ in length: {} vs {}",
                self.len,
                candidate.len()
            )));
        }
        self.resolutions
            .iter()
            .map(|r| {
                let s_hat = r.stft.magnitudes_of(candidate)?;
                Ok(LossTerms {
                    spectral_convergence: spectral_convergence_of(
                        &r.reference,
                        &s_hat,
                        r.reference_norm,
                    )?,
                    log_magnitude: log_magnitude_of(&r.reference_log, &s_hat, self.epsilon),
                })
            })
            .collect()
    }

    pub fn evaluate(&self, candidate: &Signal<T>) -> Result<T> {
        Ok(self.terms(candidate)?.iter().map(LossTerms::total).sum())
    }

    pub(crate) fn evaluate_samples(&self, candidate: &[T]) -> Result<T> {
        Ok(self.terms_of(candidate)?.iter().map(LossTerms::total).sum())
    }
}
