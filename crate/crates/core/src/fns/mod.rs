//! Filtered-noise-shaping RIR model: an explicit early part followed by ten
//! exponentially decaying octave bands of a fixed noise.

mod blind;
mod fit;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::filterbank::{BandSet, OctaveFilterBank};
use crate::noise::seeded_noise;
use crate::real::Real;
use crate::signal::{Signal, SAMPLE_RATE};
use crate::window::hann_fade_in;

pub use blind::{blind_predict, estimate_blind_decay, BlindDecay, BlindDecayConfig};
pub use fit::{fit_to_rir, FitConfig, FitResult};

/// Early part: 0.05 s at 48 kHz.
pub const EARLY_LEN: usize = 2400;
/// Decoded RIR: 1 s at 48 kHz.
pub const RIR_LEN: usize = 48_000;
pub const N_BANDS: usize = 10;
/// 5 ms crossfade ending at the early/late boundary.
pub const CROSSFADE_LEN: usize = 240;
pub const MIN_T60: f64 = 0.01;
pub const MAX_T60: f64 = 5.0;

pub fn fns_bands() -> BandSet {
    BandSet::full_range()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FnsParams {
    pub early: Vec<f64>,
    pub band_gains: Vec<f64>,
    /// Seconds, in (0.01, 5].
    pub band_t60: Vec<f64>,
    pub noise_seed: u64,
}

impl FnsParams {
    pub fn validate(&self) -> Result<()> {
        if self.early.len() != EARLY_LEN {
            return Err(Error::Config(format!(
                "early part needs {EARLY_LEN} samples, got {}",
                self.early.len()
            )));
        }
        if self.band_gains.len() != N_BANDS || self.band_t60.len() != N_BANDS {
            return Err(Error::Config(format!(
                "need {N_BANDS} band gains and T60s, got {} and {}",
                self.band_gains.len(),
                self.band_t60.len()
            )));
        }
        if self.early.iter().any(|v| !v.is_finite()) {
            return Err(Error::Config("early samples must be finite".into()));
        }
        if self
            .band_gains
            .iter()
            .any(|g| !(g.is_finite() && *g >= 0.0))
        {
            return Err(Error::Config(
                "band gains must be finite and nonnegative".into(),
            ));
        }
        if self
            .band_t60
            .iter()
            .any(|t| !(*t > MIN_T60 && *t <= MAX_T60))
        {
            return Err(Error::Config(format!(
                "band T60s must lie in ({MIN_T60}, {MAX_T60}]"
            )));
        }
        Ok(())
    }
}

/// Decoder with the band noises of one seed precomputed.
#[derive(Debug, Clone)]
pub struct FnsDecoder<T> {
    noise_seed: u64,
    /// Band-passed noise, each scaled to unit peak.
    bands: Vec<Vec<T>>,
    fade: Vec<T>,
}

impl<T: Real> FnsDecoder<T> {
    pub fn new(noise_seed: u64) -> Result<Self> {
        let noise = seeded_noise::<f64>(RIR_LEN, noise_seed)?;
        let bank = OctaveFilterBank::<f64>::new(&fns_bands(), SAMPLE_RATE)?;
        let bands = bank
            .process(&noise)?
            .into_iter()
            .map(|b| {
                let g = 1.0 / b.peak();
                b.samples().iter().map(|&v| T::lit(v * g)).collect()
            })
            .collect();
        Ok(Self {
            noise_seed,
            bands,
            fade: hann_fade_in(CROSSFADE_LEN),
        })
    }

    pub fn noise_seed(&self) -> u64 {
        self.noise_seed
    }

    /// Writes `gain · noise_b(t) · 10^(-3t/T60)` into `out`.
    pub(crate) fn band_contribution(&self, band: usize, gain: f64, t60: f64, out: &mut [T]) {
        let step = 10f64.powf(-3.0 / (t60 * f64::from(SAMPLE_RATE)));
        let mut env = gain;
        for (o, &n) in out.iter_mut().zip(&self.bands[band]) {
            *o = n * T::lit(env);
            env *= step;
        }
    }

    /// Sums band contributions in band order and splices in the early part.
    pub(crate) fn assemble(&self, early: &[f64], contributions: &[Vec<T>], out: &mut [T]) {
        let xstart = EARLY_LEN - CROSSFADE_LEN;
        for (i, o) in out.iter_mut().enumerate() {
            let late = if i < xstart {
                T::zero()
            } else {
                contributions.iter().fold(T::zero(), |acc, c| acc + c[i])
            };
            *o = if i < xstart {
                T::lit(early[i])
            } else if i < EARLY_LEN {
                let r = self.fade[i - xstart];
                T::lit(early[i]) * (T::one() - r) + late * r
            } else {
                late
            };
        }
    }

    pub fn decode(&self, params: &FnsParams) -> Result<Signal<T>> {
        params.validate()?;
        if params.noise_seed != self.noise_seed {
            return Err(Error::Config(format!(
                "decoder built for noise seed {}, params use {}",
                self.noise_seed, params.noise_seed
            )));
        }
        let mut contributions = vec![vec![T::zero(); RIR_LEN]; N_BANDS];
        for (b, c) in contributions.iter_mut().enumerate() {
            self.band_contribution(b, params.band_gains[b], params.band_t60[b], c);
        }
        let mut out = vec![T::zero(); RIR_LEN];
        self.assemble(&params.early, &contributions, &mut out);
        Ok(Signal::from_parts(out, SAMPLE_RATE))
    }
}

/// One-off decode; build an [`FnsDecoder`] to decode many parameter sets.
pub fn decode<T: Real>(params: &FnsParams) -> Result<Signal<T>> {
    FnsDecoder::new(params.noise_seed)?.decode(params)
}
