//! Synthetic room impulse responses and the tooling around them: shoebox
//! room synthesis, per-room normalization, reverberation metrics, a
//! multi-resolution STFT loss, a filtered-noise RIR model with a fitter,
//! reverberant mixtures and binaural rendering.
//!
//! Numeric code is generic over [`real::Real`] (`f32` or `f64`); the
//! aliases below fix the scalar type.

pub mod binaural;
pub mod convolve;
pub mod error;
pub mod eval;
pub mod filterbank;
pub mod fns;
pub mod loss;
pub mod manifest;
pub mod metrics;
pub mod mixture;
pub mod noise;
pub mod prep;
pub mod real;
pub mod room;
pub mod signal;
pub mod stft;
pub mod wav;
pub mod window;

pub use error::{Error, Result};

pub type Signal64 = signal::Signal<f64>;
pub type Signal32 = signal::Signal<f32>;
pub type Stereo64 = signal::StereoSignal<f64>;
pub type Stereo32 = signal::StereoSignal<f32>;
pub type Rir64 = room::Rir<f64>;
pub type Rir32 = room::Rir<f32>;
pub type RoomRirSet64 = room::RoomRirSet<f64>;
pub type RoomRirSet32 = room::RoomRirSet<f32>;
pub type FnsDecoder64 = fns::FnsDecoder<f64>;
pub type FnsDecoder32 = fns::FnsDecoder<f32>;
pub type MixtureExample64 = mixture::MixtureExample<f64>;
pub type MixtureExample32 = mixture::MixtureExample<f32>;
