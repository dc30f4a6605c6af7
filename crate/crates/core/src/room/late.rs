use crate::error::{Error, Result};
use crate::filterbank::OctaveFilterBank;
use crate::noise::seeded_noise;
use crate::real::Real;
use crate::signal::{Signal, SAMPLE_RATE};
use crate::window::hann_fade_in;

use super::{late_bands, RoomSpec};

/// Length of the Hann crossfade into the late field.
pub const LATE_CROSSFADE_S: f64 = 0.005;

/// Amplitude envelope `10^(-3 t / T60)`.
pub fn decay_envelope(t60: f64, t: f64) -> f64 {
    10f64.powf(-3.0 * t / t60)
}

/// Late field without the onset ramp: octave bands of one white noise, each
/// decaying with its own T60 from time zero.
pub(crate) fn late_unramped(room: &RoomSpec, len: usize, seed: u64) -> Result<Vec<f64>> {
    let noise = seeded_noise::<f64>(len, seed)?;
    let bank = OctaveFilterBank::<f64>::new(&late_bands(), SAMPLE_RATE)?;
    let fs = f64::from(SAMPLE_RATE);
    let mut out = vec![0.0; len];
    for (b, t60) in room.band_t60s().into_iter().enumerate() {
        let band = bank.filter_band(b, &noise)?;
        // Per-sample decay factor, applied incrementally.
        let step = decay_envelope(t60, 1.0 / fs);
        let mut env = 1.0;
        for (o, v) in out.iter_mut().zip(band.samples()) {
            *o += v * env;
            env *= step;
        }
    }
    Ok(out)
}

/// Zero before `t_cut - 5 ms`, Hann ramp up to `t_cut`, unchanged after.
pub(crate) fn apply_onset_ramp(x: &mut [f64], t_cut: f64) {
    let (start, len) = crossfade_span(t_cut);
    let ramp: Vec<f64> = hann_fade_in(len);
    for (i, v) in x.iter_mut().enumerate() {
        if i < start {
            *v = 0.0;
        } else if i < start + len {
            *v *= ramp[i - start];
        }
    }
}

/// First sample and length of the crossfade that ends at `t_cut`.
pub(crate) fn crossfade_span(t_cut: f64) -> (usize, usize) {
    let fs = f64::from(SAMPLE_RATE);
    let len = (LATE_CROSSFADE_S * fs).round() as usize;
    let end = (t_cut * fs).round() as usize;
    (end.saturating_sub(len), len)
}

/// Moorer-style late reverberation of `total_len` seconds, faded in just
/// before `t_cut`.
pub fn moorer_late<T: Real>(
    room: &RoomSpec,
    t_cut: f64,
    total_len: f64,
    seed: u64,
) -> Result<Signal<T>> {
    room.validate()?;
    if !(t_cut.is_finite() && t_cut >= 0.0 && total_len > t_cut) {
        return Err(Error::Config(format!(
            "late field needs 0 <= t_cut < total_len, got {t_cut} and {total_len}"
        )));
    }
    let len = (total_len * f64::from(SAMPLE_RATE)).round() as usize;
    let mut x = late_unramped(room, len, seed)?;
    apply_onset_ramp(&mut x, t_cut);
    Ok(Signal::from_parts(
        x.into_iter().map(T::lit).collect(),
        SAMPLE_RATE,
    ))
}
