//! Binaural rendering of a monaural RIR: the late part is decorrelated by
//! segment-wise convolution with binaural noise, then spliced behind an HRIR.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::noise::{fill_gaussian, rng_from_seed};
use crate::real::Real;
use crate::signal::{check_rates, Signal, StereoSignal, SAMPLE_RATE};
use crate::window::{hann_fade_in, hann_periodic};

/// Peak the predicted RIR is normalized to.
pub const PRED_PEAK: f64 = 0.5;
/// Peak of the HRIRs it is merged with.
pub const HRIR_PEAK: f64 = 0.6;
pub const PRED_PEAK_TOLERANCE: f64 = 0.01;
pub const BRIR_LEN: usize = 48_000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BinauralConfig {
    /// Hann segment length; segments overlap by half.
    pub segment_s: f64,
    /// Length of each left/right noise kernel.
    pub noise_s: f64,
    /// Where the HRIR hands over to the late field.
    pub boundary_s: f64,
    /// Length of the crossfade centred on the boundary.
    pub ramp_s: f64,
}

impl Default for BinauralConfig {
    fn default() -> Self {
        Self {
            segment_s: 0.02,
            noise_s: 0.005,
            boundary_s: 0.05,
            ramp_s: 0.01,
        }
    }
}

fn samples_of(secs: f64, what: &str) -> Result<usize> {
    let n = (secs * f64::from(SAMPLE_RATE)).round();
    if !(n.is_finite() && n >= 1.0) {
        return Err(Error::Config(format!("{what} of {secs} s is too short")));
    }
    Ok(n as usize)
}

impl BinauralConfig {
    pub fn validate(&self) -> Result<()> {
        let seg = samples_of(self.segment_s, "segment")?;
        if seg < 2 || seg % 2 != 0 {
            return Err(Error::Config(format!(
                "segment must be an even number of samples, got {seg}"
            )));
        }
        samples_of(self.noise_s, "noise kernel")?;
        let ramp = samples_of(self.ramp_s, "ramp")?;
        let boundary = samples_of(self.boundary_s, "boundary")?;
        if ramp / 2 > boundary || boundary + ramp / 2 > BRIR_LEN {
            return Err(Error::Config(format!(
                "ramp of {ramp} samples does not fit around boundary {boundary}"
            )));
        }
        Ok(())
    }
}

/// Complementary ramps `(fade_out, fade_in)`: `fade_out` is `fade_in`
/// reversed, and the two sum to one at every sample.
pub fn crossfade_ramps<T: Real>(len: usize) -> (Vec<T>, Vec<T>) {
    let fade_in: Vec<T> = hann_fade_in(len);
    let fade_out = fade_in.iter().rev().copied().collect();
    (fade_out, fade_in)
}

/// Zero-lag normalized cross-correlation of the two channels; 0 when
/// either is silent.
pub fn interaural_correlation<T: Real>(x: &StereoSignal<T>) -> f64 {
    let (mut lr, mut ll, mut rr) = (0.0, 0.0, 0.0);
    for (l, r) in x.left().samples().iter().zip(x.right().samples()) {
        let (l, r) = (l.as_f64(), r.as_f64());
        lr += l * r;
        ll += l * l;
        rr += r * r;
    }
    if ll == 0.0 || rr == 0.0 {
        0.0
    } else {
        lr / (ll * rr).sqrt()
    }
}

/// Splits `late` into Hann segments at 50% overlap, convolves each with
/// its own unit-energy noise pair and overlap-adds per channel. Segment
/// contributions add incoherently, so the output is scaled by
/// `sqrt(hop / Σ w²)` to keep each channel's energy. The output has the
/// input's length.
pub fn binauralize_late<T: Real>(
    late: &Signal<T>,
    seed: u64,
    cfg: &BinauralConfig,
) -> Result<StereoSignal<T>> {
    cfg.validate()?;
    if late.is_empty() {
        return Err(Error::InvalidSignal("late part is empty".into()));
    }
    let seg = samples_of(cfg.segment_s, "segment")?;
    let hop = seg / 2;
    let kernel_len = samples_of(cfg.noise_s, "noise kernel")?;
    let w: Vec<f64> = hann_periodic(seg);
    let comp = (hop as f64 / w.iter().map(|v| v * v).sum::<f64>()).sqrt();

    let x: Vec<f64> = late.samples().iter().map(|v| v.as_f64()).collect();
    let n = x.len();
    let mut out = [vec![0.0; n], vec![0.0; n]];
    let mut rng = rng_from_seed(seed);
    let mut kernel = vec![0.0; kernel_len];
    let mut segment = vec![0.0; seg];
    // The first frame starts a hop early so every sample is covered twice.
    let mut start = -(hop as isize);
    while start < n as isize {
        for (i, s) in segment.iter_mut().enumerate() {
            let t = start + i as isize;
            *s = if (0..n as isize).contains(&t) {
                x[t as usize] * w[i]
            } else {
                0.0
            };
        }
        for channel in &mut out {
            fill_gaussian(&mut rng, &mut kernel);
            let norm = kernel.iter().map(|v| v * v).sum::<f64>().sqrt();
            kernel.iter_mut().for_each(|v| *v /= norm);
            if segment.iter().all(|&s| s == 0.0) {
                continue;
            }
            for (i, &s) in segment.iter().enumerate() {
                if s == 0.0 {
                    continue;
                }
                let base = start + i as isize;
                for (j, &k) in kernel.iter().enumerate() {
                    let t = base + j as isize;
                    if (0..n as isize).contains(&t) {
                        channel[t as usize] += s * k;
                    }
                }
            }
        }
        start += hop as isize;
    }
    let rate = late.sample_rate();
    let [l, r] =
        out.map(|c| Signal::from_parts(c.into_iter().map(|v| T::lit(v * comp)).collect(), rate));
    StereoSignal::new(l, r)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Brir<T> {
    pub signal: StereoSignal<T>,
    /// Gain applied to the predicted RIR.
    pub scale: f64,
}

/// Places the HRIR at sample 0 and crossfades into the binauralized late
/// part of `pred` (scaled from the predicted-RIR peak to the HRIR peak)
/// with complementary Hann ramps centred on the boundary. Output is 1 s.
pub fn merge_with_hrir<T: Real>(
    pred: &Signal<T>,
    hrir: &StereoSignal<T>,
    seed: u64,
    cfg: &BinauralConfig,
) -> Result<Brir<T>> {
    cfg.validate()?;
    pred.require_rate(SAMPLE_RATE)?;
    check_rates(pred.sample_rate(), hrir.sample_rate())?;
    let peak = pred.peak().as_f64();
    if (peak - PRED_PEAK).abs() > PRED_PEAK * PRED_PEAK_TOLERANCE {
        return Err(Error::Config(format!(
            "predicted RIR peak {peak} is not {PRED_PEAK} ± 1%"
        )));
    }
    let boundary = samples_of(cfg.boundary_s, "boundary")?;
    if hrir.len() > boundary {
        return Err(Error::Config(format!(
            "HRIR has {} samples, longer than the {boundary}-sample boundary",
            hrir.len()
        )));
    }
    let ramp_len = samples_of(cfg.ramp_s, "ramp")?;
    let ramp_start = boundary - ramp_len / 2;
    let (fade_out, fade_in) = crossfade_ramps::<f64>(ramp_len);

    let scale = HRIR_PEAK / PRED_PEAK;
    let late = binauralize_late(&pred.fit_to_len(BRIR_LEN).scaled(T::lit(scale)), seed, cfg)?;
    let merge = |early: &Signal<T>, late: &Signal<T>| {
        let out: Vec<T> = (0..BRIR_LEN)
            .map(|i| {
                let e = early.samples().get(i).map_or(0.0, |v| v.as_f64());
                let l = late.samples()[i].as_f64();
                let v = if i < ramp_start {
                    e
                } else if i < ramp_start + ramp_len {
                    e * fade_out[i - ramp_start] + l * fade_in[i - ramp_start]
                } else {
                    l
                };
                T::lit(v)
            })
            .collect();
        Signal::from_parts(out, SAMPLE_RATE)
    };
    let signal = StereoSignal::new(
        merge(hrir.left(), late.left()),
        merge(hrir.right(), late.right()),
    )?;
    Ok(Brir { signal, scale })
}
