use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::filterbank::{BandSet, OctaveFilterBank};
use crate::real::Real;
use crate::signal::Signal;

use super::{fns_bands, FnsParams, EARLY_LEN, MAX_T60, MIN_T60, N_BANDS};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlindDecayConfig {
    pub frame_s: f64,
    pub hop_s: f64,
    /// Shortest segment accepted as free decay.
    pub min_segment_s: f64,
    /// Minimum coefficient of determination of the linear fit.
    pub min_r2: f64,
    /// Minimum level drop across a segment, dB.
    pub min_drop_db: f64,
}

impl Default for BlindDecayConfig {
    fn default() -> Self {
        Self {
            frame_s: 0.02,
            hop_s: 0.01,
            min_segment_s: 0.2,
            min_r2: 0.9,
            min_drop_db: 5.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlindDecay {
    pub centers: Vec<f64>,
    /// T60 per analysis band, `None` where no free decay was found.
    pub t60: Vec<Option<f64>>,
}

impl BlindDecay {
    /// Median over the bands that produced an estimate.
    pub fn median(&self) -> f64 {
        let mut v: Vec<f64> = self.t60.iter().flatten().copied().collect();
        v.sort_by(f64::total_cmp);
        let m = v.len() / 2;
        if v.len() % 2 == 1 {
            v[m]
        } else {
            0.5 * (v[m - 1] + v[m])
        }
    }

    /// Estimate for the band nearest (in octaves) to `center_hz`, falling
    /// back to the median.
    pub fn nearest(&self, center_hz: f64) -> f64 {
        self.centers
            .iter()
            .zip(&self.t60)
            .filter_map(|(c, t)| t.map(|t| ((c / center_hz).log2().abs(), t)))
            .min_by(|a, b| a.0.total_cmp(&b.0))
            .map_or_else(|| self.median(), |(_, t)| t)
    }
}

struct LineFit {
    slope: f64,
    r2: f64,
}

fn fit_line(t: &[f64], y: &[f64]) -> LineFit {
    let n = t.len() as f64;
    let (mt, my) = (t.iter().sum::<f64>() / n, y.iter().sum::<f64>() / n);
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in t.iter().zip(y) {
        sxy += (a - mt) * (b - my);
        sxx += (a - mt) * (a - mt);
        syy += (b - my) * (b - my);
    }
    let slope = sxy / sxx;
    let r2 = if syy > 0.0 {
        sxy * sxy / (sxx * syy)
    } else {
        0.0
    };
    LineFit { slope, r2 }
}

/// Short-time level in dB, relative to the loudest frame.
fn envelope_db(x: &[f64], frame: usize, hop: usize) -> Vec<f64> {
    let e: Vec<f64> = (0..=(x.len() - frame) / hop)
        .map(|k| {
            x[k * hop..k * hop + frame]
                .iter()
                .map(|v| v * v)
                .sum::<f64>()
                / frame as f64
        })
        .collect();
    let floor = e.iter().copied().fold(0.0, f64::max) * 1e-12 + f64::MIN_POSITIVE;
    e.iter().map(|v| 10.0 * (v + floor).log10()).collect()
}

/// Decay slope (dB/s) of a room's free decay. Consecutive qualifying windows
/// form a run, and runs a short gap apart merge while they stay linear; the run with the largest level drop is the free decay (speech
/// fades are steep but short) and a line fitted over the whole run gives the
/// slope.
fn band_slope(env: &[f64], hop_s: f64, win: usize, cfg: &BlindDecayConfig) -> Option<f64> {
    if env.len() < win {
        return None;
    }
    let t: Vec<f64> = (0..env.len()).map(|k| k as f64 * hop_s).collect();
    let slopes: Vec<Option<f64>> = (0..=env.len() - win)
        .map(|k| {
            let f = fit_line(&t[k..k + win], &env[k..k + win]);
            let drop = -f.slope * (t[k + win - 1] - t[k]);
            (f.slope < 0.0 && f.r2 >= cfg.min_r2 && drop >= cfg.min_drop_db).then_some(f.slope)
        })
        .collect();
    // Runs as frame spans, merged across gaps shorter than a window when
    // the merged span still fits a line.
    let mut runs: Vec<(usize, usize)> = Vec::new();
    let mut k = 0;
    while k < slopes.len() {
        if slopes[k].is_none() {
            k += 1;
            continue;
        }
        let end = (k..slopes.len())
            .find(|&j| slopes[j].is_none())
            .unwrap_or(slopes.len());
        let span = (k, end + win - 1);
        match runs.last_mut() {
            Some(last)
                if span.0 <= last.1 + win && {
                    let f = fit_line(&t[last.0..span.1], &env[last.0..span.1]);
                    f.slope < 0.0 && f.r2 >= cfg.min_r2
                } =>
            {
                last.1 = span.1
            }
            _ => runs.push(span),
        }
        k = end;
    }
    runs.into_iter()
        .map(|(lo, hi)| {
            let slope = fit_line(&t[lo..hi], &env[lo..hi]).slope;
            (-slope * (t[hi - 1] - t[lo]), slope)
        })
        .filter(|&(_, s)| s < 0.0)
        .max_by(|a, b| a.0.total_cmp(&b.0))
        .map(|(_, s)| s)
}

/// Per-band T60 from the free decay in a reverberant recording.
pub fn estimate_blind_decay<T: Real>(
    recording: &Signal<T>,
    cfg: &BlindDecayConfig,
) -> Result<BlindDecay> {
    let fs = f64::from(recording.sample_rate());
    if recording.len() < recording.sample_rate() as usize {
        return Err(Error::TooShort {
            needed: recording.sample_rate() as usize,
            got: recording.len(),
        });
    }
    let frame = (cfg.frame_s * fs).round() as usize;
    let hop = (cfg.hop_s * fs).round() as usize;
    if frame == 0 || hop == 0 || cfg.min_segment_s <= cfg.hop_s {
        return Err(Error::Config(
            "blind decay frames must be shorter than the minimum segment".into(),
        ));
    }
    let win = (cfg.min_segment_s / cfg.hop_s).round() as usize + 1;
    let bands = BandSet::analysis();
    let bank = OctaveFilterBank::<f64>::new(&bands, recording.sample_rate())?;
    let x = recording.cast::<f64>();
    let mut t60 = Vec::with_capacity(bands.len());
    for b in 0..bands.len() {
        let y = bank.filter_band(b, &x)?;
        let env = envelope_db(y.samples(), frame, hop);
        t60.push(
            band_slope(&env, cfg.hop_s, win, cfg)
                .map(|s| (-60.0 / s).clamp(MIN_T60 * 1.0001, MAX_T60)),
        );
    }
    if t60.iter().all(Option::is_none) {
        return Err(Error::NoDecay);
    }
    Ok(BlindDecay {
        centers: bands.centers().to_vec(),
        t60,
    })
}

/// Naive blind prediction: decay times from [`estimate_blind_decay`], a
/// half-amplitude impulse as the early part, and flat band gains.
pub fn blind_predict<T: Real>(
    recording: &Signal<T>,
    cfg: &BlindDecayConfig,
    noise_seed: u64,
) -> Result<FnsParams> {
    const FLAT_GAIN: f64 = 0.02;
    let est = estimate_blind_decay(recording, cfg)?;
    let mut early = vec![0.0; EARLY_LEN];
    early[0] = 0.5;
    let band_t60 = fns_bands()
        .centers()
        .iter()
        .map(|&c| est.nearest(c))
        .collect();
    Ok(FnsParams {
        early,
        band_gains: vec![FLAT_GAIN; N_BANDS],
        band_t60,
        noise_seed,
    })
}
