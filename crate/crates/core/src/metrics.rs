//! Room-acoustic parameters from Schroeder backward integration.

use log::debug;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::filterbank::{BandSet, OctaveFilterBank};
use crate::real::Real;
use crate::signal::Signal;

/// Least-squares decay fits spanning less time than this are rejected as
/// filter ringing rather than reverberation.
pub const MIN_FIT_SPAN_S: f64 = 0.015;

/// Half-width of the direct-sound window used for DRR.
pub const DIRECT_HALF_WINDOW_S: f64 = 0.0025;

pub const CLARITY_SPLIT_S: f64 = 0.05;

/// Energy decay curve in dB, normalised so the first value is 0 dB.
#[derive(Debug, Clone, PartialEq)]
pub struct DecayCurve<T> {
    db: Vec<T>,
    sample_rate: u32,
}

impl<T: Real> DecayCurve<T> {
    pub fn db(&self) -> &[T] {
        &self.db
    }

    pub fn sample_rate(&self) -> u32 {
        self.sample_rate
    }

    /// Decay time extrapolated to 60 dB from a linear fit between two levels.
    pub fn decay_time(&self, start_db: f64, end_db: f64) -> Result<T> {
        let start = T::lit(start_db);
        let end = T::lit(end_db);
        let reached = self
            .db
            .iter()
            .copied()
            .filter(|v| v.is_finite())
            .fold(T::zero(), T::min);
        let i0 = self.db.iter().position(|&v| v <= start);
        let i1 = self.db.iter().position(|&v| v <= end);
        let (i0, i1) = match (i0, i1) {
            (Some(a), Some(b)) => (a, b),
            _ => {
                return Err(Error::InsufficientDecay {
                    needed_db: end_db,
                    reached_db: reached.as_f64(),
                })
            }
        };
        let fs = T::lit(self.sample_rate as f64);
        let points: Vec<(T, T)> = (i0..i1)
            .filter(|&i| self.db[i].is_finite())
            .map(|i| (T::from_usize_lossy(i) / fs, self.db[i]))
            .collect();
        let span = (i1 as f64 - i0 as f64) / self.sample_rate as f64;
        if points.len() < 2 || span < MIN_FIT_SPAN_S {
            return Err(Error::InsufficientDecay {
                needed_db: end_db,
                reached_db: reached.as_f64(),
            });
        }
        let slope = linear_slope(&points);
        if slope >= T::zero() {
            return Err(Error::InsufficientDecay {
                needed_db: end_db,
                reached_db: reached.as_f64(),
            });
        }
        Ok(T::lit(-60.0) / slope)
    }
}

pub(crate) fn linear_slope<T: Real>(points: &[(T, T)]) -> T {
    let n = T::from_usize_lossy(points.len());
    let mx = points.iter().map(|p| p.0).sum::<T>() / n;
    let my = points.iter().map(|p| p.1).sum::<T>() / n;
    let sxy: T = points.iter().map(|&(x, y)| (x - mx) * (y - my)).sum();
    let sxx: T = points.iter().map(|&(x, _)| (x - mx) * (x - mx)).sum();
    sxy / sxx
}

/// `EDC(t) = 10 log10(Σ_{τ≥t} h²(τ) / Σ h²)`.
pub fn schroeder_edc<T: Real>(h: &Signal<T>) -> Result<DecayCurve<T>> {
    let mut tail = vec![T::zero(); h.len()];
    let mut acc = T::zero();
    for (i, &s) in h.samples().iter().enumerate().rev() {
        acc = acc + s * s;
        tail[i] = acc;
    }
    if !(acc > T::zero()) {
        return Err(Error::ZeroEnergy);
    }
    let ten = T::lit(10.0);
    let mut prev = T::zero();
    let db = tail
        .into_iter()
        .map(|e| {
            // Clamp rounding so the curve is non-increasing.
            let v = (ten * (e / acc).log10()).min(prev);
            prev = v;
            v
        })
        .collect();
    Ok(DecayCurve {
        db,
        sample_rate: h.sample_rate(),
    })
}

/// Reverberation time from the −5 to −35 dB range of the decay curve.
pub fn t30<T: Real>(h: &Signal<T>) -> Result<T> {
    schroeder_edc(h)?.decay_time(-5.0, -35.0)
}

/// Early decay time from the 0 to −10 dB range of the decay curve.
pub fn edt<T: Real>(h: &Signal<T>) -> Result<T> {
    schroeder_edc(h)?.decay_time(0.0, -10.0)
}

fn energy<T: Real>(x: &[T]) -> T {
    x.iter().map(|&s| s * s).sum()
}

fn ratio_db<T: Real>(num: T, den: T) -> Result<T> {
    if !(den > T::zero()) {
        return Err(Error::InfiniteClarity);
    }
    if !(num > T::zero()) {
        return Err(Error::ZeroEnergy);
    }
    Ok(T::lit(10.0) * (num / den).log10())
}

/// Clarity: energy up to 50 ms after the direct-path peak over the rest.
pub fn c50<T: Real>(h: &Signal<T>) -> Result<T> {
    let split =
        (h.peak_index() + (CLARITY_SPLIT_S * h.sample_rate() as f64).round() as usize).min(h.len());
    let s = h.samples();
    ratio_db(energy(&s[..split]), energy(&s[split..]))
}

/// Direct-to-reverberant ratio with a ±2.5 ms window around the peak.
pub fn drr<T: Real>(h: &Signal<T>) -> Result<T> {
    let half = (DIRECT_HALF_WINDOW_S * h.sample_rate() as f64).round() as usize;
    let peak = h.peak_index();
    let (lo, hi) = (peak.saturating_sub(half), (peak + half + 1).min(h.len()));
    let s = h.samples();
    let direct = energy(&s[lo..hi]);
    ratio_db(direct, energy(&s[..lo]) + energy(&s[hi..]))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BandParams<T> {
    pub center_hz: f64,
    pub t30: Option<T>,
    pub edt: Option<T>,
    pub c50: Option<T>,
    pub drr: Option<T>,
}

/// Parameters averaged over the 500 Hz and 1 kHz bands. A field is the mean
/// of whichever of the two bands produced a value, `None` if neither did.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AveragedParams<T> {
    pub t30: Option<T>,
    pub edt: Option<T>,
    pub c50: Option<T>,
    pub drr: Option<T>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AcousticParams<T> {
    pub per_band: Vec<BandParams<T>>,
    pub avg_500_1000: AveragedParams<T>,
    /// One entry per metric that could not be computed.
    pub warnings: Vec<String>,
}

impl<T: Real> AcousticParams<T> {
    pub fn band(&self, center_hz: f64) -> Option<&BandParams<T>> {
        self.per_band
            .iter()
            .find(|b| (b.center_hz - center_hz).abs() < 1e-9)
    }
}

/// Runs the metrics on each analysis band (125 Hz – 4 kHz octaves).
pub fn analyze<T: Real>(h: &Signal<T>) -> Result<AcousticParams<T>> {
    analyze_bands(h, &BandSet::analysis())
}

pub fn analyze_bands<T: Real>(h: &Signal<T>, bands: &BandSet) -> Result<AcousticParams<T>> {
    if bands.index_of(500.0).is_none() || bands.index_of(1000.0).is_none() {
        return Err(Error::Config(
            "analysis bands must include 500 Hz and 1 kHz".into(),
        ));
    }
    let bank = OctaveFilterBank::new(bands, h.sample_rate())?;
    let mut warnings = Vec::new();
    let mut per_band = Vec::with_capacity(bands.len());
    for (b, &center_hz) in bands.centers().iter().enumerate() {
        let x = bank.filter_band(b, h)?;
        let mut keep = |name: &str, r: Result<T>| match r {
            Ok(v) => Some(v),
            Err(e) => {
                debug!("{center_hz} Hz {name}: {e}");
                warnings.push(format!("{center_hz} Hz {name}: {e}"));
                None
            }
        };
        per_band.push(BandParams {
            center_hz,
            t30: keep("t30", t30(&x)),
            edt: keep("edt", edt(&x)),
            c50: keep("c50", c50(&x)),
            drr: keep("drr", drr(&x)),
        });
    }
    let pick = |f: fn(&BandParams<T>) -> Option<T>| {
        let vals: Vec<T> = [500.0, 1000.0]
            .iter()
            .filter_map(|&c| per_band.iter().find(|b| b.center_hz == c).and_then(f))
            .collect();
        (!vals.is_empty())
            .then(|| vals.iter().copied().sum::<T>() / T::from_usize_lossy(vals.len()))
    };
    let avg_500_1000 = AveragedParams {
        t30: pick(|b| b.t30),
        edt: pick(|b| b.edt),
        c50: pick(|b| b.c50),
        drr: pick(|b| b.drr),
    };
    Ok(AcousticParams {
        per_band,
        avg_500_1000,
        warnings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::noise::seeded_noise;
    use proptest::prelude::*;

    const FS: u32 = 48_000;

    fn exp_decay(t60: f64, len_s: f64, seed: u64) -> Signal<f64> {
        let n = (len_s * FS as f64) as usize;
        let noise: Signal<f64> = seeded_noise(n, seed).unwrap();
        let s = noise
            .samples()
            .iter()
            .enumerate()
            .map(|(i, v)| v * 10f64.powf(-3.0 * i as f64 / FS as f64 / t60))
            .collect();
        Signal::new(s, FS).unwrap()
    }

    #[test]
    fn edc_of_constant_sign_exponential_is_linear() {
        let t60 = 0.5;
        let h: Vec<f64> = (0..FS)
            .map(|i| 10f64.powf(-3.0 * i as f64 / FS as f64 / t60))
            .collect();
        let edc = schroeder_edc(&Signal::new(h, FS).unwrap()).unwrap();
        let i = (0.2 * FS as f64) as usize;
        let slope = edc.db()[i] / 0.2;
        assert!((slope / (-60.0 / t60) - 1.0).abs() < 0.02, "slope {slope}");
        assert_eq!(edc.db()[0], 0.0);
    }

    #[test]
    fn edc_matches_brute_force() {
        let h: Signal<f64> = seeded_noise(300, 4).unwrap();
        let edc = schroeder_edc(&h).unwrap();
        let total: f64 = h.samples().iter().map(|v| v * v).sum();
        for t in 0..h.len() {
            let mut tail = 0.0;
            for tau in t..h.len() {
                tail += h.samples()[tau] * h.samples()[tau];
            }
            assert!((edc.db()[t] - 10.0 * (tail / total).log10()).abs() < 1e-9);
        }
    }

    #[test]
    fn zero_energy_edc_is_an_error() {
        assert!(matches!(
            schroeder_edc(&Signal::<f64>::zeros(10, FS)),
            Err(Error::ZeroEnergy)
        ));
    }

    #[test]
    fn t30_and_edt_of_exponential() {
        let h = exp_decay(0.5, 1.0, 1);
        assert!((t30(&h).unwrap() / 0.5 - 1.0).abs() < 0.02);
        assert!((edt(&h).unwrap() / 0.5 - 1.0).abs() < 0.05);
        let scaled = h.scaled(7.5);
        assert!((t30(&scaled).unwrap() - t30(&h).unwrap()).abs() < 1e-9);
    }

    #[test]
    fn impulses_have_insufficient_decay() {
        let h = Signal::<f64>::impulse(4800, 0, FS);
        assert!(matches!(t30(&h), Err(Error::InsufficientDecay { .. })));
        let mut two = vec![0.0f64; 4800];
        two[0] = 1.0;
        two[480] = 1.0;
        let two = Signal::new(two, FS).unwrap();
        assert!(matches!(t30(&two), Err(Error::InsufficientDecay { .. })));
        assert!(matches!(edt(&two), Err(Error::InsufficientDecay { .. })));
    }

    #[test]
    fn two_equal_impulses_give_zero_clarity() {
        let mut h = vec![0.0f64; FS as usize / 2];
        h[0] = 1.0;
        h[(0.1 * FS as f64) as usize] = 1.0;
        let h = Signal::new(h, FS).unwrap();
        assert!(c50(&h).unwrap().abs() < 1e-12);
    }

    #[test]
    fn drr_of_half_amplitude_reflection() {
        let mut h = vec![0.0f64; 4800];
        h[100] = 1.0;
        h[100 + 480] = 0.5;
        let h = Signal::new(h, FS).unwrap();
        assert!((drr(&h).unwrap() - 10.0 * 4f64.log10()).abs() < 1e-9);
        assert!((drr(&h).unwrap() - 6.0206).abs() < 1e-3);
    }

    #[test]
    fn clarity_without_late_energy_is_an_error() {
        let h = Signal::<f64>::impulse(4800, 10, FS);
        assert!(matches!(c50(&h), Err(Error::InfiniteClarity)));
        assert!(matches!(drr(&h), Err(Error::InfiniteClarity)));
    }

    #[test]
    fn peak_anchored_ratios_ignore_leading_silence() {
        let h = exp_decay(0.4, 1.0, 3);
        let shifted = Signal::new(
            std::iter::repeat_n(0.0, 480)
                .chain(h.samples().iter().copied())
                .collect(),
            FS,
        )
        .unwrap();
        assert!((c50(&h).unwrap() - c50(&shifted).unwrap()).abs() < 0.01);
        assert!((drr(&h).unwrap() - drr(&shifted).unwrap()).abs() < 0.01);
    }

    #[test]
    fn dirac_has_no_reverberant_tail_in_any_band() {
        let h = Signal::<f64>::impulse(FS as usize, 0, FS);
        let p = analyze(&h).unwrap();
        assert!(p.per_band.iter().all(|b| b.t30.is_none()));
        assert!(p.avg_500_1000.t30.is_none());
        assert!(!p.warnings.is_empty());
    }

    #[test]
    fn averages_are_means_of_the_two_bands() {
        let h = exp_decay(0.6, 1.2, 5);
        let p = analyze(&h).unwrap();
        let a = p.band(500.0).unwrap();
        let b = p.band(1000.0).unwrap();
        let mean = (a.t30.unwrap() + b.t30.unwrap()) / 2.0;
        assert_eq!(p.avg_500_1000.t30.unwrap(), mean);
        assert_eq!(
            p.avg_500_1000.c50.unwrap(),
            (a.c50.unwrap() + b.c50.unwrap()) / 2.0
        );
        assert!((p.avg_500_1000.t30.unwrap() / 0.6 - 1.0).abs() < 0.1);
    }

    #[test]
    fn analysis_in_f32() {
        let h = exp_decay(0.5, 1.0, 6).cast::<f32>();
        let t = t30(&h).unwrap();
        assert!((t / 0.5 - 1.0).abs() < 0.03);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn edc_non_increasing(v in prop::collection::vec(-1.0f64..1.0, 2..400)) {
            prop_assume!(v.iter().any(|x| *x != 0.0));
            let edc = schroeder_edc(&Signal::new(v, FS).unwrap()).unwrap();
            prop_assert!(edc.db().windows(2).all(|w| w[1] <= w[0]));
        }

        #[test]
        fn metrics_are_scale_invariant(seed in 0u64..1000, gain in 0.01f64..100.0) {
            let h = exp_decay(0.3, 0.6, seed);
            let g = h.scaled(gain);
            prop_assert!((t30(&h).unwrap() - t30(&g).unwrap()).abs() < 1e-9);
            prop_assert!((edt(&h).unwrap() - edt(&g).unwrap()).abs() < 1e-9);
            prop_assert!((c50(&h).unwrap() - c50(&g).unwrap()).abs() < 1e-9);
            prop_assert!((drr(&h).unwrap() - drr(&g).unwrap()).abs() < 1e-9);
        }

        #[test]
        fn t30_recovers_random_exponentials(t60 in 0.1f64..1.5, seed in 0u64..10_000) {
            let h = exp_decay(t60, (1.5 * t60).max(1.0), seed);
            let est = t30(&h).unwrap();
            prop_assert!((est / t60 - 1.0).abs() < 0.05, "t60 {} est {}", t60, est);
        }
    }
}
