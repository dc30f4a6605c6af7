//! Reverberant mixtures: k speech sources in one room, each convolved with
//! a different RIR, paired with the room's representative RIR as target.

use std::path::Path;

use rand::seq::index::sample;
use rand::{Rng, RngCore};
use serde::{Deserialize, Serialize};

use crate::convolve::fft_convolve;
use crate::error::{Error, Result};
use crate::manifest::{read_json, write_json};
use crate::noise::{derive_seed, fill_gaussian, rng_from_seed, uniform_in};
use crate::real::Real;
use crate::room::{Rir, RoomRirSet};
use crate::signal::{Signal, SAMPLE_RATE};
use crate::wav::{write_wav, WavFormat};

/// 2.74 s of reverberant input.
pub const INPUT_LEN: usize = 131_520;
/// 1 s target RIR.
pub const TARGET_LEN: usize = 48_000;
pub const MAX_SOURCES: usize = 6;
/// RMS every speech segment is equalized to before jitter (about -26 dBFS).
pub const SPEECH_RMS: f64 = 0.05;
pub const GAIN_JITTER_DB: f64 = 3.0;
/// Input peak after the headroom scale, when one is needed.
pub const HEADROOM_PEAK: f64 = 0.99;
/// Fraction of a source's reverberant energy its crop window must hold.
pub const MIN_CROP_ENERGY: f64 = 0.5;
const SILENCE_RMS: f64 = 1e-6;
const SEGMENT_ATTEMPTS: usize = 64;
const CROP_ATTEMPTS: usize = 32;

/// Where one source of a mixture came from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SourceInfo {
    pub rir_index: usize,
    pub clip_index: usize,
    pub clip_offset: usize,
    pub gain_db: f64,
    /// Start of the input window within the full convolution.
    pub crop_offset: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MixtureExample<T> {
    pub input: Signal<T>,
    pub target: Rir<T>,
    pub room_id: String,
    pub n_sources: usize,
    pub seed: u64,
    /// Applied to the input only; 1 unless the mix would clip.
    pub headroom_scale: f64,
    pub sources: Vec<SourceInfo>,
}

/// Uniform source count in `1..=MAX_SOURCES`.
pub fn draw_source_count(rng: &mut impl RngCore) -> usize {
    rng.random_range(1..=MAX_SOURCES)
}

fn check_pool<T: Real>(pool: &[Signal<T>]) -> Result<()> {
    if pool.is_empty() {
        return Err(Error::Config("speech pool is empty".into()));
    }
    for (i, clip) in pool.iter().enumerate() {
        clip.require_rate(SAMPLE_RATE)?;
        if clip.len() < INPUT_LEN {
            return Err(Error::Config(format!(
                "speech clip {i} has {} samples, need at least {INPUT_LEN}",
                clip.len()
            )));
        }
    }
    Ok(())
}

/// A random non-silent `INPUT_LEN` segment from the pool.
fn draw_segment<T: Real>(
    pool: &[Signal<T>],
    rng: &mut impl RngCore,
) -> Result<(usize, usize, Signal<T>)> {
    for _ in 0..SEGMENT_ATTEMPTS {
        let clip_index = rng.random_range(0..pool.len());
        let clip = &pool[clip_index];
        let offset = rng.random_range(0..=clip.len() - INPUT_LEN);
        let seg = clip.slice_padded(offset, INPUT_LEN);
        if seg.rms().as_f64() > SILENCE_RMS {
            return Ok((clip_index, offset, seg));
        }
    }
    Err(Error::Degenerate(format!(
        "no non-silent speech segment found in {SEGMENT_ATTEMPTS} draws"
    )))
}

/// A crop start whose window holds at least half of the signal's energy;
/// falls back to the start, where the dry speech is.
fn draw_crop<T: Real>(wet: &Signal<T>, rng: &mut impl RngCore) -> usize {
    let max_offset = wet.len().saturating_sub(INPUT_LEN);
    let sq: Vec<f64> = wet.samples().iter().map(|v| v.as_f64().powi(2)).collect();
    let total: f64 = sq.iter().sum();
    let mut prefix = Vec::with_capacity(sq.len() + 1);
    prefix.push(0.0);
    for v in &sq {
        prefix.push(prefix.last().unwrap() + v);
    }
    let window = |o: usize| prefix[(o + INPUT_LEN).min(sq.len())] - prefix[o];
    for _ in 0..CROP_ATTEMPTS {
        let o = rng.random_range(0..=max_offset);
        if window(o) >= MIN_CROP_ENERGY * total {
            return o;
        }
    }
    0
}

/// One mixture of `k` sources from a normalized room set.
pub fn make_example<T: Real>(
    set: &RoomRirSet<T>,
    pool: &[Signal<T>],
    k: usize,
    seed: u64,
) -> Result<MixtureExample<T>> {
    set.validate()?;
    if set.normalization_factor.is_none() {
        return Err(Error::Config(format!(
            "room {} is not normalized",
            set.room_id
        )));
    }
    let target = set
        .representative()
        .ok_or_else(|| Error::Config(format!("room {} has no representative RIR", set.room_id)))?;
    if !(1..=MAX_SOURCES).contains(&k) {
        return Err(Error::Config(format!(
            "source count {k} outside 1..={MAX_SOURCES}"
        )));
    }
    if k > set.len() {
        return Err(Error::Config(format!(
            "{k} sources requested, room {} has {} RIRs",
            set.room_id,
            set.len()
        )));
    }
    check_pool(pool)?;

    let mut rng = rng_from_seed(seed);
    let rir_indices = sample(&mut rng, set.len(), k).into_vec();
    let mut sum = vec![T::zero(); INPUT_LEN];
    let mut sources = Vec::with_capacity(k);
    for rir_index in rir_indices {
        let (clip_index, clip_offset, seg) = draw_segment(pool, &mut rng)?;
        let gain_db = uniform_in(&mut rng, -GAIN_JITTER_DB, GAIN_JITTER_DB);
        let gain = SPEECH_RMS / seg.rms().as_f64() * 10f64.powf(gain_db / 20.0);
        let wet = fft_convolve(&seg.scaled(T::lit(gain)), &set.rirs[rir_index].signal)?;
        let crop_offset = draw_crop(&wet, &mut rng);
        for (s, &w) in sum.iter_mut().zip(&wet.samples()[crop_offset..]) {
            *s = *s + w;
        }
        sources.push(SourceInfo {
            rir_index,
            clip_index,
            clip_offset,
            gain_db,
            crop_offset,
        });
    }

    let peak = sum.iter().fold(0.0f64, |m, v| m.max(v.as_f64().abs()));
    let headroom_scale = if peak > 1.0 {
        HEADROOM_PEAK / peak
    } else {
        1.0
    };
    if headroom_scale != 1.0 {
        sum.iter_mut()
            .for_each(|v| *v = *v * T::lit(headroom_scale));
    }
    let mut target = target.clone();
    target.signal = target.signal.fit_to_len(TARGET_LEN);
    Ok(MixtureExample {
        input: Signal::from_parts(sum, SAMPLE_RATE),
        target,
        room_id: set.room_id.clone(),
        n_sources: k,
        seed,
        headroom_scale,
        sources,
    })
}

/// One planned example of a suite; generated on demand.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PlannedExample {
    pub room_index: usize,
    pub n_sources: usize,
    pub seed: u64,
}

/// `rooms × counts × per_count` examples, ordered by source count, then
/// room, then repetition.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EvalSuitePlan {
    pub entries: Vec<PlannedExample>,
}

impl EvalSuitePlan {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn count_of(&self, n_sources: usize) -> usize {
        self.entries
            .iter()
            .filter(|e| e.n_sources == n_sources)
            .count()
    }

    pub fn generate<T: Real>(
        &self,
        i: usize,
        rooms: &[RoomRirSet<T>],
        pool: &[Signal<T>],
    ) -> Result<MixtureExample<T>> {
        let e = self.entries[i];
        make_example(&rooms[e.room_index], pool, e.n_sources, e.seed)
    }
}

/// Plans an evaluation suite, checking up front that every room can supply
/// the largest source count.
pub fn make_eval_suite<T: Real>(
    rooms: &[RoomRirSet<T>],
    per_count: usize,
    counts: &[usize],
    seed: u64,
) -> Result<EvalSuitePlan> {
    if rooms.is_empty() {
        return Err(Error::EmptySet);
    }
    if let Some(&k) = counts.iter().find(|&&k| !(1..=MAX_SOURCES).contains(&k)) {
        return Err(Error::Config(format!(
            "source count {k} outside 1..={MAX_SOURCES}"
        )));
    }
    let max_k = counts.iter().copied().max().unwrap_or(0);
    for r in rooms {
        if r.normalization_factor.is_none() {
            return Err(Error::Config(format!(
                "room {} is not normalized",
                r.room_id
            )));
        }
        if r.len() < max_k {
            return Err(Error::Config(format!(
                "room {} has {} RIRs, suite needs {max_k}",
                r.room_id,
                r.len()
            )));
        }
    }
    let mut entries = Vec::with_capacity(rooms.len() * per_count * counts.len());
    for &n_sources in counts {
        for room_index in 0..rooms.len() {
            for _ in 0..per_count {
                let seed = derive_seed(seed, entries.len() as u64);
                entries.push(PlannedExample {
                    room_index,
                    n_sources,
                    seed,
                });
            }
        }
    }
    Ok(EvalSuitePlan { entries })
}

/// One row of a suite manifest; paths are relative to the manifest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteEntry {
    pub input_wav: String,
    pub target_wav: String,
    pub room_id: String,
    pub n_sources: usize,
    pub seed: u64,
    pub headroom_scale: f64,
}

pub const SUITE_MANIFEST_FILE: &str = "suite.json";

/// Writes an example's input and target WAVs into `dir` as
/// `ex_NNNNN_input.wav` / `ex_NNNNN_target.wav`.
pub fn save_example<T: Real>(
    ex: &MixtureExample<T>,
    dir: &Path,
    index: usize,
    format: WavFormat,
) -> Result<SuiteEntry> {
    let input_wav = format!("ex_{index:05}_input.wav");
    let target_wav = format!("ex_{index:05}_target.wav");
    write_wav(dir.join(&input_wav), &ex.input, format)?;
    write_wav(dir.join(&target_wav), &ex.target.signal, format)?;
    Ok(SuiteEntry {
        input_wav,
        target_wav,
        room_id: ex.room_id.clone(),
        n_sources: ex.n_sources,
        seed: ex.seed,
        headroom_scale: ex.headroom_scale,
    })
}

pub fn write_suite_manifest(path: impl AsRef<Path>, entries: &[SuiteEntry]) -> Result<()> {
    write_json(path, &entries)
}

pub fn read_suite_manifest(path: impl AsRef<Path>) -> Result<Vec<SuiteEntry>> {
    read_json(path)
}

/// Speech-like test signal: voiced syllables (a jittered glottal pulse
/// train through two formant resonators under a Hann envelope), occasional
/// fricative noise bursts, and pauses. Normalized to `SPEECH_RMS`. A stand-in
/// when no anechoic corpus is at hand.
pub fn synthetic_speech<T: Real>(len: usize, seed: u64) -> Result<Signal<T>> {
    if len == 0 {
        return Err(Error::Config("speech length must be positive".into()));
    }
    let fs = f64::from(SAMPLE_RATE);
    let mut rng = rng_from_seed(seed);
    let mut out = vec![0.0; len];
    let mut pos = (uniform_in(&mut rng, 0.0, 0.1) * fs) as usize;
    while pos < len {
        let dur = (uniform_in(&mut rng, 0.12, 0.3) * fs) as usize;
        let end = (pos + dur).min(len);
        let f0 = uniform_in(&mut rng, 90.0, 250.0);
        let formants = [
            uniform_in(&mut rng, 300.0, 900.0),
            uniform_in(&mut rng, 900.0, 2500.0),
        ];
        let mut source = vec![0.0; end - pos];
        let mut phase = 0.0;
        for (i, s) in source.iter_mut().enumerate() {
            let f = f0 * (1.0 + 0.05 * (2.0 * std::f64::consts::PI * 5.0 * i as f64 / fs).sin());
            phase += f / fs;
            if phase >= 1.0 {
                phase -= 1.0;
                *s = 1.0;
            }
        }
        let mut voiced = vec![0.0; source.len()];
        for fc in formants {
            let r: f64 = (-std::f64::consts::PI * 80.0 / fs).exp();
            let (a1, a2) = (
                2.0 * r * (2.0 * std::f64::consts::PI * fc / fs).cos(),
                -r * r,
            );
            let (mut y1, mut y2) = (0.0, 0.0);
            for (v, &x) in voiced.iter_mut().zip(&source) {
                let y = x + a1 * y1 + a2 * y2;
                *v += y;
                y2 = y1;
                y1 = y;
            }
        }
        let n = voiced.len();
        for (i, v) in voiced.into_iter().enumerate() {
            let w = 0.5 - 0.5 * (2.0 * std::f64::consts::PI * i as f64 / n as f64).cos();
            out[pos + i] += v * w;
        }
        if rng.random_bool(0.25) {
            let fdur = ((uniform_in(&mut rng, 0.05, 0.12) * fs) as usize).min(len - end);
            let mut noise = vec![0.0; fdur + 1];
            fill_gaussian(&mut rng, &mut noise);
            for i in 0..fdur {
                let w = 0.5 - 0.5 * (2.0 * std::f64::consts::PI * i as f64 / fdur as f64).cos();
                out[end + i] += 0.3 * (noise[i + 1] - noise[i]) * w;
            }
        }
        pos = end + (uniform_in(&mut rng, 0.03, 0.35) * fs) as usize;
    }
    let rms = (out.iter().map(|v| v * v).sum::<f64>() / len as f64).sqrt();
    if rms == 0.0 {
        return Err(Error::Degenerate("synthetic speech came out silent".into()));
    }
    Ok(Signal::from_parts(
        out.into_iter()
            .map(|v| T::lit(v * SPEECH_RMS / rms))
            .collect(),
        SAMPLE_RATE,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::prep::normalize_room;
    use crate::room::{sample_room_spec, synth_room_set};

    fn room(seed: u64, n: usize) -> RoomRirSet<f64> {
        let spec = sample_room_spec(seed);
        normalize_room(synth_room_set::<f64>(&spec, n, seed).unwrap())
            .unwrap()
            .0
    }

    fn pool() -> Vec<Signal<f64>> {
        (0..3)
            .map(|i| synthetic_speech(INPUT_LEN + 48_000, 100 + i).unwrap())
            .collect()
    }

    /// A normalized one-room set whose RIRs are Dirac impulses.
    fn dirac_room(n: usize) -> RoomRirSet<f64> {
        let rirs = (0..n)
            .map(|i| {
                let mut r = Rir::new(Signal::impulse(1, 0, SAMPLE_RATE), "dirac");
                r.is_representative = i == 0;
                r
            })
            .collect();
        let mut set = RoomRirSet::new("dirac", None, rirs).unwrap();
        set.normalization_factor = Some(1.0);
        set
    }

    #[test]
    fn lengths_and_target() {
        let set = room(1, 6);
        let ex = make_example(&set, &pool(), 3, 9).unwrap();
        assert_eq!(ex.input.len(), INPUT_LEN);
        assert_eq!(ex.target.signal.len(), TARGET_LEN);
        assert!(ex.target.is_representative);
        assert_eq!(ex.n_sources, 3);
        let mut idx: Vec<usize> = ex.sources.iter().map(|s| s.rir_index).collect();
        idx.sort_unstable();
        idx.dedup();
        assert_eq!(idx.len(), 3);
        assert!(ex.input.peak() <= 1.0);
    }

    #[test]
    fn dirac_gives_scaled_segment() {
        let set = dirac_room(2);
        let p = pool();
        let ex = make_example(&set, &p, 1, 4).unwrap();
        let s = &ex.sources[0];
        let seg = p[s.clip_index].slice_padded(s.clip_offset, INPUT_LEN);
        let g = SPEECH_RMS / seg.rms() * 10f64.powf(s.gain_db / 20.0) * ex.headroom_scale;
        for (a, b) in ex.input.samples().iter().zip(seg.samples()) {
            assert!((a - g * b).abs() < 1e-12);
        }
    }

    #[test]
    fn superposition() {
        let set = room(2, 6);
        let p = pool();
        let ex = make_example(&set, &p, 3, 11).unwrap();
        let mut sum = vec![0.0; INPUT_LEN];
        for s in &ex.sources {
            let seg = p[s.clip_index].slice_padded(s.clip_offset, INPUT_LEN);
            let g = SPEECH_RMS / seg.rms() * 10f64.powf(s.gain_db / 20.0);
            let wet = fft_convolve(&seg.scaled(g), &set.rirs[s.rir_index].signal).unwrap();
            for (o, w) in sum.iter_mut().zip(&wet.samples()[s.crop_offset..]) {
                *o += w;
            }
        }
        for (a, b) in ex.input.samples().iter().zip(&sum) {
            assert!((a - b * ex.headroom_scale).abs() < 1e-9);
        }
    }

    #[test]
    fn deterministic() {
        let set = room(3, 5);
        let p = pool();
        assert_eq!(
            make_example(&set, &p, 2, 5).unwrap(),
            make_example(&set, &p, 2, 5).unwrap()
        );
    }

    #[test]
    fn too_many_sources() {
        let set = dirac_room(3);
        assert!(matches!(
            make_example(&set, &pool(), 4, 0),
            Err(Error::Config(_))
        ));
        assert!(make_example(&set, &pool(), 0, 0).is_err());
    }

    #[test]
    fn unnormalized_rejected() {
        let mut set = dirac_room(3);
        set.normalization_factor = None;
        assert!(make_example(&set, &pool(), 1, 0).is_err());
    }

    #[test]
    fn short_clip_rejected() {
        let short = vec![pool()[0].fit_to_len(1000)];
        assert!(make_example(&dirac_room(2), &short, 1, 0).is_err());
    }

    #[test]
    fn silent_pool_fails() {
        let silent = vec![Signal::zeros(INPUT_LEN, SAMPLE_RATE)];
        assert!(matches!(
            make_example(&dirac_room(2), &silent, 1, 0),
            Err(Error::Degenerate(_))
        ));
    }

    #[test]
    fn loud_mix_gets_headroom() {
        let loud: Vec<Signal<f64>> = pool().iter().map(|s| s.scaled(100.0)).collect();
        let mut set = dirac_room(6);
        for r in &mut set.rirs {
            r.signal = r.signal.scaled(50.0);
        }
        let ex = make_example(&set, &loud, 6, 3).unwrap();
        assert!(ex.headroom_scale < 1.0);
        assert!((ex.input.peak() - HEADROOM_PEAK).abs() < 1e-12);
        assert_eq!(ex.target.signal.peak(), 50.0);
    }

    #[test]
    fn source_count_distribution() {
        let mut rng = rng_from_seed(0);
        let mut hist = [0usize; MAX_SOURCES + 1];
        for _ in 0..10_000 {
            hist[draw_source_count(&mut rng)] += 1;
        }
        assert_eq!(hist[0], 0);
        for &h in &hist[1..] {
            assert!((h as f64 / 1e4 - 1.0 / 6.0).abs() < 0.02, "{hist:?}");
        }
    }

    #[test]
    fn suite_shape() {
        let rooms: Vec<_> = (0..5).map(|_| dirac_room(6)).collect();
        let plan = make_eval_suite(&rooms, 10, &[1, 2, 3, 4, 5, 6], 7).unwrap();
        assert_eq!(plan.len(), 300);
        for k in 1..=6 {
            assert_eq!(plan.count_of(k), 50);
        }
        let seeds: std::collections::HashSet<u64> = plan.entries.iter().map(|e| e.seed).collect();
        assert_eq!(seeds.len(), 300);
        assert!(make_eval_suite(&[dirac_room(4)], 10, &[1, 6], 0).is_err());
    }

    #[test]
    fn suite_manifest_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let p = pool();
        let set = dirac_room(2);
        let entries: Vec<SuiteEntry> = (0..2)
            .map(|i| {
                save_example(
                    &make_example(&set, &p, 1, i as u64).unwrap(),
                    dir.path(),
                    i,
                    WavFormat::Float32,
                )
                .unwrap()
            })
            .collect();
        let path = dir.path().join(SUITE_MANIFEST_FILE);
        write_suite_manifest(&path, &entries).unwrap();
        assert_eq!(read_suite_manifest(&path).unwrap(), entries);
        assert!(dir.path().join("ex_00001_target.wav").exists());
    }

    #[test]
    fn speech_is_bursty() {
        let s: Signal<f64> = synthetic_speech(INPUT_LEN, 3).unwrap();
        assert!((s.rms() - SPEECH_RMS).abs() < 1e-12);
        let frame = 480;
        let e: Vec<f64> = s
            .samples()
            .chunks(frame)
            .map(|c| c.iter().map(|v| v * v).sum())
            .collect();
        let quiet = e
            .iter()
            .filter(|&&v| v < 1e-3 * e.iter().copied().fold(0.0, f64::max))
            .count();
        assert!(
            quiet > e.len() / 20,
            "expected pauses, {quiet} quiet frames"
        );
    }
}
