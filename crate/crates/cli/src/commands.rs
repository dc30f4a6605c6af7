use std::fs;
use std::path::{Path, PathBuf};

use log::info;
use rayon::prelude::*;
use reverbforge::binaural::{interaural_correlation, merge_with_hrir, BinauralConfig, PRED_PEAK};
use reverbforge::fns::{decode, fit_to_rir, FitConfig};
use reverbforge::manifest::{create_dir, load_room_set, save_room_set, write_json, MANIFEST_FILE};
use reverbforge::metrics::analyze;
use reverbforge::mixture::{
    make_eval_suite, save_example, synthetic_speech, write_suite_manifest, INPUT_LEN,
    SUITE_MANIFEST_FILE,
};
use reverbforge::noise::derive_seed;
use reverbforge::prep::normalize_room;
use reverbforge::room::{synth_room_set, RoomLimits};
use reverbforge::signal::SAMPLE_RATE;
use reverbforge::wav::{read_wav, write_stereo_wav, write_wav};
use reverbforge::{RoomRirSet64, Signal64};
use serde::Serialize;

use crate::args::{
    require, BinauralizeArgs, FitArgs, MetricsArgs, MixArgs, NormalizeArgs, SynthArgs,
};
use crate::{csv_err, io_err, CliError, Result};

/// Synthetic speech clips used by `mix` when no corpus is given.
const SYNTHETIC_CLIPS: u64 = 8;
const SYNTHETIC_CLIP_LEN: usize = 4 * INPUT_LEN;

/// Pretty JSON with sorted keys, for standard output.
fn print_json<S: Serialize>(value: &S) -> Result<()> {
    let v = serde_json::to_value(value).map_err(|e| CliError::Usage(e.to_string()))?;
    println!(
        "{}",
        serde_json::to_string_pretty(&v).map_err(|e| CliError::Usage(e.to_string()))?
    );
    Ok(())
}

fn limits(a: &SynthArgs) -> Result<RoomLimits> {
    let full = RoomLimits::default();
    Ok(match (a.t60_min, a.t60_max) {
        (None, None) => full,
        (lo, hi) => {
            let (dlo, dhi) = full.t60;
            full.with_t60_range(lo.unwrap_or(dlo), hi.unwrap_or(dhi))?
        }
    })
}

/// Writes `room_NNN/` directories under `--out`; prints each manifest path.
pub fn synth(a: &SynthArgs) -> Result<()> {
    let limits = limits(a)?;
    require(a.rooms > 0, || "--rooms must be at least 1".into())?;
    require((4..=14).contains(&a.sources), || {
        format!("--sources must be in 4..=14, got {}", a.sources)
    })?;
    create_dir(&a.out)?;
    let paths = (0..a.rooms)
        .into_par_iter()
        .map(|i| {
            let seed = derive_seed(a.seed, i as u64);
            let spec = limits.sample(seed);
            let mut set: RoomRirSet64 = synth_room_set(&spec, a.sources, seed)?;
            if a.normalize {
                set = normalize_room(set)?.0;
            }
            info!(
                "room {i}: {} T60 {:.2} s, {:?} m",
                set.room_id, spec.target_t60, spec.dimensions
            );
            Ok(save_room_set(
                &set,
                a.out.join(format!("room_{i:03}")),
                a.format.into(),
            )?)
        })
        .collect::<Result<Vec<PathBuf>>>()?;
    for p in paths {
        println!("{}", p.display());
    }
    Ok(())
}

/// Manifest paths named by `paths`: manifest files, room directories, or
/// directories whose subdirectories are rooms (in name order).
pub fn find_manifests(paths: &[PathBuf]) -> Result<Vec<PathBuf>> {
    let mut out = Vec::new();
    for p in paths {
        if p.is_file() {
            out.push(p.clone());
        } else if p.join(MANIFEST_FILE).is_file() {
            out.push(p.join(MANIFEST_FILE));
        } else if p.is_dir() {
            let mut found: Vec<PathBuf> = fs::read_dir(p)
                .map_err(io_err(p))?
                .filter_map(|e| e.ok().map(|e| e.path().join(MANIFEST_FILE)))
                .filter(|m| m.is_file())
                .collect();
            if found.is_empty() {
                return Err(CliError::Usage(format!(
                    "no room manifests under {}",
                    p.display()
                )));
            }
            found.sort();
            out.extend(found);
        } else {
            return Err(CliError::Io {
                path: p.clone(),
                source: std::io::Error::new(
                    std::io::ErrorKind::NotFound,
                    "no such file or directory",
                ),
            });
        }
    }
    Ok(out)
}

/// Normalizes each room and rewrites it; prints one report per room.
pub fn normalize(a: &NormalizeArgs) -> Result<()> {
    for manifest in find_manifests(&a.rooms)? {
        let set: RoomRirSet64 = load_room_set(&manifest)?;
        let (set, report) = normalize_room(set)?;
        let dir = match &a.out {
            Some(out) => out.join(&set.room_id),
            None => manifest.parent().unwrap_or(Path::new(".")).to_path_buf(),
        };
        save_room_set(&set, &dir, a.format.into())?;
        println!(
            "{}",
            serde_json::to_string(&report).map_err(|e| CliError::Usage(e.to_string()))?
        );
    }
    Ok(())
}

fn load_speech(dir: &Path) -> Result<Vec<Signal64>> {
    let mut paths: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(io_err(dir))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x.eq_ignore_ascii_case("wav")))
        .collect();
    paths.sort();
    require(!paths.is_empty(), || {
        format!("no WAV files in {}", dir.display())
    })?;
    paths
        .iter()
        .map(|p| {
            let s = read_wav::<f64>(p)?.into_mono()?;
            s.require_rate(SAMPLE_RATE)?;
            Ok(s)
        })
        .collect()
}

/// Writes the suite's WAVs and `suite.json` under `--out`.
pub fn mix(a: &MixArgs) -> Result<()> {
    let rooms = find_manifests(&a.rooms)?
        .iter()
        .map(|m| Ok(load_room_set::<f64>(m)?))
        .collect::<Result<Vec<_>>>()?;
    let pool = match &a.speech {
        Some(dir) => load_speech(dir)?,
        None => (0..SYNTHETIC_CLIPS)
            .map(|i| {
                Ok(synthetic_speech(
                    SYNTHETIC_CLIP_LEN,
                    derive_seed(a.seed, u64::MAX - i),
                )?)
            })
            .collect::<Result<_>>()?,
    };
    let plan = make_eval_suite(&rooms, a.per_count, &a.sources, a.seed)?;
    create_dir(&a.out)?;
    let entries = (0..plan.len())
        .into_par_iter()
        .map(|i| {
            Ok(save_example(
                &plan.generate(i, &rooms, &pool)?,
                &a.out,
                i,
                a.format.into(),
            )?)
        })
        .collect::<Result<Vec<_>>>()?;
    let path = a.out.join(SUITE_MANIFEST_FILE);
    write_suite_manifest(&path, &entries)?;
    println!("{}", path.display());
    Ok(())
}

#[derive(Serialize)]
struct FitSummary {
    evaluations: usize,
    budget_exhausted: bool,
    initial_loss: f64,
    final_loss: f64,
}

/// Writes `params.json`, `fitted.wav` and `loss_trace.csv` under `--out`.
pub fn fit(a: &FitArgs) -> Result<()> {
    let target = read_wav::<f64>(&a.target)?.into_mono()?;
    let cfg = FitConfig {
        budget: a.budget,
        noise_seed: a.seed,
        ..FitConfig::default()
    };
    let result = fit_to_rir(&target, &a.loss.config()?, &cfg)?;
    let fitted: Signal64 = decode(&result.params)?;
    create_dir(&a.out)?;
    write_json(a.out.join("params.json"), &result.params)?;
    write_wav(a.out.join("fitted.wav"), &fitted, Default::default())?;
    let trace = a.out.join("loss_trace.csv");
    let mut w = csv::Writer::from_path(&trace).map_err(csv_err(&trace))?;
    w.write_record(["step", "loss"]).map_err(csv_err(&trace))?;
    for (i, l) in result.loss_trace.iter().enumerate() {
        w.write_record([i.to_string(), l.to_string()])
            .map_err(csv_err(&trace))?;
    }
    w.flush().map_err(io_err(&trace))?;
    print_json(&FitSummary {
        evaluations: result.evaluations,
        budget_exhausted: result.budget_exhausted,
        initial_loss: result.loss_trace[0],
        final_loss: result.final_loss(),
    })
}

pub fn metrics(a: &MetricsArgs) -> Result<()> {
    let h = read_wav::<f64>(&a.input)?.into_mono()?;
    let params = analyze(&h)?;
    match &a.out {
        Some(path) => Ok(write_json(path, &params)?),
        None => print_json(&params),
    }
}

#[derive(Serialize)]
struct BinauralSummary {
    scale: f64,
    interaural_correlation: f64,
}

pub fn binauralize(a: &BinauralizeArgs) -> Result<()> {
    let mut pred = read_wav::<f64>(&a.pred)?.into_mono()?;
    if a.rescale {
        let peak = pred.peak();
        require(peak > 0.0, || "predicted RIR is silent".into())?;
        pred = pred.scaled(PRED_PEAK / peak);
    }
    let hrir = read_wav::<f64>(&a.hrir)?.into_stereo()?;
    let brir = merge_with_hrir(&pred, &hrir, a.seed, &BinauralConfig::default())?;
    write_stereo_wav(&a.out, &brir.signal, a.format.into())?;
    print_json(&BinauralSummary {
        scale: brir.scale,
        interaural_correlation: interaural_correlation(&brir.signal),
    })
}
