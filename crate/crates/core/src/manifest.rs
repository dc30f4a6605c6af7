//! Room manifests: one JSON file per room next to its RIR WAV files.

use std::fs;
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::prep::SelectionMethod;
use crate::real::Real;
use crate::room::{Position, Rir, RoomRirSet, RoomSpec};
use crate::wav::{read_wav, write_wav, WavFormat};

pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RirEntry {
    /// WAV path, relative to the manifest's directory unless absolute.
    pub path: String,
    #[serde(default)]
    pub source_position: Option<Position>,
    #[serde(default)]
    pub receiver_position: Option<Position>,
    #[serde(default)]
    pub distance_m: Option<f64>,
    #[serde(default)]
    pub is_representative: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoomManifest {
    pub room_id: String,
    #[serde(default)]
    pub dimensions: Option<[f64; 3]>,
    #[serde(default)]
    pub target_t60: Option<f64>,
    #[serde(default)]
    pub band_multipliers: Option<Vec<f64>>,
    /// Seed of the room spec.
    #[serde(default)]
    pub seed: Option<u64>,
    /// Seed of source placement and late-field noise.
    #[serde(default)]
    pub synthesis_seed: Option<u64>,
    pub rirs: Vec<RirEntry>,
    #[serde(default)]
    pub normalization_factor: Option<f64>,
    #[serde(default)]
    pub method: Option<SelectionMethod>,
}

impl RoomManifest {
    fn room_spec(&self) -> Option<RoomSpec> {
        Some(RoomSpec {
            dimensions: self.dimensions?,
            target_t60: self.target_t60?,
            band_decay_multipliers: self.band_multipliers.clone()?,
            seed: self.seed?,
        })
    }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> Error + '_ {
    move |source| Error::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Pretty JSON with object keys in sorted order.
pub fn write_json<S: Serialize>(path: impl AsRef<Path>, value: &S) -> Result<()> {
    let path = path.as_ref();
    let json_err = |source| Error::Json {
        path: path.to_path_buf(),
        source,
    };
    // serde_json's default map is ordered by key.
    let v = serde_json::to_value(value).map_err(json_err)?;
    let mut text = serde_json::to_string_pretty(&v).map_err(json_err)?;
    text.push('\n');
    fs::write(path, text).map_err(io_err(path))
}

pub fn read_json<D: DeserializeOwned>(path: impl AsRef<Path>) -> Result<D> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    serde_json::from_str(&text).map_err(|source| Error::Json {
        path: path.to_path_buf(),
        source,
    })
}

pub fn create_dir(path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::create_dir_all(path).map_err(io_err(path))
}

/// Writes `rir_NN.wav` files and `manifest.json` into `dir`; returns the
/// manifest path.
pub fn save_room_set<T: Real>(
    set: &RoomRirSet<T>,
    dir: impl AsRef<Path>,
    format: WavFormat,
) -> Result<PathBuf> {
    set.validate()?;
    let dir = dir.as_ref();
    create_dir(dir)?;
    let mut entries = Vec::with_capacity(set.len());
    for (i, r) in set.rirs.iter().enumerate() {
        let name = format!("rir_{i:02}.wav");
        write_wav(dir.join(&name), &r.signal, format)?;
        entries.push(RirEntry {
            path: name,
            source_position: r.source_position,
            receiver_position: r.receiver_position,
            distance_m: r.distance_m,
            is_representative: r.is_representative,
        });
    }
    let manifest = RoomManifest {
        room_id: set.room_id.clone(),
        dimensions: set.room.as_ref().map(|r| r.dimensions),
        target_t60: set.room.as_ref().map(|r| r.target_t60),
        band_multipliers: set.room.as_ref().map(|r| r.band_decay_multipliers.clone()),
        seed: set.room.as_ref().map(|r| r.seed),
        synthesis_seed: set.seed,
        rirs: entries,
        normalization_factor: set.normalization_factor,
        method: set.representative_method,
    };
    let path = dir.join(MANIFEST_FILE);
    write_json(&path, &manifest)?;
    Ok(path)
}

/// Loads a room from its manifest. Accepts the manifest file or its
/// directory.
pub fn load_room_set<T: Real>(path: impl AsRef<Path>) -> Result<RoomRirSet<T>> {
    let path = path.as_ref();
    let path = if path.is_dir() {
        path.join(MANIFEST_FILE)
    } else {
        path.to_path_buf()
    };
    let manifest: RoomManifest = read_json(&path)?;
    let base = path.parent().unwrap_or(Path::new("."));
    let mut rirs = Vec::with_capacity(manifest.rirs.len());
    for e in &manifest.rirs {
        let signal = read_wav::<T>(base.join(&e.path))?.into_mono()?;
        let mut r = Rir::new(signal, manifest.room_id.clone());
        r.source_position = e.source_position;
        r.receiver_position = e.receiver_position;
        r.distance_m = match (e.source_position, e.receiver_position, e.distance_m) {
            (Some(s), Some(t), None) => Some(crate::room::distance(&s, &t)),
            (_, _, d) => d,
        };
        r.is_representative = e.is_representative;
        rirs.push(r);
    }
    let mut set = RoomRirSet::new(manifest.room_id.clone(), manifest.room_spec(), rirs)?;
    set.normalization_factor = manifest.normalization_factor;
    set.representative_method = manifest.method;
    set.seed = manifest.synthesis_seed;
    set.validate()?;
    Ok(set)
}

/// An external room from a directory of mono WAV files, sorted by name.
pub fn load_wav_dir<T: Real>(
    dir: impl AsRef<Path>,
    room_id: impl Into<String>,
) -> Result<RoomRirSet<T>> {
    let dir = dir.as_ref();
    let mut paths: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(io_err(dir))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x.eq_ignore_ascii_case("wav")))
        .collect();
    paths.sort();
    let room_id = room_id.into();
    let rirs = paths
        .iter()
        .map(|p| Ok(Rir::new(read_wav::<T>(p)?.into_mono()?, room_id.clone())))
        .collect::<Result<Vec<_>>>()?;
    RoomRirSet::new(room_id, None, rirs)
}
