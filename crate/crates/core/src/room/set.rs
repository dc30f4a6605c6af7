use crate::error::{Error, Result};
use crate::metrics::DIRECT_HALF_WINDOW_S;
use crate::noise::{derive_seed, rng_from_seed, uniform_in};
use crate::prep::SelectionMethod;
use crate::real::Real;
use crate::signal::{Signal, SAMPLE_RATE};
use crate::window::hann_fade_in;

use super::image_source::{check_inside, early_cutoff, image_sources, render_arrivals};
use super::late::{crossfade_span, late_unramped};
use super::{distance, Position, RoomSpec};

/// Source-to-listener distance of the representative RIR.
pub const REPRESENTATIVE_DISTANCE_M: f64 = 1.5;
const WALL_MARGIN_M: f64 = 0.5;
const RECEIVER_CLEARANCE_M: f64 = 0.3;
const LISTENER_HEIGHT_M: f64 = 1.5;
const PLACEMENT_ATTEMPTS: usize = 10_000;

#[derive(Debug, Clone, PartialEq)]
pub struct Rir<T> {
    pub signal: Signal<T>,
    pub room_id: String,
    pub source_position: Option<Position>,
    pub receiver_position: Option<Position>,
    pub distance_m: Option<f64>,
    pub is_representative: bool,
}

impl<T: Real> Rir<T> {
    /// RIR without geometry metadata, e.g. a measured one.
    pub fn new(signal: Signal<T>, room_id: impl Into<String>) -> Self {
        Self {
            signal,
            room_id: room_id.into(),
            source_position: None,
            receiver_position: None,
            distance_m: None,
            is_representative: false,
        }
    }

    pub fn with_positions(mut self, src: Position, rcv: Position) -> Self {
        self.distance_m = Some(distance(&src, &rcv));
        self.source_position = Some(src);
        self.receiver_position = Some(rcv);
        self
    }

    pub fn validate(&self) -> Result<()> {
        if let (Some(s), Some(r), Some(d)) = (
            self.source_position,
            self.receiver_position,
            self.distance_m,
        ) {
            if (distance(&s, &r) - d).abs() > 1e-6 {
                return Err(Error::InvalidSignal(format!(
                    "distance_m {d} disagrees with positions ({} m)",
                    distance(&s, &r)
                )));
            }
        }
        if let Some(d) = self.distance_m {
            if !(d.is_finite() && d >= 0.0) {
                return Err(Error::InvalidSignal(format!("invalid distance_m {d}")));
            }
        }
        if self.signal.is_empty() {
            return Err(Error::InvalidSignal("empty RIR".into()));
        }
        Ok(())
    }
}

/// All RIRs of one room.
#[derive(Debug, Clone, PartialEq)]
pub struct RoomRirSet<T> {
    pub room_id: String,
    /// Generating spec; `None` for external rooms.
    pub room: Option<RoomSpec>,
    pub rirs: Vec<Rir<T>>,
    pub normalization_factor: Option<f64>,
    pub representative_method: Option<SelectionMethod>,
    /// Seed the set was synthesized from.
    pub seed: Option<u64>,
}

impl<T: Real> RoomRirSet<T> {
    pub fn new(
        room_id: impl Into<String>,
        room: Option<RoomSpec>,
        rirs: Vec<Rir<T>>,
    ) -> Result<Self> {
        let set = Self {
            room_id: room_id.into(),
            room,
            rirs,
            normalization_factor: None,
            representative_method: None,
            seed: None,
        };
        set.validate()?;
        Ok(set)
    }

    pub fn validate(&self) -> Result<()> {
        let first = self.rirs.first().ok_or(Error::EmptySet)?;
        let rate = first.signal.sample_rate();
        for (i, r) in self.rirs.iter().enumerate() {
            r.validate()?;
            if r.room_id != self.room_id {
                return Err(Error::InvalidSignal(format!(
                    "rir {i} belongs to room {} not {}",
                    r.room_id, self.room_id
                )));
            }
            r.signal.require_rate(rate)?;
        }
        if let Some(f) = self.normalization_factor {
            if !(f.is_finite() && f > 0.0) {
                return Err(Error::Config(format!(
                    "normalization factor {f} must be positive"
                )));
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.rirs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rirs.is_empty()
    }

    /// Index of the flagged representative, if exactly one is flagged.
    pub fn representative_index(&self) -> Option<usize> {
        let mut flagged = self
            .rirs
            .iter()
            .enumerate()
            .filter(|(_, r)| r.is_representative)
            .map(|(i, _)| i);
        match (flagged.next(), flagged.next()) {
            (Some(i), None) => Some(i),
            _ => None,
        }
    }

    pub fn representative(&self) -> Option<&Rir<T>> {
        self.representative_index().map(|i| &self.rirs[i])
    }

    /// Relabels the room and every RIR in it.
    pub fn with_room_id(mut self, id: impl Into<String>) -> Self {
        self.room_id = id.into();
        for r in &mut self.rirs {
            r.room_id.clone_from(&self.room_id);
        }
        self
    }
}

/// Default identifier of a synthetic room.
pub(crate) fn synthetic_room_id(room: &RoomSpec) -> String {
    format!("grir-{:016x}", room.seed)
}

/// One synthetic RIR: image sources up to the early cutoff, then the room's
/// late field scaled to the early part's trailing energy.
pub fn synth_rir<T: Real>(
    room: &RoomSpec,
    src: &Position,
    rcv: &Position,
    seed: u64,
) -> Result<Rir<T>> {
    room.validate()?;
    check_inside(room, src, "source")?;
    check_inside(room, rcv, "receiver")?;
    let fs = f64::from(SAMPLE_RATE);
    let len = (room.target_t60 * 1.5).max(1.0) * fs;
    let len = len.round() as usize;

    let t_cut = early_cutoff(room, src, rcv)?;
    let cut = (t_cut * fs).round() as usize;
    let (xstart, xlen) = crossfade_span(t_cut);

    // Level-match window on the early part, after the direct sound.
    let direct = distance(src, rcv) / super::SPEED_OF_SOUND * fs;
    let direct_end = (direct + DIRECT_HALF_WINDOW_S * fs).ceil() as usize;
    let w0 = direct_end.max(cut / 2);
    let min_window = (0.01 * fs) as usize;
    let w1 = xstart.max(w0 + min_window);

    let arrivals = image_sources(room, src, rcv, w1.max(cut) as f64 / fs)?;
    let reference: Vec<f64> = render_arrivals::<f64>(&arrivals, w1, SAMPLE_RATE).into_samples();
    let within_cut: Vec<_> = arrivals
        .into_iter()
        .filter(|a| a.delay_s <= t_cut)
        .collect();
    let early: Vec<f64> = render_arrivals::<f64>(&within_cut, cut, SAMPLE_RATE).into_samples();
    let early_energy: f64 = reference[w0..w1].iter().map(|v| v * v).sum();

    let mut late = late_unramped(room, len, seed)?;
    let late_energy: f64 = late[w0..w1].iter().map(|v| v * v).sum();
    if !(late_energy > 0.0 && early_energy > 0.0) {
        return Err(Error::Degenerate(format!(
            "no energy in level-match window [{w0}, {w1}) samples"
        )));
    }
    let gain = (early_energy / late_energy).sqrt();
    for v in &mut late {
        *v *= gain;
    }

    let fade: Vec<f64> = hann_fade_in(xlen);
    let mut out = vec![0.0f64; len];
    for (i, o) in out.iter_mut().enumerate() {
        let e = early.get(i).copied().unwrap_or(0.0);
        *o = if i < xstart {
            e
        } else if i < xstart + xlen {
            let r = fade[i - xstart];
            e * (1.0 - r) + late[i] * r
        } else {
            late[i]
        };
    }

    let signal = Signal::from_parts(out.into_iter().map(T::lit).collect(), SAMPLE_RATE);
    Ok(Rir::new(signal, synthetic_room_id(room)).with_positions(*src, *rcv))
}

/// A room with `n_sources` RIRs at one listener. The first RIR is the
/// representative, 1.5 m from the listener along the room's long axis.
pub fn synth_room_set<T: Real>(
    room: &RoomSpec,
    n_sources: usize,
    seed: u64,
) -> Result<RoomRirSet<T>> {
    if !(4..=14).contains(&n_sources) {
        return Err(Error::Config(format!(
            "n_sources must be in 4..=14, got {n_sources}"
        )));
    }
    room.validate()?;
    let [lx, ly, lz] = room.dimensions;
    let rcv = [lx / 2.0, ly / 2.0, LISTENER_HEIGHT_M.min(lz / 2.0)];
    let rep = [rcv[0] + REPRESENTATIVE_DISTANCE_M, rcv[1], rcv[2]];
    let fits = |p: &Position| {
        p.iter()
            .zip(&room.dimensions)
            .all(|(&x, &l)| x >= WALL_MARGIN_M && x <= l - WALL_MARGIN_M)
    };
    if !fits(&rep) {
        return Err(Error::Placement(format!(
            "room {:?} m cannot hold a source 1.5 m from a centred listener",
            room.dimensions
        )));
    }

    let mut rng = rng_from_seed(derive_seed(seed, u64::MAX));
    let mut positions = vec![rep];
    while positions.len() < n_sources {
        let mut placed = None;
        for _ in 0..PLACEMENT_ATTEMPTS {
            let p = [
                uniform_in(&mut rng, WALL_MARGIN_M, lx - WALL_MARGIN_M),
                uniform_in(&mut rng, WALL_MARGIN_M, ly - WALL_MARGIN_M),
                uniform_in(&mut rng, WALL_MARGIN_M, lz - WALL_MARGIN_M),
            ];
            if distance(&p, &rcv) >= RECEIVER_CLEARANCE_M {
                placed = Some(p);
                break;
            }
        }
        positions.push(placed.ok_or_else(|| {
            Error::Placement(format!("could not place source {}", positions.len()))
        })?);
    }

    let rirs = positions
        .iter()
        .enumerate()
        .map(|(i, p)| {
            let mut r = synth_rir::<T>(room, p, &rcv, derive_seed(seed, i as u64))?;
            r.is_representative = i == 0;
            Ok(r)
        })
        .collect::<Result<Vec<_>>>()?;
    let mut set = RoomRirSet::new(synthetic_room_id(room), Some(room.clone()), rirs)?;
    set.seed = Some(seed);
    Ok(set)
}
