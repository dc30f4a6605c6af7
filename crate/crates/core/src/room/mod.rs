//! Synthetic shoebox rooms: image-source early reflections followed by a
//! frequency-dependent exponentially decaying noise tail.

mod image_source;
mod late;
mod set;

use rand::RngCore;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::filterbank::BandSet;
use crate::noise::{log_uniform_in, rng_from_seed, uniform_in};

pub use image_source::{
    early_cutoff, image_source_early, image_sources, render_arrivals, ImageArrival,
};
pub use late::{decay_envelope, moorer_late};
pub use set::{synth_rir, synth_room_set, Rir, RoomRirSet, REPRESENTATIVE_DISTANCE_M};

pub const SPEED_OF_SOUND: f64 = 343.0;

/// Cartesian position in metres.
pub type Position = [f64; 3];

pub fn distance(a: &Position, b: &Position) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// Octave bands of the late field; one decay multiplier per band.
pub fn late_bands() -> BandSet {
    BandSet::full_range()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoomSpec {
    /// `(Lx, Ly, Lz)` in metres; `Lz` is the height.
    pub dimensions: [f64; 3],
    /// Broadband reverberation time the room is generated for, seconds.
    pub target_t60: f64,
    /// Per-band factors on the decay time, the room's decay pattern.
    pub band_decay_multipliers: Vec<f64>,
    pub seed: u64,
}

impl RoomSpec {
    pub fn floor_area(&self) -> f64 {
        self.dimensions[0] * self.dimensions[1]
    }

    pub fn volume(&self) -> f64 {
        self.dimensions.iter().product()
    }

    pub fn surface_area(&self) -> f64 {
        let [x, y, z] = self.dimensions;
        2.0 * (x * y + x * z + y * z)
    }

    pub fn validate(&self) -> Result<()> {
        let lim = RoomLimits::default();
        if self.dimensions.iter().any(|&d| !(d.is_finite() && d > 0.0)) {
            return Err(Error::Geometry("room dimensions must be positive".into()));
        }
        let area = self.floor_area();
        if !(lim.floor_area.0..=lim.floor_area.1).contains(&area) {
            return Err(Error::Config(format!(
                "floor area {area:.2} m² outside [{}, {}]",
                lim.floor_area.0, lim.floor_area.1
            )));
        }
        if !(lim.t60.0..=lim.t60.1).contains(&self.target_t60) {
            return Err(Error::Config(format!(
                "target T60 {} s outside [{}, {}]",
                self.target_t60, lim.t60.0, lim.t60.1
            )));
        }
        if self.band_decay_multipliers.len() != late_bands().len() {
            return Err(Error::Config(format!(
                "expected {} band multipliers, got {}",
                late_bands().len(),
                self.band_decay_multipliers.len()
            )));
        }
        if self
            .band_decay_multipliers
            .iter()
            .any(|m| !(lim.multiplier.0..=lim.multiplier.1).contains(m))
        {
            return Err(Error::Config(format!(
                "band multipliers must lie in [{}, {}]",
                lim.multiplier.0, lim.multiplier.1
            )));
        }
        Ok(())
    }

    /// Mean wall absorption that yields `target_t60` by Eyring's formula.
    pub fn eyring_absorption(&self) -> f64 {
        eyring_absorption(self.volume(), self.surface_area(), self.target_t60)
    }

    /// Pressure reflection coefficient shared by all six walls.
    pub fn reflection_coefficient(&self) -> f64 {
        (1.0 - self.eyring_absorption()).sqrt()
    }

    /// Decay time of each late-field band.
    ///
    /// The raw pattern `target · m_b` would make the broadband decay follow
    /// the slowest energetic bands, so the pattern is rescaled by a single
    /// factor chosen so that the broadband T30 of a white late field equals
    /// `target_t60`. With all multipliers equal to 1 the factor is 1.
    pub fn band_t60s(&self) -> Vec<f64> {
        let s = broadband_calibration(&self.band_decay_multipliers, late_bands().centers());
        self.band_decay_multipliers
            .iter()
            .map(|m| self.target_t60 * s * m)
            .collect()
    }
}

/// `ᾱ = 1 − exp(−0.161 V / (S T60))`.
pub fn eyring_absorption(volume: f64, surface: f64, t60: f64) -> f64 {
    1.0 - (-0.161 * volume / (surface * t60)).exp()
}

/// `ᾱ = 0.161 V / (S T60)`.
pub fn sabine_absorption(volume: f64, surface: f64, t60: f64) -> f64 {
    0.161 * volume / (surface * t60)
}

/// Factor `s` such that a white-spectrum field whose band `b` decays with
/// time constant `s · m_b` has a broadband T30 of exactly 1.
fn broadband_calibration(multipliers: &[f64], centers: &[f64]) -> f64 {
    // Band energy of white noise grows with bandwidth, i.e. with the centre.
    let k = 6.0 * std::f64::consts::LN_10;
    let max_m = multipliers.iter().copied().fold(0.0, f64::max);
    let dt = 1e-3 * max_m;
    let n = (3.0 * max_m / dt) as usize;
    let edc: Vec<f64> = (0..n)
        .map(|i| {
            let t = i as f64 * dt;
            multipliers
                .iter()
                .zip(centers)
                .map(|(m, c)| c * m * (-k * t / m).exp())
                .sum::<f64>()
        })
        .collect();
    let points: Vec<(f64, f64)> = edc
        .iter()
        .enumerate()
        .map(|(i, e)| (i as f64 * dt, 10.0 * (e / edc[0]).log10()))
        .filter(|&(_, db)| (-35.0..=-5.0).contains(&db))
        .collect();
    let slope = crate::metrics::linear_slope(&points);
    // T30 of the unscaled pattern is -60/slope; the calibration undoes it.
    -slope / 60.0
}

/// Sampling ranges for random rooms.
#[derive(Debug, Clone, PartialEq)]
pub struct RoomLimits {
    pub floor_area: (f64, f64),
    pub height: (f64, f64),
    pub t60: (f64, f64),
    pub multiplier: (f64, f64),
    /// Ratio `Lx / Ly` of the floor, `Lx` being the longer side.
    pub aspect: (f64, f64),
}

impl Default for RoomLimits {
    fn default() -> Self {
        Self {
            floor_area: (24.5, 4000.0),
            height: (2.4, 6.0),
            t60: (0.1, 1.5),
            multiplier: (0.7, 1.4),
            aspect: (1.0, 2.0),
        }
    }
}

impl RoomLimits {
    /// Narrows the T60 range; it must stay inside the default range.
    pub fn with_t60_range(mut self, lo: f64, hi: f64) -> Result<Self> {
        let full = RoomLimits::default().t60;
        if !(lo.is_finite() && hi.is_finite() && full.0 <= lo && lo <= hi && hi <= full.1) {
            return Err(Error::Config(format!(
                "T60 range [{lo}, {hi}] must be ordered and inside [{}, {}]",
                full.0, full.1
            )));
        }
        self.t60 = (lo, hi);
        Ok(self)
    }

    pub fn sample(&self, seed: u64) -> RoomSpec {
        let mut rng = rng_from_seed(seed);
        let area = log_uniform_in(&mut rng, self.floor_area.0, self.floor_area.1);
        let aspect = uniform_in(&mut rng, self.aspect.0, self.aspect.1);
        let lx = (area * aspect).sqrt();
        let ly = area / lx;
        let lz = uniform_in(&mut rng, self.height.0, self.height.1);
        let target_t60 = uniform_in(&mut rng, self.t60.0, self.t60.1);
        let band_decay_multipliers = (0..late_bands().len())
            .map(|_| log_uniform_in(&mut rng, self.multiplier.0, self.multiplier.1))
            .collect();
        // Keep the stream position independent of later additions.
        let _ = rng.next_u64();
        RoomSpec {
            dimensions: [lx, ly, lz],
            target_t60,
            band_decay_multipliers,
            seed,
        }
    }
}

/// Random room: log-uniform floor area, uniform height and T60, log-uniform
/// per-band decay multipliers.
pub fn sample_room_spec(seed: u64) -> RoomSpec {
    RoomLimits::default().sample(seed)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sampled_rooms_respect_ranges() {
        for seed in 0..500 {
            let r = sample_room_spec(seed);
            assert!(
                (24.5..=4000.0).contains(&r.floor_area()),
                "{}",
                r.floor_area()
            );
            assert!((0.1..=1.5).contains(&r.target_t60));
            assert!((2.4..=6.0).contains(&r.dimensions[2]));
            assert!(r.dimensions[0] >= r.dimensions[1]);
            assert!(r.validate().is_ok());
        }
    }

    #[test]
    fn sampling_is_deterministic() {
        assert_eq!(sample_room_spec(9), sample_room_spec(9));
        assert_ne!(sample_room_spec(9), sample_room_spec(10));
    }

    #[test]
    fn sabine_reference_value() {
        assert!((sabine_absorption(100.0, 130.0, 0.5) - 0.2477).abs() < 1e-4);
        // Eyring always absorbs less than Sabine predicts for the same T60.
        assert!(eyring_absorption(100.0, 130.0, 0.5) < sabine_absorption(100.0, 130.0, 0.5));
    }

    #[test]
    fn invalid_rooms_rejected() {
        let mut r = sample_room_spec(1);
        r.target_t60 = 2.0;
        assert!(r.validate().is_err());
        let mut r = sample_room_spec(1);
        r.dimensions = [3.0, 3.0, 2.5];
        assert!(r.validate().is_err());
        let mut r = sample_room_spec(1);
        r.band_decay_multipliers[3] = 2.0;
        assert!(r.validate().is_err());
    }

    #[test]
    fn t60_range_override() {
        assert!(RoomLimits::default().with_t60_range(0.05, 1.0).is_err());
        assert!(RoomLimits::default().with_t60_range(1.0, 0.5).is_err());
        let lim = RoomLimits::default().with_t60_range(0.3, 0.4).unwrap();
        for seed in 0..50 {
            assert!((0.3..=0.4).contains(&lim.sample(seed).target_t60));
        }
    }

    #[test]
    fn flat_pattern_needs_no_calibration() {
        let mut r = sample_room_spec(3);
        r.band_decay_multipliers = vec![1.0; 10];
        for t in r.band_t60s() {
            assert!((t / r.target_t60 - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn calibration_is_uniform_across_bands() {
        let r = sample_room_spec(4);
        let t = r.band_t60s();
        let ratio = t[0] / r.band_decay_multipliers[0];
        for (tb, m) in t.iter().zip(&r.band_decay_multipliers) {
            assert!((tb / m - ratio).abs() < 1e-12);
        }
    }
}
