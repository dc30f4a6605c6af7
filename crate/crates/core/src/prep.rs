//! Representative-RIR selection and per-room peak normalization.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::real::Real;
use crate::room::{Rir, RoomRirSet, REPRESENTATIVE_DISTANCE_M};

/// Target absolute peak of the representative RIR.
pub const REPRESENTATIVE_PEAK: f64 = 0.5;
/// Distance metadata in this range marks a representative candidate.
pub const REPRESENTATIVE_DISTANCE_RANGE: (f64, f64) = (1.4, 2.0);
/// Representatives quieter than this are rejected as silent.
pub const PEAK_FLOOR: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SelectionMethod {
    MetadataDistance,
    LargestPeak,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormalizationReport {
    pub room_id: String,
    pub representative_index: usize,
    pub method: SelectionMethod,
    pub factor: f64,
}

/// Closest-to-1.5 m RIR among those with distance metadata in
/// [1.4, 2.0] m, otherwise the RIR with the largest absolute peak. Ties go
/// to the smaller index.
pub fn select_representative<T: Real>(set: &RoomRirSet<T>) -> Result<(usize, SelectionMethod)> {
    if set.rirs.is_empty() {
        return Err(Error::EmptySet);
    }
    let (lo, hi) = REPRESENTATIVE_DISTANCE_RANGE;
    let by_distance = set
        .rirs
        .iter()
        .enumerate()
        .filter_map(|(i, r)| {
            r.distance_m
                .filter(|d| (lo..=hi).contains(d))
                .map(|d| (i, (d - REPRESENTATIVE_DISTANCE_M).abs()))
        })
        .fold(None, |best: Option<(usize, f64)>, (i, off)| match best {
            Some((_, b)) if b <= off => best,
            _ => Some((i, off)),
        });
    if let Some((i, _)) = by_distance {
        return Ok((i, SelectionMethod::MetadataDistance));
    }
    let mut best = 0;
    for (i, r) in set.rirs.iter().enumerate() {
        if r.signal.peak() > set.rirs[best].signal.peak() {
            best = i;
        }
    }
    Ok((best, SelectionMethod::LargestPeak))
}

/// `0.5 / max|h|`.
pub fn room_normalization_factor<T: Real>(representative: &Rir<T>) -> Result<f64> {
    let peak = representative.signal.peak().as_f64();
    if !(peak >= PEAK_FLOOR) {
        return Err(Error::Degenerate(format!(
            "representative peak {peak:e} is below the floor {PEAK_FLOOR:e}"
        )));
    }
    Ok(REPRESENTATIVE_PEAK / peak)
}

/// Scales every RIR of the room by `factor`. The stored factor accumulates,
/// so it always relates the current samples to the original ones.
pub fn apply_normalization<T: Real>(mut set: RoomRirSet<T>, factor: f64) -> Result<RoomRirSet<T>> {
    if !(factor.is_finite() && factor > 0.0) {
        return Err(Error::Config(format!(
            "normalization factor {factor} must be positive"
        )));
    }
    let g = T::lit(factor);
    for r in &mut set.rirs {
        for v in r.signal.samples_mut() {
            *v = *v * g;
        }
    }
    set.normalization_factor = Some(set.normalization_factor.unwrap_or(1.0) * factor);
    Ok(set)
}

/// Selects the representative, flags it, and normalizes the room.
pub fn normalize_room<T: Real>(set: RoomRirSet<T>) -> Result<(RoomRirSet<T>, NormalizationReport)> {
    let (index, method) = select_representative(&set)?;
    let factor = room_normalization_factor(&set.rirs[index])?;
    let mut set = apply_normalization(set, factor)?;
    for (i, r) in set.rirs.iter_mut().enumerate() {
        r.is_representative = i == index;
    }
    set.representative_method = Some(method);
    let report = NormalizationReport {
        room_id: set.room_id.clone(),
        representative_index: index,
        method,
        factor,
    };
    Ok((set, report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signal::Signal;
    use proptest::prelude::*;

    fn rir(peak: f64, at: usize, distance: Option<f64>) -> Rir<f64> {
        let mut s = vec![0.0; 64];
        s[at] = peak;
        s[at + 5] = -0.3 * peak;
        let mut r = Rir::new(Signal::new(s, 48000).unwrap(), "r");
        if let Some(d) = distance {
            r = r.with_positions([0.0, 0.0, 0.0], [d, 0.0, 0.0]);
        }
        r
    }

    fn set(rirs: Vec<Rir<f64>>) -> RoomRirSet<f64> {
        RoomRirSet::new("r", None, rirs).unwrap()
    }

    #[test]
    fn distance_metadata_wins() {
        let s = set(vec![
            rir(0.9, 3, Some(1.0)),
            rir(0.1, 3, Some(1.6)),
            rir(0.2, 3, Some(3.2)),
        ]);
        assert_eq!(
            select_representative(&s).unwrap(),
            (1, SelectionMethod::MetadataDistance)
        );
    }

    #[test]
    fn distance_ties_pick_smaller_index() {
        let s = set(vec![
            rir(0.9, 3, Some(1.0)),
            rir(0.1, 3, Some(1.6)),
            rir(0.2, 3, Some(1.6)),
        ]);
        assert_eq!(select_representative(&s).unwrap().0, 1);
    }

    #[test]
    fn largest_peak_fallback() {
        let s = set(vec![
            rir(0.2, 1, None),
            rir(-0.9, 2, None),
            rir(0.4, 3, None),
        ]);
        assert_eq!(
            select_representative(&s).unwrap(),
            (1, SelectionMethod::LargestPeak)
        );
        let s = set(vec![rir(0.5, 1, None), rir(0.5, 2, None)]);
        assert_eq!(select_representative(&s).unwrap().0, 0);
        let s = set(vec![rir(0.5, 1, Some(2.5))]);
        assert_eq!(
            select_representative(&s).unwrap(),
            (0, SelectionMethod::LargestPeak)
        );
    }

    #[test]
    fn factor_arithmetic() {
        assert_eq!(room_normalization_factor(&rir(2.0, 0, None)).unwrap(), 0.25);
        assert_eq!(room_normalization_factor(&rir(0.5, 0, None)).unwrap(), 1.0);
        assert!(matches!(
            room_normalization_factor(&rir(1e-12, 0, None)),
            Err(Error::Degenerate(_))
        ));
    }

    #[test]
    fn normalize_flags_exactly_one() {
        let s = set(vec![
            rir(0.2, 1, None),
            rir(0.9, 2, None),
            rir(0.4, 3, None),
        ]);
        let (n, report) = normalize_room(s).unwrap();
        assert_eq!(n.representative_index(), Some(1));
        assert!((n.rirs[1].signal.peak() - 0.5).abs() < 1e-12);
        assert_eq!(report.method, SelectionMethod::LargestPeak);
        assert_eq!(n.normalization_factor, Some(report.factor));
    }

    #[test]
    fn nonpositive_factor_rejected() {
        assert!(apply_normalization(set(vec![rir(0.2, 1, None)]), 0.0).is_err());
        assert!(apply_normalization(set(vec![rir(0.2, 1, None)]), f64::NAN).is_err());
    }

    proptest! {
        #[test]
        fn inverse_factor_restores_samples(peaks in prop::collection::vec(0.01f64..4.0, 1..6), f in 0.01f64..100.0) {
            let orig = set(peaks.iter().enumerate().map(|(i, &p)| rir(p, i, None)).collect());
            let back = apply_normalization(apply_normalization(orig.clone(), f).unwrap(), 1.0 / f).unwrap();
            for (a, b) in orig.rirs.iter().zip(&back.rirs) {
                for (x, y) in a.signal.samples().iter().zip(b.signal.samples()) {
                    prop_assert!((x - y).abs() <= 1e-12 * x.abs().max(1.0));
                }
            }
            prop_assert!((back.normalization_factor.unwrap() - 1.0).abs() < 1e-12);
        }

        #[test]
        fn peak_ratios_preserved(peaks in prop::collection::vec(0.01f64..4.0, 2..6)) {
            let orig = set(peaks.iter().enumerate().map(|(i, &p)| rir(p, i, None)).collect());
            let (n, _) = normalize_room(orig.clone()).unwrap();
            let r0 = orig.rirs[0].signal.peak() / orig.rirs[1].signal.peak();
            let r1 = n.rirs[0].signal.peak() / n.rirs[1].signal.peak();
            prop_assert!((r0 / r1 - 1.0).abs() < 1e-12);
            let rep = n.representative().unwrap();
            prop_assert!((rep.signal.peak() - 0.5).abs() < 1e-9);
        }
    }
}
