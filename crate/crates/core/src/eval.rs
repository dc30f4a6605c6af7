//! Error metrics between predicted and true RIRs, and the pred-to-true
//! T60 ratio analysis.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::loss::{multires_stft_loss, MultiResConfig};
use crate::metrics::analyze;
use crate::real::Real;
use crate::signal::Signal;

/// Operands are zero-padded to at least this many samples (1 s at 48 kHz).
pub const MIN_EVAL_LEN: usize = 48_000;
/// Default true-T60 boundary between the small and large groups, seconds.
pub const DEFAULT_T60_SPLIT_S: f64 = 0.7;
/// A prediction is correct when its T60 ratio lies in this closed range.
pub const RATIO_TOLERANCE: (f64, f64) = (0.9, 1.1);

/// The three error measures of one prediction. T60 and DRR use the
/// 500 Hz / 1 kHz band average and are `None` when either side lacks it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossSuite {
    pub stft_loss: f64,
    pub t60_sq_err: Option<f64>,
    pub drr_sq_err: Option<f64>,
    pub pred_t60: Option<f64>,
    pub true_t60: Option<f64>,
}

pub fn loss_suite<T: Real>(
    pred: &Signal<T>,
    truth: &Signal<T>,
    mcfg: &MultiResConfig,
) -> Result<LossSuite> {
    let len = pred.len().max(truth.len()).max(MIN_EVAL_LEN);
    let (p, t) = (pred.fit_to_len(len), truth.fit_to_len(len));
    let stft_loss = multires_stft_loss(&t, &p, mcfg)?.as_f64();
    let (pa, ta) = (analyze(&p)?.avg_500_1000, analyze(&t)?.avg_500_1000);
    let sq = |a: Option<T>, b: Option<T>| Some((a?.as_f64() - b?.as_f64()).powi(2));
    Ok(LossSuite {
        stft_loss,
        t60_sq_err: sq(pa.t30, ta.t30),
        drr_sq_err: sq(pa.drr, ta.drr),
        pred_t60: pa.t30.map(Real::as_f64),
        true_t60: ta.t30.map(Real::as_f64),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum T60Group {
    /// True T60 below the split.
    SmallT60,
    /// True T60 at or above the split.
    LargeT60,
}

impl T60Group {
    pub fn of(true_t60: f64, split_s: f64) -> Self {
        if true_t60 < split_s {
            T60Group::SmallT60
        } else {
            T60Group::LargeT60
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            T60Group::SmallT60 => "small_t60",
            T60Group::LargeT60 => "large_t60",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct T60Pair {
    pub true_t60: f64,
    pub pred_t60: f64,
    pub n_sources: usize,
}

impl T60Pair {
    pub fn ratio(&self) -> f64 {
        self.pred_t60 / self.true_t60
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct T60RatioReport {
    pub group: T60Group,
    pub n_sources: usize,
    pub count: usize,
    pub pct_within_10: f64,
    pub mean_ratio: f64,
    pub median_ratio: f64,
}

pub fn within_tolerance(ratio: f64) -> bool {
    (RATIO_TOLERANCE.0..=RATIO_TOLERANCE.1).contains(&ratio)
}

/// One report per (group, source count) that has pairs, ordered by group
/// then count.
pub fn t60_ratio_report(pairs: &[T60Pair], split_s: f64) -> Result<Vec<T60RatioReport>> {
    let mut groups: BTreeMap<(T60Group, usize), Vec<f64>> = BTreeMap::new();
    for p in pairs {
        if !(p.true_t60 > 0.0 && p.true_t60.is_finite()) {
            return Err(Error::InvalidSignal(format!(
                "true T60 must be positive, got {}",
                p.true_t60
            )));
        }
        groups
            .entry((T60Group::of(p.true_t60, split_s), p.n_sources))
            .or_default()
            .push(p.ratio());
    }
    Ok(groups
        .into_iter()
        .map(|((group, n_sources), mut ratios)| {
            ratios.sort_by(f64::total_cmp);
            let count = ratios.len();
            let hits = ratios.iter().filter(|&&r| within_tolerance(r)).count();
            let mid = count / 2;
            let median_ratio = if count % 2 == 1 {
                ratios[mid]
            } else {
                0.5 * (ratios[mid - 1] + ratios[mid])
            };
            T60RatioReport {
                group,
                n_sources,
                count,
                pct_within_10: 100.0 * hits as f64 / count as f64,
                mean_ratio: ratios.iter().sum::<f64>() / count as f64,
                median_ratio,
            }
        })
        .collect())
}
