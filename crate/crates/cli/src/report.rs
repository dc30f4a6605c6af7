//! CSV reports of an evaluation run.

use std::path::Path;

use reverbforge::eval::{T60Pair, T60RatioReport};
use reverbforge::mixture::MAX_SOURCES;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::{csv_err, io_err, Result};

pub const RECORDS_FILE: &str = "records.csv";
pub const SUMMARY_FILE: &str = "summary.csv";
pub const T60_RATIO_FILE: &str = "t60_ratio.csv";

/// Label of the summary row that pools every source count.
pub const ALL_ROW: &str = "all";

/// One scored example. Failed examples carry a message in `error` and no
/// losses.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalRecord {
    pub index: usize,
    pub input_wav: String,
    pub room_id: String,
    pub n_sources: usize,
    pub stft_loss: Option<f64>,
    pub t60_sq_err: Option<f64>,
    pub drr_sq_err: Option<f64>,
    pub pred_t60: Option<f64>,
    pub true_t60: Option<f64>,
    pub error: String,
}

impl EvalRecord {
    pub fn is_ok(&self) -> bool {
        self.error.is_empty()
    }
}

/// Mean losses over the scored records of one source count (or all).
/// `t60_loss` and `drr_loss` are mean squared errors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub n_sources: String,
    pub count: usize,
    pub errors: usize,
    pub stft_loss: Option<f64>,
    pub t60_loss: Option<f64>,
    pub t60_count: usize,
    pub drr_loss: Option<f64>,
    pub drr_count: usize,
}

fn mean(values: impl Iterator<Item = f64>) -> (Option<f64>, usize) {
    let (sum, n) = values.fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    ((n > 0).then(|| sum / n as f64), n)
}

fn summary_row(label: String, records: &[&EvalRecord]) -> SummaryRow {
    let ok: Vec<&EvalRecord> = records.iter().copied().filter(|r| r.is_ok()).collect();
    let (stft_loss, count) = mean(ok.iter().filter_map(|r| r.stft_loss));
    let (t60_loss, t60_count) = mean(ok.iter().filter_map(|r| r.t60_sq_err));
    let (drr_loss, drr_count) = mean(ok.iter().filter_map(|r| r.drr_sq_err));
    SummaryRow {
        n_sources: label,
        count,
        errors: records.len() - ok.len(),
        stft_loss,
        t60_loss,
        t60_count,
        drr_loss,
        drr_count,
    }
}

/// One row per source count 1 to 6, then the pooled row.
pub fn summarize(records: &[EvalRecord]) -> Vec<SummaryRow> {
    let mut rows: Vec<SummaryRow> = (1..=MAX_SOURCES)
        .map(|k| {
            let sel: Vec<&EvalRecord> = records.iter().filter(|r| r.n_sources == k).collect();
            summary_row(k.to_string(), &sel)
        })
        .collect();
    rows.push(summary_row(
        ALL_ROW.into(),
        &records.iter().collect::<Vec<_>>(),
    ));
    rows
}

/// T60 pairs of the scored records that have both values.
pub fn t60_pairs(records: &[EvalRecord]) -> Vec<T60Pair> {
    records
        .iter()
        .filter(|r| r.is_ok())
        .filter_map(|r| {
            Some(T60Pair {
                true_t60: r.true_t60?,
                pred_t60: r.pred_t60?,
                n_sources: r.n_sources,
            })
        })
        .collect()
}

pub fn write_csv<S: Serialize>(path: &Path, rows: &[S]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(csv_err(path))?;
    for r in rows {
        w.serialize(r).map_err(csv_err(path))?;
    }
    w.flush().map_err(io_err(path))
}

/// A CSV with a header even when there are no rows.
pub fn write_ratio_csv(path: &Path, rows: &[T60RatioReport]) -> Result<()> {
    if rows.is_empty() {
        let header = "group,n_sources,count,pct_within_10,mean_ratio,median_ratio\n";
        return std::fs::write(path, header).map_err(io_err(path));
    }
    write_csv(path, rows)
}

pub fn read_csv<D: DeserializeOwned>(path: &Path) -> Result<Vec<D>> {
    let mut r = csv::Reader::from_path(path).map_err(csv_err(path))?;
    r.deserialize()
        .map(|row| row.map_err(csv_err(path)))
        .collect()
}
