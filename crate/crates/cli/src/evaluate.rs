use std::path::{Path, PathBuf};

use log::{info, warn};
use rayon::prelude::*;
use reverbforge::eval::{loss_suite, t60_ratio_report, LossSuite};
use reverbforge::fns::{blind_predict, decode, fit_to_rir, BlindDecayConfig, FitConfig};
use reverbforge::loss::MultiResConfig;
use reverbforge::manifest::create_dir;
use reverbforge::mixture::{read_suite_manifest, SuiteEntry};
use reverbforge::wav::read_wav;
use reverbforge::Signal64;

use crate::args::{require, Estimator, EvaluateArgs};
use crate::report::{
    summarize, t60_pairs, write_csv, write_ratio_csv, EvalRecord, RECORDS_FILE, SUMMARY_FILE,
    T60_RATIO_FILE,
};
use crate::Result;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EvalOutputs {
    pub records: PathBuf,
    pub summary: PathBuf,
    pub t60_ratio: PathBuf,
}

/// `ex_00012_input.wav` → `ex_00012_pred.wav`.
pub fn prediction_name(input_wav: &str) -> String {
    let stem = input_wav.strip_suffix(".wav").unwrap_or(input_wav);
    format!("{}_pred.wav", stem.strip_suffix("_input").unwrap_or(stem))
}

struct Scorer<'a> {
    base: &'a Path,
    args: &'a EvaluateArgs,
    mcfg: MultiResConfig,
}

impl Scorer<'_> {
    fn mono(&self, name: &str) -> reverbforge::Result<Signal64> {
        read_wav(self.base.join(name))?.into_mono()
    }

    fn predict(&self, e: &SuiteEntry, target: &Signal64) -> reverbforge::Result<Signal64> {
        let a = self.args;
        match a.estimator {
            Estimator::Identity => Ok(target.clone()),
            Estimator::OracleFit => {
                let cfg = FitConfig {
                    budget: a.budget,
                    noise_seed: a.seed,
                    ..FitConfig::default()
                };
                decode(&fit_to_rir(target, &self.mcfg, &cfg)?.params)
            }
            Estimator::BlindBaseline => {
                let input = self.mono(&e.input_wav)?;
                decode(&blind_predict(
                    &input,
                    &BlindDecayConfig::default(),
                    a.seed,
                )?)
            }
            Estimator::External => {
                let dir = a.predictions.as_deref().expect("checked before scoring");
                read_wav(dir.join(prediction_name(&e.input_wav)))?.into_mono()
            }
        }
    }

    fn score(&self, index: usize, e: &SuiteEntry) -> EvalRecord {
        let result: reverbforge::Result<LossSuite> = self
            .mono(&e.target_wav)
            .and_then(|target| loss_suite(&self.predict(e, &target)?, &target, &self.mcfg));
        let mut r = EvalRecord {
            index,
            input_wav: e.input_wav.clone(),
            room_id: e.room_id.clone(),
            n_sources: e.n_sources,
            stft_loss: None,
            t60_sq_err: None,
            drr_sq_err: None,
            pred_t60: None,
            true_t60: None,
            error: String::new(),
        };
        match result {
            Ok(s) => {
                r.stft_loss = Some(s.stft_loss);
                r.t60_sq_err = s.t60_sq_err;
                r.drr_sq_err = s.drr_sq_err;
                r.pred_t60 = s.pred_t60;
                r.true_t60 = s.true_t60;
            }
            Err(err) => {
                warn!("example {index} ({}): {err}", e.input_wav);
                r.error = err.to_string();
            }
        }
        r
    }
}

/// Scores every suite example and writes `records.csv`, `summary.csv` and
/// `t60_ratio.csv` under `--out`. Rows follow suite order whatever the
/// thread count.
pub fn evaluate(a: &EvaluateArgs) -> Result<EvalOutputs> {
    let mcfg = a.loss.config()?;
    require(a.split_t60 > 0.0 && a.split_t60.is_finite(), || {
        format!("--split-t60 must be positive, got {}", a.split_t60)
    })?;
    require(
        a.estimator != Estimator::External || a.predictions.is_some(),
        || "the external estimator needs --predictions".into(),
    )?;
    require(a.budget > 0, || "--budget must be positive".into())?;
    let entries = read_suite_manifest(&a.suite)?;
    let base = a.suite.parent().unwrap_or(Path::new("."));
    let scorer = Scorer {
        base,
        args: a,
        mcfg,
    };
    info!("scoring {} examples with {:?}", entries.len(), a.estimator);
    let records: Vec<EvalRecord> = entries
        .par_iter()
        .enumerate()
        .map(|(i, e)| scorer.score(i, e))
        .collect();

    create_dir(&a.out)?;
    let out = EvalOutputs {
        records: a.out.join(RECORDS_FILE),
        summary: a.out.join(SUMMARY_FILE),
        t60_ratio: a.out.join(T60_RATIO_FILE),
    };
    write_csv(&out.records, &records)?;
    write_csv(&out.summary, &summarize(&records))?;
    write_ratio_csv(
        &out.t60_ratio,
        &t60_ratio_report(&t60_pairs(&records), a.split_t60)?,
    )?;
    for p in [&out.records, &out.summary, &out.t60_ratio] {
        println!("{}", p.display());
    }
    Ok(out)
}
