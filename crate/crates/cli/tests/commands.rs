use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command as Process;

use clap::Parser;
use reverbforge::manifest::{load_room_set, RoomManifest};
use reverbforge::mixture::read_suite_manifest;
use reverbforge::signal::{Signal, StereoSignal, SAMPLE_RATE};
use reverbforge::wav::{read_wav, write_stereo_wav, WavFormat};
use reverbforge::RoomRirSet64;
use reverbforge_cli::report::{read_csv, EvalRecord, SummaryRow};
use reverbforge_cli::{evaluate, run, Cli, Command};

fn cli(args: &[&str]) -> reverbforge_cli::Result<()> {
    run(Cli::try_parse_from(std::iter::once("reverbforge").chain(args.iter().copied())).unwrap())
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn files_with_ext(dir: &Path, ext: &str) -> Vec<PathBuf> {
    let mut out = Vec::new();
    for e in fs::read_dir(dir).unwrap() {
        let path = e.unwrap().path();
        if path.is_dir() {
            out.extend(files_with_ext(&path, ext));
        } else if path.extension().is_some_and(|x| x == ext) {
            out.push(path);
        }
    }
    out.sort();
    out
}

/// Three normalized rooms and a one-per-count suite in `dir`.
fn small_suite(dir: &Path) -> PathBuf {
    let rooms = dir.join("rooms");
    cli(&[
        "synth",
        "--rooms",
        "3",
        "--sources",
        "6",
        "--seed",
        "5",
        "--normalize",
        "--out",
        p(&rooms),
    ])
    .unwrap();
    let suite = dir.join("suite");
    cli(&[
        "mix",
        "--rooms",
        p(&rooms),
        "--per-count",
        "1",
        "--seed",
        "2",
        "--out",
        p(&suite),
    ])
    .unwrap();
    suite.join("suite.json")
}

#[test]
fn synth_counts_and_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    for out in [&a, &b] {
        cli(&[
            "synth",
            "--rooms",
            "3",
            "--sources",
            "4",
            "--seed",
            "9",
            "--out",
            p(out),
        ])
        .unwrap();
    }
    assert_eq!(files_with_ext(&a, "wav").len(), 12);
    let manifests = files_with_ext(&a, "json");
    assert_eq!(manifests.len(), 3);
    for m in &manifests {
        let twin = b.join(m.strip_prefix(&a).unwrap());
        assert_eq!(fs::read(m).unwrap(), fs::read(twin).unwrap());
    }
}

#[test]
fn synth_rejects_bad_t60_range_before_writing() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("never");
    let err = cli(&[
        "synth",
        "--rooms",
        "2",
        "--t60-min",
        "1.2",
        "--t60-max",
        "0.4",
        "--out",
        p(&out),
    ])
    .unwrap_err();
    assert_eq!(err.exit_code(), 2);
    assert!(!out.exists());
}

#[test]
fn normalize_updates_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let rooms = dir.path().join("rooms");
    cli(&[
        "synth",
        "--rooms",
        "1",
        "--sources",
        "5",
        "--out",
        p(&rooms),
    ])
    .unwrap();
    let manifest = rooms.join("room_000/manifest.json");
    let before: RoomManifest = reverbforge::manifest::read_json(&manifest).unwrap();
    assert_eq!(before.normalization_factor, None);
    cli(&["normalize", p(&manifest)]).unwrap();
    let after: RoomManifest = reverbforge::manifest::read_json(&manifest).unwrap();
    assert!(after.normalization_factor.unwrap() > 0.0);
    assert!(after.method.is_some());
    assert_eq!(after.rirs.iter().filter(|r| r.is_representative).count(), 1);
    let set: RoomRirSet64 = load_room_set(&manifest).unwrap();
    assert!((set.representative().unwrap().signal.peak() - 0.5).abs() < 1e-7);
}

#[test]
fn metrics_json_schema() {
    let dir = tempfile::tempdir().unwrap();
    let rooms = dir.path().join("rooms");
    cli(&[
        "synth",
        "--rooms",
        "1",
        "--sources",
        "4",
        "--out",
        p(&rooms),
    ])
    .unwrap();
    let out = dir.path().join("m.json");
    cli(&[
        "metrics",
        "--input",
        p(&rooms.join("room_000/rir_00.wav")),
        "--out",
        p(&out),
    ])
    .unwrap();
    let v: serde_json::Value = serde_json::from_str(&fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(v["per_band"].as_array().unwrap().len(), 6);
    assert!(v["avg_500_1000"]["t30"].is_number());
    for key in ["t30", "edt", "c50", "drr"] {
        let x = &v["avg_500_1000"][key];
        assert!(x.is_number() || x.is_null(), "{key}");
    }
}

#[test]
fn fit_writes_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let suite = small_suite(dir.path());
    let target = suite
        .parent()
        .unwrap()
        .join(&read_suite_manifest(&suite).unwrap()[0].target_wav);
    let out = dir.path().join("fit");
    cli(&[
        "fit",
        "--target",
        p(&target),
        "--budget",
        "500",
        "--out",
        p(&out),
    ])
    .unwrap();
    for f in ["params.json", "fitted.wav", "loss_trace.csv"] {
        assert!(out.join(f).is_file(), "{f}");
    }
    let fitted = read_wav::<f64>(out.join("fitted.wav"))
        .unwrap()
        .into_mono()
        .unwrap();
    assert_eq!(fitted.len(), 48_000);
    let trace = fs::read_to_string(out.join("loss_trace.csv")).unwrap();
    let losses: Vec<f64> = trace
        .lines()
        .skip(1)
        .map(|l| l.split(',').nth(1).unwrap().parse().unwrap())
        .collect();
    assert!(losses.windows(2).all(|w| w[1] <= w[0]));
}

#[test]
fn evaluate_identity_and_summary_consistency() {
    let dir = tempfile::tempdir().unwrap();
    let suite = small_suite(dir.path());
    let out = dir.path().join("eval");
    let parsed = Cli::try_parse_from([
        "reverbforge",
        "evaluate",
        "--suite",
        p(&suite),
        "--estimator",
        "identity",
        "--out",
        p(&out),
    ])
    .unwrap();
    let Command::Evaluate(args) = parsed.command else {
        unreachable!()
    };
    let outputs = evaluate::evaluate(&args).unwrap();
    let records: Vec<EvalRecord> = read_csv(&outputs.records).unwrap();
    let summary: Vec<SummaryRow> = read_csv(&outputs.summary).unwrap();
    assert_eq!(records.len(), 18);
    assert_eq!(summary.len(), 7);
    for row in &summary {
        let sel: Vec<&EvalRecord> = records
            .iter()
            .filter(|r| row.n_sources == "all" || r.n_sources.to_string() == row.n_sources)
            .collect();
        let mean = sel.iter().map(|r| r.stft_loss.unwrap()).sum::<f64>() / sel.len() as f64;
        assert!((mean - row.stft_loss.unwrap()).abs() <= 1e-12);
        assert_eq!(row.stft_loss, Some(0.0));
    }
}

#[test]
fn evaluate_order_does_not_depend_on_jobs() {
    let dir = tempfile::tempdir().unwrap();
    let suite = small_suite(dir.path());
    let mut texts = Vec::new();
    for jobs in ["1", "3"] {
        let out = dir.path().join(format!("eval{jobs}"));
        cli(&[
            "--jobs",
            jobs,
            "evaluate",
            "--suite",
            p(&suite),
            "--estimator",
            "blind-baseline",
            "--out",
            p(&out),
        ])
        .unwrap();
        texts.push(fs::read(out.join("records.csv")).unwrap());
    }
    assert_eq!(texts[0], texts[1]);
}

#[test]
fn missing_predictions_are_listed() {
    let dir = tempfile::tempdir().unwrap();
    let suite = small_suite(dir.path());
    let preds = dir.path().join("preds");
    fs::create_dir(&preds).unwrap();
    // Only the first example gets a prediction: its own target.
    let entries = read_suite_manifest(&suite).unwrap();
    fs::copy(
        suite.parent().unwrap().join(&entries[0].target_wav),
        preds.join("ex_00000_pred.wav"),
    )
    .unwrap();
    let out = dir.path().join("eval");
    cli(&[
        "evaluate",
        "--suite",
        p(&suite),
        "--estimator",
        "external",
        "--predictions",
        p(&preds),
        "--out",
        p(&out),
    ])
    .unwrap();
    let records: Vec<EvalRecord> = read_csv(&out.join("records.csv")).unwrap();
    assert!(records[0].is_ok());
    assert!(records[1..]
        .iter()
        .all(|r| !r.is_ok() && r.stft_loss.is_none()));
    let summary: Vec<SummaryRow> = read_csv(&out.join("summary.csv")).unwrap();
    let all = summary.last().unwrap();
    assert_eq!((all.count, all.errors), (1, 17));
    assert_eq!(all.stft_loss, Some(0.0));
}

#[test]
fn binauralize_writes_stereo() {
    let dir = tempfile::tempdir().unwrap();
    let rooms = dir.path().join("rooms");
    cli(&[
        "synth",
        "--rooms",
        "1",
        "--sources",
        "4",
        "--normalize",
        "--out",
        p(&rooms),
    ])
    .unwrap();
    let hrir_path = dir.path().join("hrir.wav");
    let mut l = vec![0.0; 200];
    let mut r = vec![0.0; 200];
    l[5] = 0.6;
    r[20] = 0.4;
    let hrir = StereoSignal::new(
        Signal::new(l, SAMPLE_RATE).unwrap(),
        Signal::new(r, SAMPLE_RATE).unwrap(),
    )
    .unwrap();
    write_stereo_wav(&hrir_path, &hrir, WavFormat::Float32).unwrap();
    let out = dir.path().join("brir.wav");
    let pred = rooms.join("room_000/rir_00.wav");
    cli(&[
        "binauralize",
        "--pred",
        p(&pred),
        "--hrir",
        p(&hrir_path),
        "--out",
        p(&out),
    ])
    .unwrap();
    let brir = read_wav::<f64>(&out).unwrap().into_stereo().unwrap();
    assert_eq!(brir.len(), 48_000);
    assert_eq!(brir.left().samples()[5], f64::from(0.6f32));
}

#[test]
fn binary_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let bin = env!("CARGO_BIN_EXE_reverbforge");
    let status = |args: &[&str]| Process::new(bin).args(args).output().unwrap().status.code();
    assert_eq!(
        status(&[
            "synth",
            "--rooms",
            "1",
            "--sources",
            "2",
            "--out",
            p(dir.path())
        ]),
        Some(2)
    );
    assert_eq!(
        status(&["metrics", "--input", p(&dir.path().join("missing.wav"))]),
        Some(3)
    );
    let silent = dir.path().join("silent.wav");
    reverbforge::wav::write_wav(
        &silent,
        &Signal::<f64>::zeros(48_000, SAMPLE_RATE),
        WavFormat::Float32,
    )
    .unwrap();
    assert_eq!(
        status(&[
            "fit",
            "--target",
            p(&silent),
            "--out",
            p(&dir.path().join("f"))
        ]),
        Some(4)
    );
    assert_eq!(status(&["no-such-command"]), Some(2));
}
