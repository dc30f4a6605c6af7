use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use reverbforge::eval::DEFAULT_T60_SPLIT_S;
use reverbforge::loss::MultiResConfig;
use reverbforge::wav::WavFormat;

use crate::{CliError, Result};

#[derive(Debug, Parser)]
#[command(
    name = "reverbforge",
    version,
    about = "Room impulse response synthesis and evaluation toolkit"
)]
pub struct Cli {
    /// Worker threads (default: one per core).
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate synthetic rooms: RIR WAVs plus one manifest per room.
    Synth(SynthArgs),
    /// Scale rooms so their representative RIR peaks at 0.5.
    Normalize(NormalizeArgs),
    /// Build a mixture suite from normalized rooms and speech.
    Mix(MixArgs),
    /// Score an estimator on a mixture suite.
    Evaluate(EvaluateArgs),
    /// Fit the filtered-noise model to one RIR.
    Fit(FitArgs),
    /// Acoustic parameters of one RIR as JSON.
    Metrics(MetricsArgs),
    /// Turn a predicted mono RIR into a binaural one using an HRIR.
    Binauralize(BinauralizeArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, ValueEnum)]
pub enum SampleFormat {
    #[default]
    F32,
    Pcm16,
    Pcm24,
}

impl From<SampleFormat> for WavFormat {
    fn from(f: SampleFormat) -> Self {
        match f {
            SampleFormat::F32 => WavFormat::Float32,
            SampleFormat::Pcm16 => WavFormat::Pcm16,
            SampleFormat::Pcm24 => WavFormat::Pcm24,
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct SynthArgs {
    #[arg(long, default_value_t = 10)]
    pub rooms: usize,
    /// RIRs per room, 4 to 14.
    #[arg(long, default_value_t = 6)]
    pub sources: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub t60_min: Option<f64>,
    #[arg(long)]
    pub t60_max: Option<f64>,
    /// Also normalize each room before writing it.
    #[arg(long)]
    pub normalize: bool,
    #[arg(long, value_enum, default_value_t)]
    pub format: SampleFormat,
}

#[derive(Debug, Clone, Args)]
pub struct NormalizeArgs {
    /// Room manifests, room directories, or directories of rooms.
    #[arg(required = true)]
    pub rooms: Vec<PathBuf>,
    /// Write each room to `<out>/<room_id>` instead of in place.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t)]
    pub format: SampleFormat,
}

#[derive(Debug, Clone, Args)]
pub struct MixArgs {
    /// Normalized room manifests or directories holding them.
    #[arg(long, required = true, num_args = 1..)]
    pub rooms: Vec<PathBuf>,
    /// Directory of mono 48 kHz speech WAVs; synthetic speech if absent.
    #[arg(long)]
    pub speech: Option<PathBuf>,
    /// Examples per room and source count.
    #[arg(long, default_value_t = 10)]
    pub per_count: usize,
    /// Source counts, comma separated.
    #[arg(long, value_delimiter = ',', default_value = "1,2,3,4,5,6")]
    pub sources: Vec<usize>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, value_enum, default_value_t)]
    pub format: SampleFormat,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Estimator {
    /// The target itself; every loss is zero.
    Identity,
    /// Filtered-noise model fitted to the target.
    OracleFit,
    /// Band decay rates read blindly off the reverberant input.
    BlindBaseline,
    /// `<predictions>/<name>_pred.wav` for each `<name>_input.wav`.
    External,
}

#[derive(Debug, Clone, Args)]
pub struct EvaluateArgs {
    /// Suite manifest written by `mix`.
    #[arg(long)]
    pub suite: PathBuf,
    #[arg(long, value_enum)]
    pub estimator: Estimator,
    /// Prediction directory for the external estimator.
    #[arg(long)]
    pub predictions: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
    /// Loss evaluations per fit (oracle-fit).
    #[arg(long, default_value_t = 2000)]
    pub budget: usize,
    #[command(flatten)]
    pub loss: LossArgs,
    #[arg(long, default_value_t = DEFAULT_T60_SPLIT_S)]
    pub split_t60: f64,
    /// Decoder noise seed for model-based estimators.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Clone, Args)]
pub struct LossArgs {
    /// STFT loss FFT sizes, comma separated.
    #[arg(long, value_delimiter = ',', default_value = "512,1024,2048")]
    pub resolutions: Vec<usize>,
}

impl LossArgs {
    pub fn config(&self) -> Result<MultiResConfig> {
        Ok(MultiResConfig::from_fft_sizes(&self.resolutions)?)
    }
}

#[derive(Debug, Clone, Args)]
pub struct FitArgs {
    /// Target RIR WAV (mono, 48 kHz).
    #[arg(long)]
    pub target: PathBuf,
    #[arg(long, default_value_t = 2000)]
    pub budget: usize,
    #[command(flatten)]
    pub loss: LossArgs,
    /// Decoder noise seed.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Directory for params.json, fitted.wav and loss_trace.csv.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct MetricsArgs {
    /// RIR WAV (mono).
    #[arg(long)]
    pub input: PathBuf,
    /// Output JSON file; standard output if absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct BinauralizeArgs {
    /// Predicted mono RIR, peak 0.5.
    #[arg(long)]
    pub pred: PathBuf,
    /// Two-channel HRIR WAV, shorter than 50 ms.
    #[arg(long)]
    pub hrir: PathBuf,
    /// Rescale the prediction to peak 0.5 first.
    #[arg(long)]
    pub rescale: bool,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, value_enum, default_value_t)]
    pub format: SampleFormat,
}

pub(crate) fn require(cond: bool, msg: impl FnOnce() -> String) -> Result<()> {
    if cond {
        Ok(())
    } else {
        Err(CliError::Usage(msg()))
    }
}
