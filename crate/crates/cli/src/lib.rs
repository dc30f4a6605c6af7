//! Command-line front end for `reverbforge`: dataset synthesis, room
//! normalization, mixture suites, evaluation reports, model fitting,
//! metrics and binaural rendering.

use std::path::{Path, PathBuf};

use thiserror::Error;

pub mod args;
pub mod commands;
pub mod evaluate;
pub mod report;

pub use args::{Cli, Command};

/// Exit codes by error class.
pub const EXIT_VALIDATION: i32 = 2;
pub const EXIT_IO: i32 = 3;
pub const EXIT_NUMERIC: i32 = 4;

/// Environment variable holding the log filter (`env_logger` syntax).
pub const LOG_ENV: &str = "REVERBFORGE_LOG";

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] reverbforge::Error),
    #[error("{0}")]
    Usage(String),
    #[error("{path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("cannot start worker threads: {0}")]
    Threads(#[from] rayon::ThreadPoolBuildError),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        use reverbforge::error::ErrorKind;
        match self {
            CliError::Core(e) => match e.kind() {
                ErrorKind::Validation => EXIT_VALIDATION,
                ErrorKind::Io => EXIT_IO,
                ErrorKind::Numeric => EXIT_NUMERIC,
            },
            CliError::Usage(_) => EXIT_VALIDATION,
            CliError::Csv { .. } | CliError::Io { .. } | CliError::Threads(_) => EXIT_IO,
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;

pub(crate) fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |source| CliError::Io {
        path: path.to_path_buf(),
        source,
    }
}

pub(crate) fn csv_err(path: &Path) -> impl FnOnce(csv::Error) -> CliError + '_ {
    move |source| CliError::Csv {
        path: path.to_path_buf(),
        source,
    }
}

pub fn init_logging() {
    let env = env_logger::Env::new().filter_or(LOG_ENV, "warn");
    // A second initialisation (as in tests) is harmless.
    let _ = env_logger::Builder::from_env(env)
        .format_timestamp(None)
        .try_init();
}

/// Runs a parsed command line on a pool of `--jobs` threads.
pub fn run(cli: Cli) -> Result<()> {
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(jobs) = cli.jobs {
        if jobs == 0 {
            return Err(CliError::Usage("--jobs must be at least 1".into()));
        }
        pool = pool.num_threads(jobs);
    }
    let pool = pool.build()?;
    pool.install(|| match cli.command {
        Command::Synth(a) => commands::synth(&a),
        Command::Normalize(a) => commands::normalize(&a),
        Command::Mix(a) => commands::mix(&a),
        Command::Evaluate(a) => evaluate::evaluate(&a).map(|_| ()),
        Command::Fit(a) => commands::fit(&a),
        Command::Metrics(a) => commands::metrics(&a),
        Command::Binauralize(a) => commands::binauralize(&a),
    })
}
