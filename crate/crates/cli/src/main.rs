use clap::Parser;
use reverbforge_cli::{init_logging, run, Cli};

fn main() {
    init_logging();
    if let Err(e) = run(Cli::parse()) {
        eprintln!("error: {e}");
        std::process::exit(e.exit_code());
    }
}
