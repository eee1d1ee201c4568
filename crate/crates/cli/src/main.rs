use std::path::PathBuf;
use std::process::ExitCode;

use c2p2_cli::{parse_config, run, set_threads, Command, Overrides};
use clap::Parser;

/// Collective up/down prediction experiments.
#[derive(Parser)]
#[command(name = "c2p2", version)]
struct Args {
    #[arg(value_enum)]
    command: Command,
    /// Experiment config (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Replace the root seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Replace the output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads; defaults to one per core.
    #[arg(long)]
    threads: Option<usize>,
}

fn main() -> ExitCode {
    let args = Args::parse();
    let overrides = Overrides {
        seed: args.seed,
        output_dir: args.out,
    };
    let result = parse_config(&args.config, &overrides).and_then(|config| {
        if let Some(t) = args.threads {
            set_threads(t)?;
        }
        run(args.command, &config)
    });
    match result {
        Ok(outcome) => {
            println!("{}", outcome.run_dir.display());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("{}", e.record());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
