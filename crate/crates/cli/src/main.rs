use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use pfstab::io::{run_config_file, Command, Overrides};

#[derive(Debug, Parser)]
#[command(name = "pfstab", version, about = "Bootstrap particle filter stability experiments")]
struct Cli {
    /// simulate, filter, variance, stability, lp, forgetting, loglik-rate or verify
    #[arg(value_parser = parse_command)]
    command: Command,

    /// Experiment config (TOML).
    #[arg(long)]
    config: PathBuf,

    /// Output directory; overrides `output_dir` in the config.
    #[arg(long)]
    out: Option<PathBuf>,

    /// Base seed; overrides `base_seed` in the config.
    #[arg(long)]
    seed: Option<u64>,

    /// Worker threads for replicate ensembles (default: all cores).
    #[arg(long, value_parser = clap::value_parser!(u16).range(1..))]
    threads: Option<u16>,
}

fn parse_command(s: &str) -> Result<Command, String> {
    s.parse().map_err(|e: pfstab::Error| e.to_string())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(k) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(k as usize).build_global() {
            eprintln!("error: cannot start {k} threads: {e}");
            return ExitCode::from(2);
        }
    }
    let overrides = Overrides {
        output_dir: cli.out,
        base_seed: cli.seed,
    };
    match run_config_file(&cli.config, Some(cli.command), &overrides) {
        Ok(outcome) => {
            let verdict = if outcome.pass { "PASS" } else { "FAIL" };
            println!("{} {verdict}: {}", outcome.command, outcome.summary);
            for f in &outcome.files {
                println!("  wrote {}", f.display());
            }
            ExitCode::from(outcome.exit_code() as u8)
        }
        Err(failure) => {
            eprintln!("error: {failure}");
            ExitCode::from(failure.exit_code() as u8)
        }
    }
}
