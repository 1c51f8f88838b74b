use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use opd_unravel::harness::{self, Command, ExperimentConfig};

/// Trajectory unravelings of correlated open-system dynamics.
#[derive(Parser, Debug)]
#[command(version, about)]
struct Cli {
    #[arg(value_enum)]
    command: Command,
    /// Experiment configuration (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Overrides the configured seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory; defaults to the configured one.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads. Results do not depend on it.
    #[arg(long, env = "OPD_UNRAVEL_THREADS")]
    threads: Option<usize>,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    let code = match execute(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            harness::exit_code(&e)
        }
    };
    ExitCode::from(code as u8)
}

fn execute(cli: &Cli) -> opd_unravel::Result<i32> {
    let mut cfg = ExperimentConfig::from_path(&cli.config)?;
    if let Some(seed) = cli.seed {
        cfg.unravel.seed = seed;
    }
    if cli.threads.is_some() {
        cfg.unravel.threads = cli.threads;
    }
    cfg.validate()?;
    let out = cli.out.clone().unwrap_or_else(|| cfg.resolve(&cfg.output.dir));
    harness::run(cli.command, &cfg, &out)
}
