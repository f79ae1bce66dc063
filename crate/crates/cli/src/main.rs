use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use heatgauge_cli::config::parse_config;
use heatgauge_cli::{execute, EXIT_ERROR};

#[derive(Parser)]
#[command(name = "heatgauge", version, about = "Heat-kernel lattice gauge theory checks")]
struct Cli {
    /// Run configuration (`key = value` lines)
    config: PathBuf,
    /// Output directory, overrides `out`
    #[arg(long)]
    out: Option<PathBuf>,
    /// RNG seed, overrides `seed`
    #[arg(long)]
    seed: Option<u64>,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_ERROR } else { 0 };
            let _ = e.print();
            return ExitCode::from(code as u8);
        }
    };
    let text = match std::fs::read_to_string(&cli.config) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("error: cannot read {}: {e}", cli.config.display());
            return ExitCode::from(EXIT_ERROR as u8);
        }
    };
    let mut cfg = match parse_config(&text) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {}: {e}", cli.config.display());
            return ExitCode::from(EXIT_ERROR as u8);
        }
    };
    cfg.override_with(cli.out, cli.seed);
    ExitCode::from(execute(&cfg) as u8)
}
