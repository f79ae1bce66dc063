//! Config-driven runner for the `heatgauge` binary.

pub mod config;
pub mod output;

mod commands;

use std::fs;
use std::time::Instant;

use config::{ConfigError, RunConfig};
use output::Manifest;

/// Operational failures. A failed scientific check is not an error.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config: {0}")]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Core(#[from] heatgauge_core::Error),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("{0}")]
    Invalid(String),
}

pub const EXIT_OK: i32 = 0;
pub const EXIT_ERROR: i32 = 1;
pub const EXIT_CHECK_FAILED: i32 = 2;

/// Runs one command, writes its CSVs and `manifest.json` into the output
/// directory and returns the process exit code.
pub fn execute(cfg: &RunConfig) -> i32 {
    let start = Instant::now();
    let dir = cfg.out();
    if let Err(e) = fs::create_dir_all(&dir) {
        eprintln!("error: cannot create {}: {e}", dir.display());
        return EXIT_ERROR;
    }
    let outcome = commands::dispatch(cfg).and_then(|rep| {
        let mut files = Vec::new();
        for t in &rep.tables {
            t.write(&dir)?;
            files.push(t.name.to_string());
        }
        Ok((rep, files))
    });
    let empty = Vec::new();
    let (mut manifest, code) = match &outcome {
        Ok((rep, files)) => {
            let mut m = Manifest::new(cfg, &rep.checks);
            m.lattice = rep.lattice.clone();
            m.results = rep.results.clone();
            m.files = files.clone();
            let code = if m.all_checks_pass { EXIT_OK } else { EXIT_CHECK_FAILED };
            (m, code)
        }
        Err(e) => {
            eprintln!("error: {e}");
            let mut m = Manifest::new(cfg, &empty);
            m.all_checks_pass = false;
            m.error = Some(e.to_string());
            (m, EXIT_ERROR)
        }
    };
    if let Ok((rep, _)) = &outcome {
        for c in rep.checks.iter().filter(|c| !c.pass) {
            eprintln!("check failed: {} (value {}, threshold {}) {}", c.name, c.value, c.threshold, c.detail);
        }
    }
    manifest.exit_code = code;
    manifest.wall_time_s = start.elapsed().as_secs_f64();
    match manifest.write(&dir) {
        Ok(()) => code,
        Err(e) => {
            eprintln!("error: cannot write manifest: {e}");
            EXIT_ERROR
        }
    }
}
