//! CSV tables and the JSON run manifest.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::Value as Json;

use crate::config::{RunConfig, Value};
use crate::CliError;

/// A CSV table held in memory until the run finishes.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub name: &'static str,
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(name: &'static str, header: &[&'static str]) -> Self {
        Table {
            name,
            header: header.to_vec(),
            rows: Vec::new(),
        }
    }

    pub fn push<I, S>(&mut self, row: I)
    where
        I: IntoIterator<Item = S>,
        S: ToString,
    {
        let row: Vec<String> = row.into_iter().map(|c| c.to_string()).collect();
        debug_assert_eq!(row.len(), self.header.len(), "row width for {}", self.name);
        self.rows.push(row);
    }

    pub fn write(&self, dir: &Path) -> Result<PathBuf, CliError> {
        let path = dir.join(self.name);
        let mut w = csv::Writer::from_path(&path)?;
        w.write_record(&self.header)?;
        for r in &self.rows {
            w.write_record(r)?;
        }
        w.flush()?;
        Ok(path)
    }
}

/// Formats an optional number, leaving the cell empty for `None`.
pub fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: String,
    pub pass: bool,
    pub value: f64,
    pub threshold: f64,
    pub detail: String,
}

impl Check {
    /// Passes when `value ≤ threshold`.
    pub fn at_most(name: impl Into<String>, value: f64, threshold: f64, detail: impl Into<String>) -> Self {
        Check {
            name: name.into(),
            pass: value <= threshold,
            value,
            threshold,
            detail: detail.into(),
        }
    }

    pub fn flag(name: impl Into<String>, pass: bool, detail: impl Into<String>) -> Self {
        Check {
            name: name.into(),
            pass,
            value: if pass { 1.0 } else { 0.0 },
            threshold: 1.0,
            detail: detail.into(),
        }
    }
}

#[derive(Debug, Serialize)]
pub struct Manifest<'a> {
    pub timestamp: String,
    pub version: &'static str,
    pub command: &'static str,
    pub config: &'a std::collections::BTreeMap<&'static str, Value>,
    pub seed: u64,
    pub lattice: Option<Json>,
    pub checks: &'a [Check],
    pub all_checks_pass: bool,
    pub results: Json,
    pub files: Vec<String>,
    pub error: Option<String>,
    pub exit_code: i32,
    pub wall_time_s: f64,
}

impl<'a> Manifest<'a> {
    pub fn new(cfg: &'a RunConfig, checks: &'a [Check]) -> Self {
        Manifest {
            timestamp: chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Millis, true),
            version: env!("CARGO_PKG_VERSION"),
            command: cfg.command.as_str(),
            config: cfg.resolved(),
            seed: cfg.seed(),
            lattice: None,
            checks,
            all_checks_pass: checks.iter().all(|c| c.pass),
            results: Json::Null,
            files: Vec::new(),
            error: None,
            exit_code: 0,
            wall_time_s: 0.0,
        }
    }

    pub fn write(&self, dir: &Path) -> Result<(), CliError> {
        let text = serde_json::to_string_pretty(self)?;
        fs::write(dir.join("manifest.json"), text + "\n")?;
        Ok(())
    }
}
