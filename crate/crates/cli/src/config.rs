//! Flat `key = value` run configuration with `#` comments.

use std::collections::BTreeMap;
use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use serde::Serialize;

use heatgauge_core::{Boundary, GroupKind};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub struct ConfigError {
    pub line: Option<usize>,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.line {
            Some(l) => write!(f, "line {l}: {}", self.message),
            None => f.write_str(&self.message),
        }
    }
}

fn err(line: Option<usize>, message: impl Into<String>) -> ConfigError {
    ConfigError {
        line,
        message: message.into(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    KernelCheck,
    Consistency,
    Sample,
    Wilson,
    Correlator,
    Massgap,
    FwEigenvalue,
    FwScaling,
    Quasipotential,
    ConditionCheck,
}

impl Command {
    pub const ALL: [Command; 10] = [
        Command::KernelCheck,
        Command::Consistency,
        Command::Sample,
        Command::Wilson,
        Command::Correlator,
        Command::Massgap,
        Command::FwEigenvalue,
        Command::FwScaling,
        Command::Quasipotential,
        Command::ConditionCheck,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Command::KernelCheck => "kernel-check",
            Command::Consistency => "consistency",
            Command::Sample => "sample",
            Command::Wilson => "wilson",
            Command::Correlator => "correlator",
            Command::Massgap => "massgap",
            Command::FwEigenvalue => "fw-eigenvalue",
            Command::FwScaling => "fw-scaling",
            Command::Quasipotential => "quasipotential",
            Command::ConditionCheck => "condition-check",
        }
    }
}

impl FromStr for Command {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        Command::ALL
            .into_iter()
            .find(|c| c.as_str() == s)
            .ok_or_else(|| {
                let names: Vec<&str> = Command::ALL.iter().map(|c| c.as_str()).collect();
                format!("unknown command '{s}' (expected one of {})", names.join(", "))
            })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Ty {
    Command,
    Choice(&'static [&'static str]),
    /// Real number; `true` requires it to be strictly positive.
    Real(bool),
    Int(u64),
    Reals,
    Ints(u64),
    Path,
}

struct KeySpec {
    name: &'static str,
    ty: Ty,
    default: Option<&'static str>,
}

const fn key(name: &'static str, ty: Ty, default: &'static str) -> KeySpec {
    KeySpec {
        name,
        ty,
        default: Some(default),
    }
}

const GROUPS: &[&str] = &["circle", "su2"];
const BOUNDARIES: &[&str] = &["open", "periodic"];
const MODELS: &[&str] = &["single_link", "quadrature", "flat", "double_well"];
const DOMAINS: &[&str] = &["ball", "cube"];

const SCHEMA: &[KeySpec] = &[
    KeySpec {
        name: "command",
        ty: Ty::Command,
        default: None,
    },
    key("group", Ty::Choice(GROUPS), "circle"),
    key("beta", Ty::Real(true), "1.0"),
    key("seed", Ty::Int(0), "1"),
    key("out", Ty::Path, "out"),
    // heat kernel
    key("betas", Ty::Reals, "0.05,0.1,0.5,1,2"),
    key("grid_points", Ty::Int(8), "1024"),
    key("pairs", Ty::Int(1), "20"),
    // lattice and consistency
    key("extents", Ty::Ints(2), "4,4"),
    key("boundary", Ty::Choice(BOUNDARIES), "periodic"),
    key("tol", Ty::Real(true), "1e-12"),
    key("n_samples", Ty::Int(0), "100000"),
    // Monte Carlo
    key("n_therm", Ty::Int(0), "500"),
    key("n_measure", Ty::Int(20), "10000"),
    key("measure_every", Ty::Int(1), "1"),
    key("n_chains", Ty::Int(1), "4"),
    key("proposal_width", Ty::Real(true), "1.0"),
    key("r", Ty::Int(1), "1"),
    key("t", Ty::Int(1), "1"),
    key("irrep", Ty::Int(0), "1"),
    key("t_max", Ty::Int(1), "2"),
    // ground-state diffusion
    key("model", Ty::Choice(MODELS), "single_link"),
    key("lx", Ty::Int(2), "3"),
    key("lt", Ty::Int(2), "3"),
    key("resolution", Ty::Int(16), "256"),
    key("flat_dim", Ty::Int(1), "1"),
    key("well", Ty::Real(true), "1.0"),
    key("g", Ty::Real(true), "0.6"),
    key("g_list", Ty::Reals, "0.35,0.4,0.45,0.5,0.6,0.7"),
    key("radius", Ty::Real(true), "1.0"),
    key("domain", Ty::Choice(DOMAINS), "ball"),
    key("dt", Ty::Real(true), "0.001"),
    key("max_steps", Ty::Int(1), "5000000"),
    key("n_traj", Ty::Int(1), "2000"),
    key("grid_n", Ty::Int(200), "400"),
    key("n_starts", Ty::Int(1), "100"),
    key("lipschitz_n", Ty::Int(3), "101"),
    key("n_knots", Ty::Int(16), "64"),
    key("t_horizon", Ty::Real(true), "50"),
    key("inv_samples", Ty::Int(0), "500"),
];

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(untagged)]
pub enum Value {
    Real(f64),
    Int(u64),
    Text(String),
    Reals(Vec<f64>),
    Ints(Vec<u64>),
}

fn parse_real(s: &str) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|_| format!("expected a number, got '{s}'"))?;
    if !v.is_finite() {
        return Err(format!("expected a finite number, got '{s}'"));
    }
    Ok(v)
}

fn parse_int(s: &str) -> Result<u64, String> {
    s.parse()
        .map_err(|_| format!("expected a non-negative integer, got '{s}'"))
}

fn parse_list<T>(s: &str, item: impl Fn(&str) -> Result<T, String>) -> Result<Vec<T>, String> {
    let items: Vec<&str> = s.split(',').map(str::trim).collect();
    if items.iter().any(|i| i.is_empty()) {
        return Err(format!("expected a comma-separated list, got '{s}'"));
    }
    items.into_iter().map(item).collect()
}

fn parse_value(spec: &KeySpec, raw: &str) -> Result<Value, String> {
    let name = spec.name;
    match spec.ty {
        Ty::Command => {
            raw.parse::<Command>()?;
            Ok(Value::Text(raw.to_string()))
        }
        Ty::Choice(options) => {
            if options.contains(&raw) {
                Ok(Value::Text(raw.to_string()))
            } else {
                Err(format!("expected one of {}, got '{raw}'", options.join(", ")))
            }
        }
        Ty::Real(positive) => {
            let v = parse_real(raw)?;
            if positive && v <= 0.0 {
                return Err(format!("{name} must be > 0, got {raw}"));
            }
            Ok(Value::Real(v))
        }
        Ty::Int(min) => {
            let v = parse_int(raw)?;
            if v < min {
                return Err(format!("{name} must be >= {min}, got {v}"));
            }
            Ok(Value::Int(v))
        }
        Ty::Reals => {
            let v = parse_list(raw, parse_real)?;
            if let Some(x) = v.iter().find(|x| **x <= 0.0) {
                return Err(format!("{name} entries must be > 0, got {x}"));
            }
            Ok(Value::Reals(v))
        }
        Ty::Ints(min) => {
            let v = parse_list(raw, parse_int)?;
            if let Some(x) = v.iter().find(|x| **x < min) {
                return Err(format!("{name} entries must be >= {min}, got {x}"));
            }
            Ok(Value::Ints(v))
        }
        Ty::Path => {
            if raw.is_empty() {
                return Err(format!("{name} must not be empty"));
            }
            Ok(Value::Text(raw.to_string()))
        }
    }
}

/// A validated configuration with every default filled in.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub command: Command,
    values: BTreeMap<&'static str, Value>,
}

fn spec_of(name: &str) -> Option<&'static KeySpec> {
    SCHEMA.iter().find(|s| s.name == name)
}

pub fn parse_config(text: &str) -> Result<RunConfig, ConfigError> {
    let mut seen: BTreeMap<&'static str, (usize, Value)> = BTreeMap::new();
    for (i, raw_line) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw_line.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let Some((k, v)) = content.split_once('=') else {
            return Err(err(Some(line), format!("expected 'key = value', got '{content}'")));
        };
        let (k, v) = (k.trim(), v.trim());
        let spec = spec_of(k).ok_or_else(|| err(Some(line), format!("unknown key '{k}'")))?;
        if let Some((first, _)) = seen.get(spec.name) {
            return Err(err(
                Some(line),
                format!("duplicate key '{k}' (lines {first} and {line})"),
            ));
        }
        let value = parse_value(spec, v).map_err(|m| err(Some(line), format!("{k}: {m}")))?;
        seen.insert(spec.name, (line, value));
    }
    let mut values = BTreeMap::new();
    for spec in SCHEMA {
        let value = match seen.remove(spec.name) {
            Some((_, v)) => v,
            None => match spec.default {
                Some(d) => parse_value(spec, d).expect("schema defaults are valid"),
                None => return Err(err(None, format!("missing required key '{}'", spec.name))),
            },
        };
        values.insert(spec.name, value);
    }
    let command = match &values["command"] {
        Value::Text(s) => s.parse().expect("validated above"),
        _ => unreachable!("command is text"),
    };
    let cfg = RunConfig { command, values };
    cfg.cross_check()?;
    Ok(cfg)
}

impl RunConfig {
    fn cross_check(&self) -> Result<(), ConfigError> {
        let dim = self.extents().len();
        if !(2..=4).contains(&dim) {
            return Err(err(None, format!("extents: need 2 to 4 entries, got {dim}")));
        }
        if self.int("measure_every") > self.int("n_measure") {
            return Err(err(None, "measure_every must not exceed n_measure"));
        }
        Ok(())
    }

    /// Applies command-line overrides of `out` and `seed`.
    pub fn override_with(&mut self, out: Option<PathBuf>, seed: Option<u64>) {
        if let Some(o) = out {
            self.values.insert("out", Value::Text(o.to_string_lossy().into_owned()));
        }
        if let Some(s) = seed {
            self.values.insert("seed", Value::Int(s));
        }
    }

    pub fn resolved(&self) -> &BTreeMap<&'static str, Value> {
        &self.values
    }

    fn get(&self, name: &str) -> &Value {
        self.values
            .get(name)
            .unwrap_or_else(|| panic!("key '{name}' is not in the schema"))
    }

    pub fn real(&self, name: &str) -> f64 {
        match self.get(name) {
            Value::Real(v) => *v,
            other => panic!("key '{name}' is not a real: {other:?}"),
        }
    }

    pub fn int(&self, name: &str) -> u64 {
        match self.get(name) {
            Value::Int(v) => *v,
            other => panic!("key '{name}' is not an integer: {other:?}"),
        }
    }

    pub fn usize(&self, name: &str) -> usize {
        self.int(name) as usize
    }

    pub fn text(&self, name: &str) -> &str {
        match self.get(name) {
            Value::Text(v) => v,
            other => panic!("key '{name}' is not text: {other:?}"),
        }
    }

    pub fn reals(&self, name: &str) -> &[f64] {
        match self.get(name) {
            Value::Reals(v) => v,
            other => panic!("key '{name}' is not a list of reals: {other:?}"),
        }
    }

    pub fn seed(&self) -> u64 {
        self.int("seed")
    }

    pub fn out(&self) -> PathBuf {
        PathBuf::from(self.text("out"))
    }

    pub fn group(&self) -> GroupKind {
        match self.text("group") {
            "su2" => GroupKind::UnitQuaternion,
            _ => GroupKind::Circle,
        }
    }

    pub fn boundary(&self) -> Boundary {
        match self.text("boundary") {
            "open" => Boundary::Open,
            _ => Boundary::Periodic,
        }
    }

    pub fn extents(&self) -> Vec<usize> {
        match self.get("extents") {
            Value::Ints(v) => v.iter().map(|&x| x as usize).collect(),
            other => panic!("extents is not a list: {other:?}"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config() {
        let c = parse_config("command = consistency\ngroup = circle\nbeta = 1.0").unwrap();
        assert_eq!(c.command, Command::Consistency);
        assert_eq!(c.group(), GroupKind::Circle);
        assert_eq!(c.real("beta"), 1.0);
        // defaults are recorded
        assert_eq!(c.resolved().len(), SCHEMA.len());
        assert_eq!(c.extents(), vec![4, 4]);
    }

    #[test]
    fn comments_and_blank_lines() {
        let c = parse_config("# run\n\ncommand = sample  # trailing\n  seed=7\n").unwrap();
        assert_eq!(c.command, Command::Sample);
        assert_eq!(c.seed(), 7);
    }

    #[test]
    fn constraint_violation_names_key_and_line() {
        let e = parse_config("command = consistency\nbeta = -1").unwrap_err();
        assert_eq!(e.line, Some(2));
        assert!(e.message.contains("beta") && e.message.contains("> 0"), "{e}");
    }

    #[test]
    fn duplicate_reports_both_lines() {
        let e = parse_config("command = sample\nbeta = 1\n\nbeta = 2").unwrap_err();
        assert_eq!(e.line, Some(4));
        assert!(e.message.contains("lines 2 and 4"), "{e}");
    }

    #[test]
    fn unknown_key_and_type_mismatch() {
        let e = parse_config("command = sample\nbetta = 1").unwrap_err();
        assert_eq!(e.line, Some(2));
        assert!(e.message.contains("unknown key 'betta'"));
        let e = parse_config("command = sample\nn_measure = lots").unwrap_err();
        assert!(e.message.contains("n_measure") && e.message.contains("integer"), "{e}");
        let e = parse_config("command = sample\ngroup = so3").unwrap_err();
        assert!(e.message.contains("circle, su2"));
        let e = parse_config("command = sample\nextents = 4,,4").unwrap_err();
        assert_eq!(e.line, Some(2));
    }

    #[test]
    fn missing_command() {
        let e = parse_config("beta = 1").unwrap_err();
        assert_eq!(e.line, None);
        assert!(e.message.contains("command"));
        assert!(parse_config("command = dance").is_err());
        assert!(parse_config("command consistency").is_err());
    }

    #[test]
    fn overrides() {
        let mut c = parse_config("command = sample\nseed = 3\nout = a").unwrap();
        c.override_with(Some(PathBuf::from("b")), Some(9));
        assert_eq!(c.seed(), 9);
        assert_eq!(c.out(), PathBuf::from("b"));
    }

    #[test]
    fn every_command_parses() {
        for cmd in Command::ALL {
            let c = parse_config(&format!("command = {}", cmd.as_str())).unwrap();
            assert_eq!(c.command, cmd);
        }
    }
}
