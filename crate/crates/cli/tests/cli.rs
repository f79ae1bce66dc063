use std::fs;
use std::path::Path;
use std::process::Command;

use serde_json::Value;

fn run(dir: &Path, config: &str, extra: &[&str]) -> i32 {
    let cfg = dir.join("run.cfg");
    fs::write(&cfg, config).unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_heatgauge"))
        .arg(&cfg)
        .arg("--out")
        .arg(dir.join("out"))
        .args(extra)
        .output()
        .unwrap();
    out.status.code().unwrap()
}

fn manifest(dir: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(dir.join("out/manifest.json")).unwrap()).unwrap()
}

fn header(dir: &Path, file: &str) -> String {
    fs::read_to_string(dir.join("out").join(file))
        .unwrap()
        .lines()
        .next()
        .unwrap()
        .to_string()
}

#[test]
fn consistency_circle_passes() {
    let dir = tempfile::tempdir().unwrap();
    let code = run(
        dir.path(),
        "# exact check only\ncommand = consistency\ngroup = circle\nbeta = 1.0\nn_samples = 0\n",
        &[],
    );
    assert_eq!(code, 0);
    let m = manifest(dir.path());
    let check = &m["checks"][0];
    assert_eq!(check["name"], "consistency_exact");
    assert!(check["value"].as_f64().unwrap() <= 1e-12);
    assert_eq!(m["config"]["beta"], 1.0);
    assert_eq!(m["exit_code"], 0);
    assert!(m["timestamp"].as_str().unwrap().ends_with('Z'));
    assert_eq!(header(dir.path(), "edges.csv"), "edge_id,site,axis");
    assert_eq!(header(dir.path(), "plaquettes.csv"), "plaquette_id,e1,e2,e3,e4,signs");
}

#[test]
fn seed_flag_overrides_file() {
    let dir = tempfile::tempdir().unwrap();
    let code = run(
        dir.path(),
        "command = consistency\nseed = 5\nn_samples = 10000\n",
        &["--seed", "77"],
    );
    assert_eq!(code, 0);
    let m = manifest(dir.path());
    assert_eq!(m["seed"], 77);
    assert_eq!(m["config"]["seed"], 77);
}

#[test]
fn fw_scaling_with_one_g_is_an_error() {
    let dir = tempfile::tempdir().unwrap();
    let code = run(dir.path(), "command = fw-scaling\nbeta = 0.5\ng_list = 0.5\n", &[]);
    assert_eq!(code, 1);
    let m = manifest(dir.path());
    assert!(m["error"].as_str().unwrap().contains("g_list"));
    assert_eq!(m["exit_code"], 1);
}

#[test]
fn bad_config_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(run(dir.path(), "command = sample\nbogus = 1\n", &[]), 1);
    assert_eq!(run(dir.path(), "beta = 1\n", &[]), 1);
    assert_eq!(run(dir.path(), "command = sample\nbeta = 1\nbeta = 2\n", &[]), 1);
}

#[test]
fn missing_config_file_exits_one() {
    let out = Command::new(env!("CARGO_BIN_EXE_heatgauge"))
        .arg("/nonexistent/run.cfg")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn massgap_on_open_2d_lattice_is_undefined() {
    let dir = tempfile::tempdir().unwrap();
    let code = run(
        dir.path(),
        "command = massgap\nextents = 6,6\nboundary = open\nn_therm = 100\nn_measure = 1000\n",
        &[],
    );
    assert_eq!(code, 0);
    let m = manifest(dir.path());
    assert_eq!(m["results"]["gap_defined"], false);
    assert!(m["results"]["gap_status"].as_str().is_some());
    assert_eq!(header(dir.path(), "correlator.csv"), "t,C,stderr");
    assert_eq!(header(dir.path(), "massgap.csv"), "t,m_eff,stderr,fit_m,fit_err");
}

#[test]
fn sample_writes_observables() {
    let dir = tempfile::tempdir().unwrap();
    let code = run(
        dir.path(),
        "command = sample\nbeta = 1.0\nn_therm = 100\nn_measure = 500\nmeasure_every = 5\nn_chains = 2\n",
        &[],
    );
    assert_eq!(code, 0);
    let text = fs::read_to_string(dir.path().join("out/observables.csv")).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("sweep,observable,value"));
    // two chains of 100 measurements, two observables each
    assert_eq!(lines.count(), 2 * 100 * 2);
    let entries = fs::read_dir(dir.path().join("out")).unwrap();
    let manifests = entries.filter(|e| e.as_ref().unwrap().file_name() == "manifest.json").count();
    assert_eq!(manifests, 1);
}

#[test]
fn fw_eigenvalue_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let code = run(dir.path(), "command = fw-eigenvalue\nbeta = 0.5\ng = 0.6\n", &[]);
    assert_eq!(code, 0);
    assert_eq!(header(dir.path(), "exits.csv"), "traj_id,tau,censored");
    assert_eq!(header(dir.path(), "survival.csv"), "t,P(tau>t)");
    let lambda = fs::read_to_string(dir.path().join("out/lambda0.csv")).unwrap();
    assert!(lambda.starts_with("g,lambda0,stderr,method\n"));
    for method in ["exit_tail", "mgf_threshold", "grid_dirichlet"] {
        assert!(lambda.contains(method), "{method} missing");
    }
}

#[test]
fn failed_check_exits_two() {
    // the exit-time tail cannot match the grid eigenvalue with a time step this coarse
    let dir = tempfile::tempdir().unwrap();
    let code = run(
        dir.path(),
        "command = fw-eigenvalue\nmodel = flat\nradius = 1\ng = 1\ndt = 0.01\nn_traj = 2000\n",
        &[],
    );
    let m = manifest(dir.path());
    assert_eq!(code, 2, "{m}");
    assert_eq!(m["all_checks_pass"], false);
}

#[test]
fn reruns_are_byte_identical() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let cfg = "command = sample\nbeta = 0.8\nn_therm = 50\nn_measure = 200\nn_chains = 3\nseed = 11\n";
    assert_eq!(run(a.path(), cfg, &[]), 0);
    assert_eq!(run(b.path(), cfg, &[]), 0);
    for f in ["observables.csv", "edges.csv", "plaquettes.csv"] {
        let x = fs::read(a.path().join("out").join(f)).unwrap();
        let y = fs::read(b.path().join("out").join(f)).unwrap();
        assert_eq!(x, y, "{f} differs");
    }
}
