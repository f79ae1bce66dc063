//! One pipeline per command. Each returns its tables, checks and a JSON
//! summary; nothing is written here.

use std::f64::consts::{PI, TAU};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value as Json};

use heatgauge_core::fw::{
    self, dirichlet_eigenvalue_fd, eigenvalue_from_exits, fw_scaling_fit, invariant_measure_check,
    lipschitz_check, minimize_action, omega_limit_check, quasi_potential_gradient, run_exits,
    DomainShape, GroundStateModel, SDEParams,
};
use heatgauge_core::heat_kernel::{
    class_angle_grid, convolution_check, gaussian_bound_check, wrapped_gaussian_oracle,
};
use heatgauge_core::lattice::consistency::{consistency_check_exact, consistency_check_mc};
use heatgauge_core::mc::observables::merge_series;
use heatgauge_core::mc::{
    exact_2d_wilson, expectation_wilson, mass_gap_fit, run_chains, temporal_correlator, MCParams,
    ObservableSeries,
};
use heatgauge_core::quadrature::full_quadrature;
use heatgauge_core::{Boundary, GroupKind, HeatKernel, Lattice, LatticeSpec};

use crate::config::{Command, RunConfig};
use crate::output::{opt, Check, Table};
use crate::CliError;

#[derive(Debug, Default)]
pub struct Report {
    pub tables: Vec<Table>,
    pub checks: Vec<Check>,
    pub results: Json,
    pub lattice: Option<Json>,
}

pub fn dispatch(cfg: &RunConfig) -> Result<Report, CliError> {
    match cfg.command {
        Command::KernelCheck => kernel_check(cfg),
        Command::Consistency => consistency(cfg),
        Command::Sample => sample(cfg),
        Command::Wilson => wilson(cfg),
        Command::Correlator | Command::Massgap => correlator(cfg),
        Command::FwEigenvalue => fw_eigenvalue(cfg),
        Command::FwScaling => fw_scaling(cfg),
        Command::Quasipotential => quasipotential(cfg),
        Command::ConditionCheck => condition_check(cfg),
    }
}

fn kernel_check(cfg: &RunConfig) -> Result<Report, CliError> {
    let kind = cfg.group();
    let n = cfg.usize("grid_points");
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed());
    let mut rep = Report::default();
    let mut values = Table::new("kernel.csv", &["beta", "class_angle", "K"]);
    let grid = class_angle_grid(kind, n);
    for &beta in cfg.reals("betas") {
        let k = HeatKernel::new(kind, beta)?;
        for g in &grid {
            values.push([beta, g.class_angle(), k.eval(g)?]);
        }
        if kind == GroupKind::Circle {
            let worst = (0..n)
                .map(|j| {
                    let theta = -PI + TAU * j as f64 / n as f64;
                    (k.circle_series(theta).0 - wrapped_gaussian_oracle(theta, beta)).abs()
                })
                .fold(0.0, f64::max);
            rep.checks.push(Check::at_most(
                format!("series_vs_wrapped_gaussian[beta={beta}]"),
                worst,
                1e-10,
                "max abs difference over the angle grid",
            ));
        }
        let half = HeatKernel::new(kind, beta / 2.0)?;
        let rule = full_quadrature(kind, 2 * half.cutoff() as usize + 4)?;
        let mut worst: f64 = 0.0;
        for _ in 0..cfg.usize("pairs") {
            let g = kind.haar_sample(&mut rng);
            let h = kind.haar_sample(&mut rng);
            worst = worst.max(convolution_check(kind, beta / 2.0, beta / 2.0, &g, &h, &rule)?);
        }
        rep.checks.push(Check::at_most(
            format!("convolution[beta={beta}]"),
            worst,
            1e-8,
            "K(β/2) ∗ K(β/2) against K(β) at random pairs",
        ));
    }
    let bound_betas: Vec<f64> = cfg.reals("betas").iter().copied().filter(|b| *b <= 1.0).collect();
    if !bound_betas.is_empty() {
        let b = gaussian_bound_check(kind, &bound_betas, &grid)?;
        rep.checks.push(Check::flag(
            "gaussian_bounds",
            b.pass,
            format!("c1={} c2={} c3={} c4={}", b.c1, b.c2, b.c3, b.c4),
        ));
        rep.results = json!({ "gaussian_bounds": { "betas": bound_betas, "c1": b.c1, "c2": b.c2, "c3": b.c3, "c4": b.c4 } });
    }
    rep.tables.push(values);
    Ok(rep)
}

fn lattice_tables(lattice: &Lattice) -> Vec<Table> {
    let mut edges = Table::new("edges.csv", &["edge_id", "site", "axis"]);
    for (i, e) in lattice.edges().iter().enumerate() {
        edges.push([i, e.site, e.axis]);
    }
    let mut plaqs = Table::new("plaquettes.csv", &["plaquette_id", "e1", "e2", "e3", "e4", "signs"]);
    for (i, p) in lattice.plaquettes().iter().enumerate() {
        let signs: String = p.signs.iter().map(|s| if *s > 0 { '+' } else { '-' }).collect();
        let [e1, e2, e3, e4] = p.edges;
        plaqs.push([i.to_string(), e1.to_string(), e2.to_string(), e3.to_string(), e4.to_string(), signs]);
    }
    vec![edges, plaqs]
}

fn consistency(cfg: &RunConfig) -> Result<Report, CliError> {
    let kind = cfg.group();
    let beta = cfg.real("beta");
    let mut rep = Report::default();
    let exact = consistency_check_exact(kind, beta)?;
    rep.checks.push(Check::at_most(
        "consistency_exact",
        exact.max_residual(),
        cfg.real("tol") + exact.tail,
        format!("telescoped chain {}", exact.chain),
    ));
    let mut results = json!({ "exact": exact });
    let n_samples = cfg.usize("n_samples");
    if n_samples > 0 {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed());
        let mc = consistency_check_mc(kind, beta, n_samples, &mut rng)?;
        rep.checks.push(Check::at_most(
            "consistency_mc_constant",
            mc.max_pull,
            3.0,
            "largest pairwise pull between boundary ratios",
        ));
        let mut t = Table::new("consistency_mc.csv", &["boundary", "ratio", "stderr"]);
        for (i, b) in mc.boundaries.iter().enumerate() {
            t.push([i as f64, b.ratio, b.stderr]);
        }
        rep.tables.push(t);
        results["mc"] = json!(mc);
    }
    // the single refined plaquette whose interior is integrated out
    let fine = LatticeSpec::new(vec![2, 2], 0, Boundary::Open)?.refined();
    rep.tables.extend(lattice_tables(&Lattice::build(fine.clone())?));
    rep.lattice = Some(json!(fine));
    rep.results = results;
    Ok(rep)
}

fn lattice_spec(cfg: &RunConfig) -> Result<LatticeSpec, CliError> {
    Ok(LatticeSpec::new(cfg.extents(), 0, cfg.boundary())?)
}

fn mc_params(cfg: &RunConfig) -> MCParams {
    MCParams {
        beta: cfg.real("beta"),
        n_therm: cfg.usize("n_therm"),
        n_measure: cfg.usize("n_measure"),
        measure_every: cfg.usize("measure_every"),
        proposal_width: cfg.real("proposal_width"),
        seed: cfg.seed(),
        n_chains: cfg.usize("n_chains"),
    }
}

/// `observables.csv` rows from per-observable series merged in chain order.
/// Chain `c` numbers its sweeps after those of chains `0..c`.
fn observable_table(names: &[String], series: &[Vec<f64>], params: &MCParams) -> Table {
    let mut t = Table::new("observables.csv", &["sweep", "observable", "value"]);
    let per_chain = params.measurements_per_chain();
    for m in 0..series[0].len() {
        let (chain, k) = (m / per_chain, m % per_chain);
        let sweep = chain * params.n_measure + (k + 1) * params.measure_every;
        for (name, s) in names.iter().zip(series) {
            t.push([sweep.to_string(), name.clone(), s[m].to_string()]);
        }
    }
    t
}

fn sample(cfg: &RunConfig) -> Result<Report, CliError> {
    let kind = cfg.group();
    let spec = lattice_spec(cfg)?;
    let lattice = Lattice::build(spec.clone())?;
    let params = mc_params(cfg);
    let fund = kind.fundamental_irrep();
    let d = fund.dim() as f64;
    let n_plaq = lattice.plaquettes().len() as f64;
    let outputs = run_chains(&lattice, kind, &params, |chain| {
        let mut sum = 0.0;
        for p in chain.lattice().plaquettes() {
            sum += fund.character(&chain.config.plaquette_product(p)?)?.re / d;
        }
        Ok(vec![sum / n_plaq, chain.action()])
    })?;
    let series = merge_series(&outputs, 2);
    let names = ["plaquette".to_string(), "action".to_string()];
    let mut rep = Report::default();
    let mut stats = Vec::new();
    for (name, s) in names.iter().zip(&series) {
        let o = ObservableSeries::new(name.clone(), s.clone(), 20)?;
        rep.checks.push(Check::flag(
            format!("jackknife_sanity[{name}]"),
            o.stderr >= o.naive_stderr / 2f64.sqrt(),
            format!("stderr {} vs naive {}", o.stderr, o.naive_stderr),
        ));
        stats.push(json!({ "name": name, "mean": o.mean, "stderr": o.stderr, "naive_stderr": o.naive_stderr }));
    }
    let acceptance = outputs.iter().map(|o| o.acceptance).sum::<f64>() / outputs.len() as f64;
    rep.checks.push(Check::flag(
        "acceptance_band",
        (0.2..=0.8).contains(&acceptance),
        format!("mean acceptance {acceptance} after tuning"),
    ));
    rep.tables.push(observable_table(&names, &series, &params));
    rep.tables.extend(lattice_tables(&lattice));
    rep.results = json!({
        "observables": stats,
        "acceptance": acceptance,
        "chains": outputs.iter().map(|o| json!({ "index": o.index, "acceptance": o.acceptance, "therm_acceptance": o.therm_acceptance, "width": o.width })).collect::<Vec<_>>(),
    });
    rep.lattice = Some(json!(spec));
    Ok(rep)
}

fn wilson(cfg: &RunConfig) -> Result<Report, CliError> {
    let kind = cfg.group();
    let spec = lattice_spec(cfg)?;
    let params = mc_params(cfg);
    let irrep = kind.irrep(cfg.int("irrep") as i64)?;
    let (r, t) = (cfg.usize("r"), cfg.usize("t"));
    let w = expectation_wilson(&spec, kind, &params, (r, t), irrep)?;
    let mut rep = Report::default();
    if spec.dim == 2 && spec.boundary == Boundary::Open {
        let exact = exact_2d_wilson(irrep, r * t, params.beta);
        rep.checks.push(Check::at_most(
            "area_law",
            (w.mean - exact).abs(),
            3.0 * w.stderr,
            format!("exact e^(-c β A) = {exact}"),
        ));
    }
    let name = format!("wilson_{r}x{t}");
    rep.tables.push(observable_table(&[name], std::slice::from_ref(&w.series), &params));
    rep.tables.extend(lattice_tables(&Lattice::build(spec.clone())?));
    rep.results = json!(w);
    rep.lattice = Some(json!(spec));
    Ok(rep)
}

fn correlator(cfg: &RunConfig) -> Result<Report, CliError> {
    let kind = cfg.group();
    let spec = lattice_spec(cfg)?;
    let params = mc_params(cfg);
    let corr = temporal_correlator(&spec, kind, &params, cfg.usize("t_max"))?;
    let mut rep = Report::default();
    let mut t = Table::new("correlator.csv", &["t", "C", "stderr"]);
    for i in 0..corr.c.len() {
        t.push([corr.t[i] as f64, corr.c[i], corr.stderr[i]]);
    }
    rep.tables.push(t);
    rep.results = json!({ "correlator": corr });
    if cfg.command == Command::Massgap {
        let fit = mass_gap_fit(&corr);
        let mut t = Table::new("massgap.csv", &["t", "m_eff", "stderr", "fit_m", "fit_err"]);
        for m in &fit.m_eff {
            t.push([m.t.to_string(), m.m_eff.to_string(), m.stderr.to_string(), opt(fit.m), opt(fit.stderr)]);
        }
        rep.tables.push(t);
        rep.results["massgap"] = json!(fit);
        rep.results["gap_defined"] = json!(fit.gap_defined());
        if let Some(reason) = &fit.reason {
            rep.results["gap_status"] = json!(reason);
        }
    }
    rep.tables.extend(lattice_tables(&Lattice::build(spec.clone())?));
    rep.lattice = Some(json!(spec));
    Ok(rep)
}

fn model(cfg: &RunConfig) -> Result<GroundStateModel, CliError> {
    Ok(match cfg.text("model") {
        "quadrature" => {
            GroundStateModel::quadrature(cfg.usize("lx"), cfg.usize("lt"), cfg.real("beta"), cfg.usize("resolution"))?
        }
        "flat" => GroundStateModel::Flat {
            dim: cfg.usize("flat_dim"),
        },
        "double_well" => GroundStateModel::DoubleWell { a: cfg.real("well") },
        _ => GroundStateModel::single_link(cfg.group(), cfg.real("beta"))?,
    })
}

fn sde_params(cfg: &RunConfig, g: f64, seed: u64) -> SDEParams {
    SDEParams {
        g,
        dt: cfg.real("dt"),
        radius: cfg.real("radius"),
        domain: match cfg.text("domain") {
            "cube" => DomainShape::Cube,
            _ => DomainShape::Ball,
        },
        max_steps: cfg.usize("max_steps"),
        n_traj: cfg.usize("n_traj"),
        seed,
    }
}

/// The grid oracle works on `(−R, R)^dim`, which is the domain only in 1D
/// or for the cube.
fn grid_oracle(model: &GroundStateModel, p: &SDEParams, grid_n: usize) -> Result<Option<f64>, CliError> {
    let applies = model.dim() == 1 || (model.dim() == 2 && p.domain == DomainShape::Cube);
    if !applies {
        return Ok(None);
    }
    Ok(Some(dirichlet_eigenvalue_fd(model, p.g, p.radius, grid_n)?.lambda))
}

fn fw_eigenvalue(cfg: &RunConfig) -> Result<Report, CliError> {
    let model = model(cfg)?;
    let g = cfg.real("g");
    let p = sde_params(cfg, g, cfg.seed());
    let start = vec![0.0; model.dim()];
    let records = run_exits(&model, &p, &start)?;
    let mut rep = Report::default();
    let mut exits = Table::new("exits.csv", &["traj_id", "tau", "censored"]);
    for (i, r) in records.iter().enumerate() {
        exits.push([i.to_string(), r.tau.to_string(), r.censored.to_string()]);
    }
    let mut surv = Table::new("survival.csv", &["t", "P(tau>t)"]);
    for (t, s) in fw::exit::survival_curve(&records) {
        surv.push([t, s]);
    }
    let est = eigenvalue_from_exits(&records)?;
    let mut lam = Table::new("lambda0.csv", &["g", "lambda0", "stderr", "method"]);
    lam.push([g.to_string(), est.lambda.to_string(), est.stderr.to_string(), "exit_tail".into()]);
    if let Some((l, e)) = est.mgf {
        lam.push([g.to_string(), l.to_string(), e.to_string(), "mgf_threshold".into()]);
        rep.checks.push(Check::at_most(
            "mgf_vs_tail",
            (l - est.lambda).abs(),
            2.0 * e.hypot(est.stderr),
            "secondary estimator within 2σ of the tail fit",
        ));
    }
    let grid = grid_oracle(&model, &p, cfg.usize("grid_n"))?;
    if let Some(l) = grid {
        lam.push([g.to_string(), l.to_string(), "0".into(), "grid_dirichlet".into()]);
        rep.checks.push(Check::at_most(
            "exit_vs_grid",
            (est.lambda / l - 1.0).abs(),
            0.10,
            "relative difference of tail fit and grid eigenvalue",
        ));
    }
    rep.tables.extend([exits, surv, lam]);
    rep.results = json!({ "model": model.info(), "estimate": est, "grid_dirichlet": grid });
    Ok(rep)
}

fn fw_scaling(cfg: &RunConfig) -> Result<Report, CliError> {
    let g_list = cfg.reals("g_list");
    if g_list.len() < fw::scaling::MIN_POINTS {
        return Err(CliError::Invalid(format!(
            "g_list: fw-scaling needs at least {} values of g, got {}",
            fw::scaling::MIN_POINTS,
            g_list.len()
        )));
    }
    let model = model(cfg)?;
    let start = vec![0.0; model.dim()];
    let v = quasi_potential_gradient(&model, cfg.real("radius"))?;
    let mut lam = Table::new("lambda0.csv", &["g", "lambda0", "stderr", "method"]);
    let mut points = Vec::new();
    let mut per_g = Vec::new();
    for (i, &g) in g_list.iter().enumerate() {
        let p = sde_params(cfg, g, cfg.seed().wrapping_add(i as u64));
        let est = eigenvalue_from_exits(&run_exits(&model, &p, &start)?)?;
        lam.push([g.to_string(), est.lambda.to_string(), est.stderr.to_string(), "exit_tail".into()]);
        points.push((g, est.lambda));
        per_g.push(json!({ "g": g, "estimate": est }));
    }
    let fit = fw_scaling_fit(&points)?;
    let mut t = Table::new("fwfit.csv", &["slope", "intercept", "r2", "V_quasipotential"]);
    t.push([fit.slope, fit.intercept, fit.r2, v.v]);
    let mut rep = Report::default();
    rep.checks.push(Check::at_most(
        "fw_slope",
        (fit.slope + v.v).abs() / v.v,
        0.15,
        "relative distance of the slope from −V",
    ));
    rep.checks.push(Check {
        name: "fw_r2".into(),
        pass: fit.r2 >= 0.98,
        value: fit.r2,
        threshold: 0.98,
        detail: "r² of ln λ0 against 1/g² (must be at least the threshold)".into(),
    });
    rep.tables.extend([lam, t]);
    rep.results = json!({ "model": model.info(), "fit": fit, "quasi_potential": v, "per_g": per_g });
    Ok(rep)
}

fn quasipotential(cfg: &RunConfig) -> Result<Report, CliError> {
    let model = model(cfg)?;
    let radius = cfg.real("radius");
    let v = quasi_potential_gradient(&model, radius)?;
    let min = minimize_action(&model, &v.attractor, radius, cfg.usize("n_knots"), cfg.real("t_horizon"))?;
    let mut rep = Report::default();
    rep.checks.push(Check::at_most(
        "action_vs_quasi_potential",
        (min.value / v.v - 1.0).abs(),
        0.05,
        format!("minimized action {} (converged: {})", min.value, min.converged),
    ));
    let mut t = Table::new("quasipotential.csv", &["radius", "V", "I_min", "T", "converged"]);
    t.push([radius.to_string(), v.v.to_string(), min.value.to_string(), min.path.t_total.to_string(), min.converged.to_string()]);
    rep.tables.push(t);
    rep.results = json!({ "model": model.info(), "quasi_potential": v, "action": { "value": min.value, "t_total": min.path.t_total, "converged": min.converged, "iterations": min.iterations } });
    Ok(rep)
}

fn condition_check(cfg: &RunConfig) -> Result<Report, CliError> {
    let model = model(cfg)?;
    let radius = cfg.real("radius");
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed());
    let omega = omega_limit_check(&model, radius, cfg.usize("n_starts"), &mut rng)?;
    let lip = lipschitz_check(&model, radius, cfg.usize("lipschitz_n"))?;
    let mut rep = Report::default();
    rep.checks.push(Check::flag(
        "single_omega_limit",
        omega.passes(),
        format!(
            "{} limit set(s), {} inward-normal violations",
            omega.n_limit_sets(),
            omega.inward_violations
        ),
    ));
    rep.checks.push(Check::flag(
        "lipschitz_stable",
        lip.pass,
        format!("L {} -> {} under refinement", lip.l_coarse, lip.l_fine),
    ));
    let mut results = json!({ "model": model.info(), "omega": omega, "lipschitz": lip });
    if model.dim() >= 2 {
        let mut worst: f64 = 0.0;
        for p in fw::conditions::sphere_points(model.dim(), 0.5 * radius, 16) {
            worst = worst.max(model.curl_residual(&p)?);
        }
        rep.checks.push(Check::at_most("gradient_drift", worst, 1e-8, "max curl of the drift"));
    }
    let samples = cfg.usize("inv_samples");
    if model.dim() == 1 && samples > 0 {
        let inv = invariant_measure_check(&model, cfg.real("g"), radius, cfg.real("dt"), 1.0, samples, 8, 10, cfg.seed())?;
        rep.checks.push(Check {
            name: "invariant_measure".into(),
            pass: inv.passes(),
            value: inv.p_value,
            threshold: 0.01,
            detail: "χ² p-value of the reflected diffusion against |Ψ₀|^(2/g²) (must exceed the threshold)".into(),
        });
        results["invariant_measure"] = json!(inv);
    }
    rep.results = results;
    Ok(rep)
}
