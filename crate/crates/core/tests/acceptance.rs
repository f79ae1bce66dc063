//! Acceptance run: one PASS/FAIL line per criterion. Tolerances are pinned
//! here and must not be loosened to make a line pass.

use std::process::ExitCode;
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use heatgauge_core::fw::{
    dirichlet_eigenvalue_fd, eigenvalue_from_exits, fw_scaling_fit, lipschitz_check, omega_limit_check,
    quasi_potential_gradient, run_exits, GroundStateModel, SDEParams,
};
use heatgauge_core::heat_kernel::{
    beta_schedule, class_angle_grid, convolution_check, convolve_coeffs, gaussian_bound_check,
    wrapped_gaussian_oracle, ClassFunctionCoeffs, RefinementStep,
};
use heatgauge_core::lattice::consistency::{consistency_check_exact, consistency_check_mc};
use heatgauge_core::mc::{exact_2d_wilson, expectation_wilson, mass_gap_fit, temporal_correlator, MCParams};
use heatgauge_core::quadrature::full_quadrature;
use heatgauge_core::{Boundary, GroupKind, HeatKernel, LatticeSpec, Result};

const GROUPS: [GroupKind; 2] = [GroupKind::Circle, GroupKind::UnitQuaternion];

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Result<Outcome> {
    Ok(Outcome { pass, detail })
}

fn consistency() -> Result<Outcome> {
    let mut worst: f64 = 0.0;
    for kind in GROUPS {
        for beta in [0.25, 0.5, 1.0] {
            worst = worst.max(consistency_check_exact(kind, beta)?.max_residual());
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut pulls = Vec::new();
    let mut constant = true;
    for kind in GROUPS {
        let mc = consistency_check_mc(kind, 1.0, 1_000_000, &mut rng)?;
        constant &= mc.constant;
        pulls.push(format!("{kind:?} ratio {:.5}±{:.5} max pull {:.2}", mc.ratio, mc.stderr, mc.max_pull));
    }
    outcome(
        worst <= 1e-12 && constant,
        format!("exact residual {worst:.2e} (≤ 1e-12); MC {}", pulls.join(", ")),
    )
}

fn semigroup() -> Result<Outcome> {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut worst: f64 = 0.0;
    for kind in GROUPS {
        let rule = full_quadrature(kind, 48)?;
        for b1 in [0.25, 0.5] {
            for b2 in [0.25, 0.5] {
                for _ in 0..20 {
                    let g = kind.haar_sample(&mut rng);
                    let h = kind.haar_sample(&mut rng);
                    worst = worst.max(convolution_check(kind, b1, b2, &g, &h, &rule)?);
                }
            }
        }
    }
    // two stages: β/4 ∗ β/4 → β/2, then β/2 ∗ β/2 → β
    let mut schedule: f64 = 0.0;
    for kind in GROUPS {
        for beta in [0.25, 0.5, 1.0] {
            let quarter = beta_schedule(beta, RefinementStep::SquareToHalfSquare)?;
            let half = beta_schedule(beta, RefinementStep::SquareToRect)?;
            let cutoff = HeatKernel::new(kind, quarter)?.cutoff();
            let kq = ClassFunctionCoeffs::heat_kernel(kind, quarter, cutoff);
            let rect = convolve_coeffs(&kq, &kq)?;
            schedule = schedule.max(rect.max_abs_diff(&ClassFunctionCoeffs::heat_kernel(kind, half, cutoff)));
            let full = convolve_coeffs(&rect, &rect)?;
            schedule = schedule.max(full.max_abs_diff(&ClassFunctionCoeffs::heat_kernel(kind, beta, cutoff)));
        }
    }
    outcome(
        worst <= 1e-8 && schedule <= 1e-12,
        format!("quadrature residual {worst:.2e} (≤ 1e-8); schedule residual {schedule:.2e}"),
    )
}

fn circle_identity() -> Result<Outcome> {
    let mut worst: f64 = 0.0;
    for beta in [0.05, 0.1, 0.5, 1.0, 2.0] {
        let k = HeatKernel::new(GroupKind::Circle, beta)?;
        for j in 0..1024 {
            let theta = -std::f64::consts::PI + std::f64::consts::TAU * j as f64 / 1024.0;
            worst = worst.max((k.circle_series(theta).0 - wrapped_gaussian_oracle(theta, beta)).abs());
        }
    }
    outcome(worst <= 1e-10, format!("max |series − wrapped Gaussian| {worst:.2e} (≤ 1e-10)"))
}

fn gaussian_bounds() -> Result<Outcome> {
    let mut pass = true;
    let mut parts = Vec::new();
    for kind in GROUPS {
        let b = gaussian_bound_check(kind, &[0.1, 0.2, 0.5], &class_angle_grid(kind, 512))?;
        pass &= b.pass && b.c1 <= b.c3;
        parts.push(format!("{kind:?} c1={:.3} c2={:.3} c3={:.3} c4={:.3}", b.c1, b.c2, b.c3, b.c4));
    }
    outcome(pass, parts.join("; "))
}

fn area_law() -> Result<Outcome> {
    let spec = LatticeSpec::new(vec![8, 8], 0, Boundary::Open)?;
    let params = MCParams {
        beta: 1.0,
        n_therm: 500,
        n_measure: 25_000,
        seed: 5,
        n_chains: 4,
        ..MCParams::default()
    };
    let fund = GroupKind::Circle.fundamental_irrep();
    let mut pass = true;
    let mut parts = Vec::new();
    for (r, t) in [(1, 1), (1, 2), (2, 2)] {
        let w = expectation_wilson(&spec, GroupKind::Circle, &params, (r, t), fund)?;
        let exact = exact_2d_wilson(fund, r * t, 1.0);
        let pull = (w.mean - exact) / w.stderr;
        pass &= pull.abs() <= 3.0 && w.n_measurements >= 100_000;
        parts.push(format!("A={} {:.5}±{:.5} vs {exact:.5} ({pull:+.2}σ)", r * t, w.mean, w.stderr));
    }
    outcome(pass, parts.join("; "))
}

fn link_model() -> Result<GroundStateModel> {
    GroundStateModel::single_link(GroupKind::Circle, 0.5)
}

fn exit_lambda(model: &GroundStateModel, g: f64, n_traj: usize, seed: u64) -> Result<(f64, f64, usize)> {
    let params = SDEParams {
        n_traj,
        seed,
        max_steps: 5_000_000,
        ..SDEParams::new(g, 1e-3, 1.0)
    };
    let records = run_exits(model, &params, &[0.0])?;
    let uncensored = records.iter().filter(|r| !r.censored).count();
    let est = eigenvalue_from_exits(&records)?;
    Ok((est.lambda, est.stderr, uncensored))
}

fn eigen_concordance() -> Result<Outcome> {
    let model = link_model()?;
    let mut pass = true;
    let mut parts = Vec::new();
    for (i, g) in [0.5, 0.6].into_iter().enumerate() {
        let (l, e, _) = exit_lambda(&model, g, 4000, 60 + i as u64)?;
        let grid = dirichlet_eigenvalue_fd(&model, g, 1.0, 400)?.lambda;
        let rel = (l / grid - 1.0).abs();
        pass &= rel <= 0.10;
        parts.push(format!("g={g} exit {l:.4}±{e:.4} grid {grid:.4} ({:.1}%)", 100.0 * rel));
    }
    let flat = GroundStateModel::Flat { dim: 1 };
    let (l, e, _) = exit_lambda(&flat, 1.0, 4000, 66)?;
    let exact = std::f64::consts::PI.powi(2) / 8.0;
    let rel = (l / exact - 1.0).abs();
    pass &= rel <= 0.10;
    parts.push(format!("Brownian {l:.4}±{e:.4} vs π²/8 ({:.1}%)", 100.0 * rel));
    outcome(pass, parts.join("; "))
}

fn fw_scaling() -> Result<Outcome> {
    let model = link_model()?;
    let v = quasi_potential_gradient(&model, 1.0)?.v;
    let mut pts = Vec::new();
    let mut min_exits = usize::MAX;
    for (i, g) in [0.35, 0.40, 0.45, 0.5, 0.6, 0.7].into_iter().enumerate() {
        let (l, _, n) = exit_lambda(&model, g, 2000, 70 + i as u64)?;
        min_exits = min_exits.min(n);
        pts.push((g, l));
    }
    let fit = fw_scaling_fit(&pts)?;
    outcome(
        fit.matches(v, 0.15, 0.98) && min_exits >= 2000,
        format!(
            "slope {:.4} vs −V = {:.4} ({:.1}%), r² {:.4}, min uncensored exits {min_exits}",
            fit.slope,
            -v,
            100.0 * (fit.slope + v).abs() / v,
            fit.r2
        ),
    )
}

fn conditions() -> Result<Outcome> {
    let model = link_model()?;
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let omega = omega_limit_check(&model, 1.0, 100, &mut rng)?;
    let lip = lipschitz_check(&model, 1.0, 101)?;
    outcome(
        omega.passes() && lip.pass,
        format!(
            "{} limit set(s), |limit| {:.1e}, {} inward violations; L {:.4} → {:.4} (ratio {:.4})",
            omega.n_limit_sets(),
            omega.max_limit_norm,
            omega.inward_violations,
            lip.l_coarse,
            lip.l_fine,
            lip.ratio
        ),
    )
}

fn correlator() -> Result<Outcome> {
    let spec = LatticeSpec::cubic(3, 4, Boundary::Periodic)?;
    let params = MCParams {
        beta: 0.7,
        n_therm: 1000,
        n_measure: 50_000,
        seed: 9,
        n_chains: 8,
        ..MCParams::default()
    };
    let corr = temporal_correlator(&spec, GroupKind::Circle, &params, 2)?;
    let fit = mass_gap_fit(&corr);
    let positive = corr.c[1] > 0.0;
    let decreasing = corr.c.windows(2).all(|w| w[1] < w[0]);
    let gap = match (fit.m, fit.stderr) {
        (Some(m), Some(e)) => m > 2.0 * e,
        _ => false,
    };
    let control_spec = LatticeSpec::new(vec![8, 8], 0, Boundary::Open)?;
    let control_params = MCParams {
        beta: 0.7,
        n_measure: 20_000,
        seed: 10,
        ..MCParams::default()
    };
    let control = mass_gap_fit(&temporal_correlator(&control_spec, GroupKind::Circle, &control_params, 3)?);
    let cs: Vec<String> = corr
        .c
        .iter()
        .zip(&corr.stderr)
        .map(|(c, e)| format!("{c:.3e}±{e:.1e}"))
        .collect();
    outcome(
        positive && decreasing && gap && !control.gap_defined(),
        format!(
            "C = [{}], m = {} ± {}; 2D control gap defined: {}",
            cs.join(", "),
            fit.m.map_or("none".into(), |m| format!("{m:.3}")),
            fit.stderr.map_or("none".into(), |e| format!("{e:.3}")),
            control.gap_defined()
        ),
    )
}

type Criterion = fn() -> Result<Outcome>;

fn main() -> ExitCode {
    // (name, check, wall-time budget in seconds)
    let criteria: [(&str, Criterion, f64); 9] = [
        ("1 consistency", consistency, 60.0),
        ("2 semigroup", semigroup, 30.0),
        ("3 circle kernel identity", circle_identity, 30.0),
        ("4 gaussian bounds", gaussian_bounds, 30.0),
        ("5 2D area law", area_law, 300.0),
        ("6 eigenvalue concordance", eigen_concordance, 600.0),
        ("7 mass-gap scaling", fw_scaling, 1800.0),
        ("8 conditions", conditions, 30.0),
        ("9 3D correlator", correlator, 600.0),
    ];
    let only: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    for (name, run, budget) in criteria {
        if !only.is_empty() && !only.iter().any(|o| name.contains(o.as_str())) {
            continue;
        }
        let start = Instant::now();
        let (pass, detail) = match run() {
            Ok(o) => (o.pass, o.detail),
            Err(e) => (false, format!("error: {e}")),
        };
        let elapsed = start.elapsed().as_secs_f64();
        let status = if pass && elapsed <= budget { "PASS" } else { "FAIL" };
        if status == "FAIL" {
            failed += 1;
        }
        println!("{status} criterion {name}: {detail} [{elapsed:.1}s of {budget:.0}s]");
    }
    if failed > 0 {
        ExitCode::FAILURE
    } else {
        ExitCode::SUCCESS
    }
}
