//! Action functional `I = ½∫|χ' − b(χ)|² ds` on piecewise-linear paths, its
//! minimization, and the quasi-potential of a gradient drift.

use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::fw::conditions::{cluster, flow_to_rest, sphere_points, CLUSTER_TOL};
use crate::fw::model::GroundStateModel;

/// Knots `χ(s_k)` at equally spaced times `s_k = k·T/(n−1)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ActionPath {
    pub knots: Vec<Vec<f64>>,
    pub t_total: f64,
}

impl ActionPath {
    pub fn straight(from: &[f64], to: &[f64], n_knots: usize, t_total: f64) -> Self {
        let knots = (0..n_knots)
            .map(|k| {
                let s = k as f64 / (n_knots - 1) as f64;
                from.iter().zip(to).map(|(a, b)| a + s * (b - a)).collect()
            })
            .collect();
        ActionPath { knots, t_total }
    }

    fn step(&self) -> f64 {
        self.t_total / (self.knots.len() - 1) as f64
    }
}

/// Trapezoidal action of a piecewise-linear path.
pub fn action_functional(model: &GroundStateModel, path: &ActionPath) -> Result<f64> {
    if path.knots.len() < 2 {
        return Ok(0.0);
    }
    let ds = path.step();
    let drifts = path
        .knots
        .iter()
        .map(|x| model.drift(x))
        .collect::<Result<Vec<_>>>()?;
    let mut total = 0.0;
    for k in 0..path.knots.len() - 1 {
        for i in 0..path.knots[k].len() {
            let v = (path.knots[k + 1][i] - path.knots[k][i]) / ds;
            total += 0.25 * ds * ((v - drifts[k][i]).powi(2) + (v - drifts[k + 1][i]).powi(2));
        }
    }
    Ok(total)
}

/// Action and its gradient with respect to every knot and to `ln T`.
fn action_and_gradient(model: &GroundStateModel, path: &ActionPath) -> Result<(f64, Vec<Vec<f64>>, f64)> {
    let n = path.knots.len();
    let dim = path.knots[0].len();
    let ds = path.step();
    let mut b = Vec::with_capacity(n);
    let mut jac = Vec::with_capacity(n);
    for x in &path.knots {
        b.push(model.drift(x)?);
        jac.push(model.drift_jacobian(x)?);
    }
    let mut grad = vec![vec![0.0; dim]; n];
    let mut value = 0.0;
    let mut d_ds = 0.0;
    for k in 0..n - 1 {
        let v: Vec<f64> = (0..dim).map(|i| (path.knots[k + 1][i] - path.knots[k][i]) / ds).collect();
        let ra: Vec<f64> = (0..dim).map(|i| v[i] - b[k][i]).collect();
        let rb: Vec<f64> = (0..dim).map(|i| v[i] - b[k + 1][i]).collect();
        let sq = ra.iter().map(|r| r * r).sum::<f64>() + rb.iter().map(|r| r * r).sum::<f64>();
        value += 0.25 * ds * sq;
        d_ds += 0.25 * sq - 0.5 * (0..dim).map(|i| (ra[i] + rb[i]) * v[i]).sum::<f64>();
        for j in 0..dim {
            let jt_ra: f64 = (0..dim).map(|i| jac[k][i][j] * ra[i]).sum();
            let jt_rb: f64 = (0..dim).map(|i| jac[k + 1][i][j] * rb[i]).sum();
            grad[k][j] += -0.5 * (ra[j] + rb[j]) - 0.5 * ds * jt_ra;
            grad[k + 1][j] += 0.5 * (ra[j] + rb[j]) - 0.5 * ds * jt_rb;
        }
    }
    // ds = T/(n−1), so ∂I/∂ln T = ds · ∂I/∂ds
    Ok((value, grad, ds * d_ds))
}

#[derive(Debug, Clone, Serialize)]
pub struct ActionMinimum {
    pub value: f64,
    pub path: ActionPath,
    pub converged: bool,
    pub iterations: usize,
}

const MAX_ITER: usize = 50_000;
const GRAD_TOL: f64 = 1e-8;
const MIN_TIME: f64 = 1e-6;

/// Minimizes the action over paths from `start` to the sphere `|θ| = R` in
/// total time at most `t_horizon`. The start knot is fixed, the end knot is
/// kept on the sphere and `ln T` is optimized alongside the knots by
/// projected gradient descent with Barzilai–Borwein steps and backtracking.
pub fn minimize_action(
    model: &GroundStateModel,
    start: &[f64],
    radius: f64,
    n_knots: usize,
    t_horizon: f64,
) -> Result<ActionMinimum> {
    if n_knots < 16 {
        return Err(invalid("n_knots", format!("must be >= 16, got {n_knots}")));
    }
    if !(t_horizon > MIN_TIME) {
        return Err(invalid("t_horizon", format!("must be > {MIN_TIME}, got {t_horizon}")));
    }
    if start.len() != model.dim() {
        return Err(invalid("start", format!("expected {} coordinates", model.dim())));
    }
    let r0 = start.iter().map(|v| v * v).sum::<f64>().sqrt();
    if r0 >= radius * (1.0 - 1e-12) {
        return Ok(ActionMinimum {
            value: 0.0,
            path: ActionPath {
                knots: vec![start.to_vec()],
                t_total: 0.0,
            },
            converged: true,
            iterations: 0,
        });
    }
    let dir: Vec<f64> = if r0 > 0.0 {
        start.iter().map(|v| v / r0).collect()
    } else {
        let mut e = vec![0.0; start.len()];
        e[0] = 1.0;
        e
    };
    let end: Vec<f64> = dir.iter().map(|v| radius * v).collect();
    let project = |p: &mut ActionPath| {
        let last = p.knots.last_mut().expect("path has knots");
        let r = last.iter().map(|v| v * v).sum::<f64>().sqrt();
        if r > 0.0 {
            last.iter_mut().for_each(|v| *v *= radius / r);
        } else {
            last.clone_from(&end);
        }
        p.t_total = p.t_total.clamp(MIN_TIME, t_horizon);
    };
    let take_step = |p: &ActionPath, g: &[Vec<f64>], gt: f64, alpha: f64| {
        let mut q = p.clone();
        for (x, gx) in q.knots.iter_mut().zip(g).skip(1) {
            x.iter_mut().zip(gx).for_each(|(a, b)| *a -= alpha * b);
        }
        q.t_total = (p.t_total.ln() - alpha * gt).exp();
        project(&mut q);
        q
    };
    // squared distance between two iterates in the optimization variables
    let dist2 = |p: &ActionPath, q: &ActionPath| {
        let dx: f64 = p
            .knots
            .iter()
            .zip(&q.knots)
            .flat_map(|(a, b)| a.iter().zip(b).map(|(u, v)| (u - v).powi(2)))
            .sum();
        dx + (p.t_total.ln() - q.t_total.ln()).powi(2)
    };

    let mut path = ActionPath::straight(start, &end, n_knots, t_horizon);
    let (mut value, mut grad, mut grad_t) = action_and_gradient(model, &path)?;
    let mut alpha = 1e-2;
    for iter in 0..MAX_ITER {
        // projected-gradient stationarity measure at unit step
        let probe = take_step(&path, &grad, grad_t, 1.0);
        if dist2(&path, &probe).sqrt() < GRAD_TOL * (1.0 + value.abs()) {
            return Ok(ActionMinimum {
                value,
                path,
                converged: true,
                iterations: iter,
            });
        }
        let mut trial;
        loop {
            trial = take_step(&path, &grad, grad_t, alpha);
            let v = action_functional(model, &trial)?;
            if v <= value - 1e-4 * dist2(&path, &trial) / alpha || alpha < 1e-16 {
                break;
            }
            alpha *= 0.5;
        }
        let (v, g, gt) = action_and_gradient(model, &trial)?;
        // Barzilai–Borwein step for the next iteration
        let mut sy = 0.0;
        let mut ss = 0.0;
        for k in 1..n_knots {
            for i in 0..start.len() {
                let s = trial.knots[k][i] - path.knots[k][i];
                sy += s * (g[k][i] - grad[k][i]);
                ss += s * s;
            }
        }
        let st = trial.t_total.ln() - path.t_total.ln();
        sy += st * (gt - grad_t);
        ss += st * st;
        alpha = if sy > 0.0 { (ss / sy).clamp(1e-12, 1e6) } else { (2.0 * alpha).min(1e6) };
        let stalled = (value - v).abs() <= 1e-15 * value.abs().max(1e-300) && ss < 1e-30;
        path = trial;
        value = v;
        grad = g;
        grad_t = gt;
        if stalled {
            return Ok(ActionMinimum {
                value,
                path,
                converged: true,
                iterations: iter + 1,
            });
        }
    }
    Ok(ActionMinimum {
        value,
        path,
        converged: false,
        iterations: MAX_ITER,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct QuasiPotential {
    pub v: f64,
    pub attractor: Vec<f64>,
    /// Boundary point maximizing `ln |Ψ₀|²`.
    pub exit_point: Vec<f64>,
}

/// `V = ln|Ψ₀|²(attractor) − max_{|θ|=R} ln|Ψ₀|²` for a gradient drift.
pub fn quasi_potential_gradient(model: &GroundStateModel, radius: f64) -> Result<QuasiPotential> {
    if !(radius > 0.0 && radius < model.max_radius()) {
        return Err(invalid("radius", format!("must lie in (0, {})", model.max_radius())));
    }
    let dim = model.dim();
    // the origin is left out: it is a rest point whatever its stability
    let mut starts = Vec::new();
    for frac in [0.3, 0.6, 0.9] {
        starts.extend(sphere_points(dim, frac * radius, 24));
    }
    let mut ends = Vec::with_capacity(starts.len());
    for s in &starts {
        ends.push(flow_to_rest(model, s)?.0);
    }
    let limits = cluster(&ends, CLUSTER_TOL);
    if limits.len() != 1 {
        return Err(Error::MultipleAttractors(limits.len()));
    }
    let attractor = limits.into_iter().next().expect("one limit point");

    let candidates = sphere_points(dim, radius, 720);
    let mut best = (f64::NEG_INFINITY, candidates[0].clone());
    for p in candidates {
        let l = model.log_density(&p)?;
        if l > best.0 {
            best = (l, p);
        }
    }
    let (mut top, mut x) = best;
    if dim > 1 {
        // tangential ascent on the sphere
        let mut step = 0.1 * radius;
        for _ in 0..500 {
            let g = model.grad_log_density(&x)?;
            let radial: f64 = g.iter().zip(&x).map(|(a, b)| a * b).sum::<f64>() / (radius * radius);
            let tangent: Vec<f64> = g.iter().zip(&x).map(|(a, b)| a - radial * b).collect();
            let tn = tangent.iter().map(|v| v * v).sum::<f64>().sqrt();
            if tn < 1e-12 || step < 1e-12 {
                break;
            }
            let mut y: Vec<f64> = x.iter().zip(&tangent).map(|(a, t)| a + step * t / tn).collect();
            let ny = y.iter().map(|v| v * v).sum::<f64>().sqrt();
            y.iter_mut().for_each(|v| *v *= radius / ny);
            let l = model.log_density(&y)?;
            if l > top {
                top = l;
                x = y;
            } else {
                step *= 0.5;
            }
        }
    }
    Ok(QuasiPotential {
        v: model.log_density(&attractor)? - top,
        attractor,
        exit_point: x,
    })
}
