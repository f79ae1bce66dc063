//! Grid eigenvalue of the Dirichlet generator `−((g²/2)Δ + b·∇)` on a 1D
//! interval or a 2D square around the identity.

use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::fw::model::GroundStateModel;

pub const MIN_GRID: usize = 200;
const MAX_ITER: usize = 500;
const EIG_TOL: f64 = 1e-11;

#[derive(Debug, Clone, Serialize)]
pub struct DirichletEigen {
    /// Richardson extrapolation `(4λ(h/2) − λ(h))/3`.
    pub lambda: f64,
    /// `λ` at `grid_n` intervals per axis.
    pub lambda_fine: f64,
    /// `λ` at `grid_n/2` intervals per axis.
    pub lambda_coarse: f64,
    pub grid_n: usize,
}

/// Smallest eigenvalue of the discretized Dirichlet generator on
/// `(−R, R)^dim` for `dim ∈ {1, 2}`.
pub fn dirichlet_eigenvalue_fd(
    model: &GroundStateModel,
    g: f64,
    radius: f64,
    grid_n: usize,
) -> Result<DirichletEigen> {
    if grid_n < MIN_GRID {
        return Err(invalid("grid_n", format!("must be >= {MIN_GRID}, got {grid_n}")));
    }
    if !(g > 0.0) {
        return Err(invalid("g", format!("must be > 0, got {g}")));
    }
    if !(radius > 0.0 && radius < model.max_radius()) {
        return Err(invalid("radius", format!("must lie in (0, {})", model.max_radius())));
    }
    let solve = |n: usize| match model.dim() {
        1 => eigen_1d(model, g, radius, n),
        2 => eigen_2d(model, g, radius, n),
        d => Err(Error::Unsupported(format!("grid eigenvalue in {d} dimensions"))),
    };
    let fine = solve(grid_n)?;
    let coarse = solve(grid_n / 2)?;
    Ok(DirichletEigen {
        lambda: (4.0 * fine - coarse) / 3.0,
        lambda_fine: fine,
        lambda_coarse: coarse,
        grid_n,
    })
}

/// Tridiagonal solve `(a_i x_{i−1} + d_i x_i + c_i x_{i+1}) = r_i`.
fn thomas(a: &[f64], d: &[f64], c: &[f64], r: &[f64]) -> Vec<f64> {
    let n = d.len();
    let mut cp = vec![0.0; n];
    let mut rp = vec![0.0; n];
    cp[0] = c[0] / d[0];
    rp[0] = r[0] / d[0];
    for i in 1..n {
        let m = d[i] - a[i] * cp[i - 1];
        cp[i] = c[i] / m;
        rp[i] = (r[i] - a[i] * rp[i - 1]) / m;
    }
    let mut x = vec![0.0; n];
    x[n - 1] = rp[n - 1];
    for i in (0..n - 1).rev() {
        x[i] = rp[i] - cp[i] * x[i + 1];
    }
    x
}

fn eigen_1d(model: &GroundStateModel, g: f64, radius: f64, n: usize) -> Result<f64> {
    let h = 2.0 * radius / n as f64;
    let m = n - 1;
    let diff = 0.5 * g * g / (h * h);
    let mut a = vec![0.0; m];
    let mut d = vec![0.0; m];
    let mut c = vec![0.0; m];
    for i in 0..m {
        let x = -radius + (i + 1) as f64 * h;
        let b = model.drift(&[x])?[0];
        a[i] = -(diff - b / (2.0 * h));
        d[i] = 2.0 * diff;
        c[i] = -(diff + b / (2.0 * h));
    }
    let apply = |v: &[f64]| -> Vec<f64> {
        (0..m)
            .map(|i| {
                let lo = if i > 0 { a[i] * v[i - 1] } else { 0.0 };
                let hi = if i + 1 < m { c[i] * v[i + 1] } else { 0.0 };
                lo + d[i] * v[i] + hi
            })
            .collect()
    };
    let v0 = (0..m).map(|i| sine_mode(i, m)).collect();
    inverse_iteration(v0, |v| Ok(thomas(&a, &d, &c, v)), &apply)
}

fn sine_mode(i: usize, m: usize) -> f64 {
    (std::f64::consts::PI * (i + 1) as f64 / (m + 1) as f64).sin()
}

/// 2D grid on `(−R, R)²`. The generator is similar, through `u = e^{U/g²} φ`
/// with `b = −∇U`, to `−(g²/2)Δ + |b|²/(2g²) + ½ div b`, which is symmetric
/// and solved by conjugate gradients.
fn eigen_2d(model: &GroundStateModel, g: f64, radius: f64, n: usize) -> Result<f64> {
    let h = 2.0 * radius / n as f64;
    let m = n - 1;
    // drift on the full node set including the boundary ring, for div b
    let coord = |i: usize| -radius + i as f64 * h;
    let mut bx = vec![0.0; (n + 1) * (n + 1)];
    let mut by = vec![0.0; (n + 1) * (n + 1)];
    for i in 0..=n {
        for j in 0..=n {
            let b = model.drift(&[coord(i), coord(j)])?;
            bx[i * (n + 1) + j] = b[0];
            by[i * (n + 1) + j] = b[1];
        }
    }
    let mut pot = vec![0.0; m * m];
    for i in 1..n {
        for j in 1..n {
            let k = i * (n + 1) + j;
            let div = (bx[k + n + 1] - bx[k - n - 1] + by[k + 1] - by[k - 1]) / (2.0 * h);
            let b2 = bx[k] * bx[k] + by[k] * by[k];
            pot[(i - 1) * m + (j - 1)] = b2 / (2.0 * g * g) + 0.5 * div;
        }
    }
    let diff = 0.5 * g * g / (h * h);
    let apply = |v: &[f64]| -> Vec<f64> {
        let mut out = vec![0.0; m * m];
        for i in 0..m {
            for j in 0..m {
                let k = i * m + j;
                let mut s = (4.0 * diff + pot[k]) * v[k];
                if i > 0 {
                    s -= diff * v[k - m];
                }
                if i + 1 < m {
                    s -= diff * v[k + m];
                }
                if j > 0 {
                    s -= diff * v[k - 1];
                }
                if j + 1 < m {
                    s -= diff * v[k + 1];
                }
                out[k] = s;
            }
        }
        out
    };
    let mut warm = vec![0.0; m * m];
    let v0: Vec<f64> = (0..m * m)
        .map(|k| sine_mode(k / m, m) * sine_mode(k % m, m))
        .collect();
    let solve = |r: &[f64]| {
        let x = conjugate_gradient(&apply, r, &warm)?;
        warm.clone_from(&x);
        Ok(x)
    };
    inverse_iteration(v0, solve, &apply)
}

/// Inverse iteration from a positive start vector, which overlaps the
/// positive ground state; the estimate is `⟨v, Av⟩` for unit `v`.
fn inverse_iteration<S, A>(mut v: Vec<f64>, mut solve: S, apply: &A) -> Result<f64>
where
    S: FnMut(&[f64]) -> Result<Vec<f64>>,
    A: Fn(&[f64]) -> Vec<f64>,
{
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    v.iter_mut().for_each(|x| *x /= norm);
    let mut last = f64::NAN;
    for _ in 0..MAX_ITER {
        let w = solve(&v)?;
        let norm = w.iter().map(|x| x * x).sum::<f64>().sqrt();
        v = w.into_iter().map(|x| x / norm).collect();
        let av = apply(&v);
        let lambda: f64 = v.iter().zip(&av).map(|(p, q)| p * q).sum();
        if (lambda - last).abs() <= EIG_TOL * lambda.abs() {
            return Ok(lambda);
        }
        last = lambda;
    }
    Err(Error::NoConvergence(MAX_ITER))
}

fn conjugate_gradient<A>(apply: &A, rhs: &[f64], x0: &[f64]) -> Result<Vec<f64>>
where
    A: Fn(&[f64]) -> Vec<f64>,
{
    let n = rhs.len();
    let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(p, q)| p * q).sum::<f64>();
    let mut x = x0.to_vec();
    let ax = apply(&x);
    let mut r: Vec<f64> = rhs.iter().zip(&ax).map(|(b, a)| b - a).collect();
    let mut p = r.clone();
    let mut rr = dot(&r, &r);
    let target = 1e-24 * dot(rhs, rhs);
    for _ in 0..10 * n {
        if rr <= target {
            return Ok(x);
        }
        let ap = apply(&p);
        let alpha = rr / dot(&p, &ap);
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        let rr_new = dot(&r, &r);
        let beta = rr_new / rr;
        rr = rr_new;
        for i in 0..n {
            p[i] = r[i] + beta * p[i];
        }
    }
    Err(Error::NoConvergence(10 * n))
}

/// Max over interior nodes of `|((g²/2)Δ + b·∇) 1|` on the 1D grid; the
/// constant function is the zero-energy ground state of the generator.
pub fn generator_residual(model: &GroundStateModel, g: f64, radius: f64, grid_n: usize) -> Result<f64> {
    if model.dim() != 1 {
        return Err(Error::Unsupported("generator residual needs a 1D model".into()));
    }
    let h = 2.0 * radius / grid_n as f64;
    let one = vec![1.0; grid_n + 1];
    let mut worst: f64 = 0.0;
    for i in 1..grid_n {
        let x = -radius + i as f64 * h;
        let b = model.drift(&[x])?[0];
        let lap = (one[i + 1] - 2.0 * one[i] + one[i - 1]) / (h * h);
        let grad = (one[i + 1] - one[i - 1]) / (2.0 * h);
        worst = worst.max((0.5 * g * g * lap + b * grad).abs());
    }
    Ok(worst)
}
