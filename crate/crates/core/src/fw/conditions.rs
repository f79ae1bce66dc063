//! Numerical checks of the conditions on the drift: a single ω-limit set of
//! the flow `dθ/dt = b`, inward-pointing drift on `∂D`, Lipschitz continuity,
//! and the invariant measure of the diffusion.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::Serialize;
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::error::{invalid, Error, Result};
use crate::fw::model::GroundStateModel;

pub const CLUSTER_TOL: f64 = 1e-4;
const FLOW_TOL: f64 = 1e-10;
const FLOW_T_MAX: f64 = 1e4;

/// Deterministic points on the sphere `|θ| = R` in `dim` coordinates.
pub fn sphere_points(dim: usize, radius: f64, n: usize) -> Vec<Vec<f64>> {
    match dim {
        1 => vec![vec![-radius], vec![radius]],
        2 => (0..n)
            .map(|k| {
                let a = std::f64::consts::TAU * k as f64 / n as f64;
                vec![radius * a.cos(), radius * a.sin()]
            })
            .collect(),
        3 => {
            // Fibonacci lattice
            let golden = std::f64::consts::PI * (3.0 - 5f64.sqrt());
            (0..n)
                .map(|k| {
                    let z = 1.0 - 2.0 * (k as f64 + 0.5) / n as f64;
                    let r = (1.0 - z * z).sqrt();
                    let a = golden * k as f64;
                    vec![radius * r * a.cos(), radius * r * a.sin(), radius * z]
                })
                .collect()
        }
        _ => {
            let mut rng = ChaCha8Rng::seed_from_u64(0);
            (0..n)
                .map(|_| {
                    let v: Vec<f64> = (0..dim).map(|_| rng.sample(StandardNormal)).collect();
                    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
                    v.iter().map(|x| radius * x / norm).collect()
                })
                .collect()
        }
    }
}

fn norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// Integrates `dθ/dt = b(θ)` with an adaptive Bogacki–Shampine 3(2) pair
/// until `|b| < 1e−10` or `t = 10⁴`. Returns the end point and whether the
/// flow came to rest.
pub fn flow_to_rest(model: &GroundStateModel, x0: &[f64]) -> Result<(Vec<f64>, bool)> {
    let n = x0.len();
    let mut x = x0.to_vec();
    let mut t = 0.0;
    let mut h: f64 = 1e-2;
    let mut k1 = model.drift(&x)?;
    let axpy = |x: &[f64], terms: &[(f64, &Vec<f64>)]| -> Vec<f64> {
        (0..n)
            .map(|i| x[i] + terms.iter().map(|(c, k)| c * k[i]).sum::<f64>())
            .collect()
    };
    while t < FLOW_T_MAX {
        if norm(&k1) < FLOW_TOL {
            return Ok((x, true));
        }
        let k2 = model.drift(&axpy(&x, &[(0.5 * h, &k1)]))?;
        let k3 = model.drift(&axpy(&x, &[(0.75 * h, &k2)]))?;
        let y = axpy(&x, &[(2.0 * h / 9.0, &k1), (h / 3.0, &k2), (4.0 * h / 9.0, &k3)]);
        let k4 = model.drift(&y)?;
        let z = axpy(
            &x,
            &[(7.0 * h / 24.0, &k1), (h / 4.0, &k2), (h / 3.0, &k3), (h / 8.0, &k4)],
        );
        let err = y.iter().zip(&z).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        let tol = 1e-10 * (1.0 + norm(&x));
        if err <= tol {
            t += h;
            x = y;
            k1 = k4;
        }
        let factor = if err > 0.0 { 0.9 * (tol / err).powf(1.0 / 3.0) } else { 5.0 };
        h *= factor.clamp(0.2, 5.0);
        h = h.min(10.0);
    }
    Ok((x, false))
}

/// Groups points whose distance is below `tol`; returns one representative
/// (the running mean) per cluster.
pub fn cluster(points: &[Vec<f64>], tol: f64) -> Vec<Vec<f64>> {
    let mut reps: Vec<(Vec<f64>, usize)> = Vec::new();
    for p in points {
        match reps
            .iter_mut()
            .find(|(r, _)| r.iter().zip(p).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt() < tol)
        {
            Some((r, count)) => {
                *count += 1;
                let c = *count as f64;
                r.iter_mut().zip(p).for_each(|(a, b)| *a += (b - *a) / c);
            }
            None => reps.push((p.clone(), 1)),
        }
    }
    reps.into_iter().map(|(r, _)| r).collect()
}

/// Uniform point in the ball `|θ| < R`.
fn ball_point<R: Rng + ?Sized>(rng: &mut R, dim: usize, radius: f64) -> Vec<f64> {
    let v: Vec<f64> = (0..dim).map(|_| rng.sample(StandardNormal)).collect();
    let nv = norm(&v).max(1e-300);
    let r = radius * rng.random::<f64>().powf(1.0 / dim as f64);
    v.iter().map(|x| r * x / nv).collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct OmegaReport {
    pub n_starts: usize,
    pub limit_points: Vec<Vec<f64>>,
    /// Starts whose flow did not come to rest.
    pub unconverged: usize,
    pub boundary_points: usize,
    /// Boundary points where `b · ν_in ≤ 0`.
    pub inward_violations: usize,
    /// Largest `|θ|` among the limit points.
    pub max_limit_norm: f64,
}

impl OmegaReport {
    pub fn n_limit_sets(&self) -> usize {
        self.limit_points.len()
    }

    /// Exactly one limit set, at the identity, and inward drift on `∂D`.
    pub fn passes(&self) -> bool {
        self.n_limit_sets() == 1
            && self.max_limit_norm < 1e-6
            && self.inward_violations == 0
            && self.unconverged == 0
    }
}

pub fn omega_limit_check<R: Rng + ?Sized>(
    model: &GroundStateModel,
    radius: f64,
    n_starts: usize,
    rng: &mut R,
) -> Result<OmegaReport> {
    if !(radius > 0.0 && radius < model.max_radius()) {
        return Err(invalid("radius", format!("must lie in (0, {})", model.max_radius())));
    }
    if n_starts == 0 {
        return Err(invalid("n_starts", "must be positive"));
    }
    let dim = model.dim();
    let starts: Vec<Vec<f64>> = (0..n_starts).map(|_| ball_point(rng, dim, radius)).collect();
    let ends = starts
        .par_iter()
        .map(|s| flow_to_rest(model, s))
        .collect::<Result<Vec<_>>>()?;
    let unconverged = ends.iter().filter(|(_, ok)| !ok).count();
    let finals: Vec<Vec<f64>> = ends.into_iter().map(|(x, _)| x).collect();
    let limit_points = cluster(&finals, CLUSTER_TOL);
    let max_limit_norm = limit_points.iter().map(|p| norm(p)).fold(0.0, f64::max);

    let boundary = sphere_points(dim, radius, 720);
    let mut inward_violations = 0;
    for p in &boundary {
        let b = model.drift(p)?;
        let inward: f64 = -b.iter().zip(p).map(|(a, c)| a * c).sum::<f64>() / radius;
        if inward <= 0.0 {
            inward_violations += 1;
        }
    }
    Ok(OmegaReport {
        n_starts,
        limit_points,
        unconverged,
        boundary_points: boundary.len(),
        inward_violations,
        max_limit_norm,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct LipschitzReport {
    /// Largest difference quotient at `grid_n` and `2·grid_n` points per axis.
    pub l_coarse: f64,
    pub l_fine: f64,
    pub ratio: f64,
    /// Hölder exponent from the largest neighbour difference at spacing `h`
    /// and `h/2`; `None` for a constant drift.
    pub alpha: Option<f64>,
    pub pass: bool,
}

/// `(max |b(x)−b(y)|/|x−y|, max |b(x)−b(y)|)` over axis neighbours of a grid
/// with `n` points per axis on `[−R, R]^dim`, restricted to the ball.
fn neighbour_differences(model: &GroundStateModel, radius: f64, n: usize) -> Result<(f64, f64)> {
    let dim = model.dim();
    let h = 2.0 * radius / (n - 1) as f64;
    let total = n.checked_pow(dim as u32).ok_or(Error::IndexOverflow)?;
    let point = |mut idx: usize| -> Vec<f64> {
        let mut x = vec![0.0; dim];
        for xi in x.iter_mut() {
            *xi = -radius + (idx % n) as f64 * h;
            idx /= n;
        }
        x
    };
    let inside = |x: &[f64]| norm(x) <= radius * (1.0 + 1e-12);
    let drift: Vec<Option<Vec<f64>>> = (0..total)
        .into_par_iter()
        .map(|i| {
            let x = point(i);
            if inside(&x) {
                model.drift(&x).map(Some)
            } else {
                Ok(None)
            }
        })
        .collect::<Result<_>>()?;
    let (mut slope, mut jump): (f64, f64) = (0.0, 0.0);
    for i in 0..total {
        let Some(bi) = &drift[i] else { continue };
        let mut stride = 1;
        for _ in 0..dim {
            if (i / stride) % n + 1 < n {
                if let Some(bj) = &drift[i + stride] {
                    let d = norm(&bi.iter().zip(bj).map(|(a, b)| a - b).collect::<Vec<_>>());
                    jump = jump.max(d);
                    slope = slope.max(d / h);
                }
            }
            stride *= n;
        }
    }
    Ok((slope, jump))
}

pub fn lipschitz_check(model: &GroundStateModel, radius: f64, grid_n: usize) -> Result<LipschitzReport> {
    if grid_n < 3 {
        return Err(invalid("grid_n", format!("must be >= 3, got {grid_n}")));
    }
    if !(radius > 0.0 && radius < model.max_radius()) {
        return Err(invalid("radius", format!("must lie in (0, {})", model.max_radius())));
    }
    // 2n−1 points halve the spacing exactly
    let (l_coarse, j_coarse) = neighbour_differences(model, radius, grid_n)?;
    let (l_fine, j_fine) = neighbour_differences(model, radius, 2 * grid_n - 1)?;
    let (ratio, alpha) = if l_coarse == 0.0 && l_fine == 0.0 {
        (1.0, None)
    } else {
        (l_fine / l_coarse, Some((j_coarse / j_fine).log2()))
    };
    Ok(LipschitzReport {
        l_coarse,
        l_fine,
        ratio,
        alpha,
        pass: l_fine.is_finite() && (ratio - 1.0).abs() <= 0.1,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct InvariantMeasureReport {
    pub n_samples: usize,
    pub n_bins: usize,
    pub chi2: f64,
    pub dof: usize,
    pub p_value: f64,
}

impl InvariantMeasureReport {
    pub fn passes(&self) -> bool {
        self.p_value > 0.01
    }
}

/// Histogram of a reflected diffusion on `(−R, R)` against the density
/// `|Ψ₀|^{2/g²}`, which is invariant for `dθ = b dt + g dW`.
///
/// `n_chains` independent trajectories are thinned to one sample per
/// `spacing` time units, long enough for the samples to decorrelate.
#[allow(clippy::too_many_arguments)]
pub fn invariant_measure_check(
    model: &GroundStateModel,
    g: f64,
    radius: f64,
    dt: f64,
    spacing: f64,
    samples_per_chain: usize,
    n_chains: usize,
    n_bins: usize,
    seed: u64,
) -> Result<InvariantMeasureReport> {
    if model.dim() != 1 {
        return Err(Error::Unsupported("invariant-measure histogram needs a 1D model".into()));
    }
    if !(g > 0.0 && dt > 0.0 && spacing >= dt && radius > 0.0) || n_bins < 2 {
        return Err(invalid("invariant_measure", "need g, dt, radius > 0, spacing >= dt, n_bins >= 2"));
    }
    let thin = (spacing / dt).round() as usize;
    let reflect = |mut y: f64| {
        while y.abs() >= radius {
            y = y.signum() * 2.0 * radius - y;
        }
        y
    };
    let counts: Vec<Vec<u64>> = (0..n_chains)
        .into_par_iter()
        .map(|c| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(c as u64);
            let mut x = radius * (2.0 * rng.random::<f64>() - 1.0);
            let mut hist = vec![0u64; n_bins];
            let sq = g * dt.sqrt();
            // burn-in of one spacing
            for s in 0..(samples_per_chain + 1) * thin {
                let xi: f64 = rng.sample(StandardNormal);
                x = reflect(x + model.drift(&[x])?[0] * dt + sq * xi);
                if s >= thin && (s + 1) % thin == 0 {
                    let k = (((x + radius) / (2.0 * radius)) * n_bins as f64) as usize;
                    hist[k.min(n_bins - 1)] += 1;
                }
            }
            Ok(hist)
        })
        .collect::<Result<_>>()?;
    let mut hist = vec![0u64; n_bins];
    for h in &counts {
        hist.iter_mut().zip(h).for_each(|(a, b)| *a += b);
    }
    let n: u64 = hist.iter().sum();
    // bin probabilities by Simpson's rule on each bin
    let w = 2.0 * radius / n_bins as f64;
    let mut probs = Vec::with_capacity(n_bins);
    for k in 0..n_bins {
        let a = -radius + k as f64 * w;
        let mut s = 0.0;
        let sub = 16;
        for j in 0..=sub {
            let x = a + w * j as f64 / sub as f64;
            let c = if j == 0 || j == sub { 1.0 } else if j % 2 == 1 { 4.0 } else { 2.0 };
            s += c * (model.log_density(&[x])? / (g * g)).exp();
        }
        probs.push(s * w / (3.0 * sub as f64));
    }
    let z: f64 = probs.iter().sum();
    let chi2: f64 = hist
        .iter()
        .zip(&probs)
        .map(|(&o, p)| {
            let e = n as f64 * p / z;
            (o as f64 - e).powi(2) / e
        })
        .sum();
    let dof = n_bins - 1;
    let p_value = ChiSquared::new(dof as f64)
        .map_err(|e| invalid("dof", e.to_string()))?
        .sf(chi2);
    Ok(InvariantMeasureReport {
        n_samples: n as usize,
        n_bins,
        chi2,
        dof,
        p_value,
    })
}
