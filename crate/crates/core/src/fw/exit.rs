//! Euler–Maruyama exit times of `dθ = b(θ) dt + g dW` from a domain around
//! the identity and principal-eigenvalue estimators built on them.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::fw::model::GroundStateModel;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DomainShape {
    /// `|θ| < R` (Euclidean).
    Ball,
    /// `max_i |θ_i| < R`.
    Cube,
}

impl DomainShape {
    pub fn contains(&self, x: &[f64], radius: f64) -> bool {
        match self {
            DomainShape::Ball => x.iter().map(|v| v * v).sum::<f64>() < radius * radius,
            DomainShape::Cube => x.iter().all(|v| v.abs() < radius),
        }
    }

    /// Fraction `s ∈ (0, 1]` of the step `x → y` at which the boundary is crossed.
    fn crossing(&self, x: &[f64], y: &[f64], radius: f64) -> f64 {
        match self {
            DomainShape::Ball => {
                // |x + s d|² = R²
                let d: Vec<f64> = y.iter().zip(x).map(|(a, b)| a - b).collect();
                let a: f64 = d.iter().map(|v| v * v).sum();
                let b: f64 = 2.0 * x.iter().zip(&d).map(|(p, q)| p * q).sum::<f64>();
                let c: f64 = x.iter().map(|v| v * v).sum::<f64>() - radius * radius;
                if a == 0.0 {
                    return 1.0;
                }
                let s = (-b + (b * b - 4.0 * a * c).max(0.0).sqrt()) / (2.0 * a);
                s.clamp(0.0, 1.0)
            }
            DomainShape::Cube => x
                .iter()
                .zip(y)
                .filter(|(_, b)| b.abs() >= radius)
                .map(|(a, b)| {
                    let target = radius * b.signum();
                    ((target - a) / (b - a)).clamp(0.0, 1.0)
                })
                .fold(1.0, f64::min),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SDEParams {
    pub g: f64,
    pub dt: f64,
    pub radius: f64,
    pub domain: DomainShape,
    pub max_steps: usize,
    pub n_traj: usize,
    pub seed: u64,
}

impl SDEParams {
    pub fn new(g: f64, dt: f64, radius: f64) -> Self {
        SDEParams {
            g,
            dt,
            radius,
            domain: DomainShape::Ball,
            max_steps: 10_000_000,
            n_traj: 2000,
            seed: 1,
        }
    }

    /// Checks the parameters against the model, including the step bound
    /// `dt ≤ R² / (100 · max(1, sup_D |b|))`.
    pub fn validate(&self, model: &GroundStateModel) -> Result<()> {
        if !(self.g >= 0.0 && self.g.is_finite()) {
            return Err(invalid("g", format!("must be >= 0, got {}", self.g)));
        }
        if !(self.radius > 0.0 && self.radius < model.max_radius()) {
            return Err(invalid(
                "radius",
                format!("must lie in (0, {}), got {}", model.max_radius(), self.radius),
            ));
        }
        if !(self.dt > 0.0) {
            return Err(invalid("dt", format!("must be > 0, got {}", self.dt)));
        }
        let bound = self.radius * self.radius / (100.0 * sup_drift(model, self.radius, self.domain)?.max(1.0));
        if self.dt > bound {
            return Err(invalid("dt", format!("{} exceeds the stability bound {bound:.3e}", self.dt)));
        }
        if self.max_steps == 0 || self.n_traj == 0 {
            return Err(invalid("max_steps", "max_steps and n_traj must be positive"));
        }
        Ok(())
    }
}

/// `sup |b|` over a deterministic sample of the closed domain.
pub fn sup_drift(model: &GroundStateModel, radius: f64, domain: DomainShape) -> Result<f64> {
    let dim = model.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let mut best: f64 = 0.0;
    let mut check = |x: &[f64]| -> Result<()> {
        let b = model.drift(x)?;
        best = best.max(b.iter().map(|v| v * v).sum::<f64>().sqrt());
        Ok(())
    };
    for i in 0..=200 {
        let t = -radius + 2.0 * radius * i as f64 / 200.0;
        for axis in 0..dim {
            let mut x = vec![0.0; dim];
            x[axis] = t;
            check(&x)?;
        }
    }
    if dim > 1 {
        for _ in 0..2000 {
            let mut x: Vec<f64> = (0..dim).map(|_| 2.0 * rng.random::<f64>() - 1.0).collect();
            if domain == DomainShape::Ball {
                let n = x.iter().map(|v| v * v).sum::<f64>().sqrt().max(1e-12);
                let r: f64 = rng.random::<f64>();
                x.iter_mut().for_each(|v| *v *= radius * r / n);
            } else {
                x.iter_mut().for_each(|v| *v *= radius);
            }
            check(&x)?;
        }
    }
    Ok(best)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExitRecord {
    pub tau: f64,
    pub exit_point: Vec<f64>,
    pub steps: usize,
    pub censored: bool,
}

/// Simulates one trajectory from `theta0` until it leaves the domain or
/// `max_steps` is reached. Parameters are assumed validated.
pub fn euler_maruyama_exit<R: Rng + ?Sized>(
    model: &GroundStateModel,
    params: &SDEParams,
    rng: &mut R,
    theta0: &[f64],
) -> Result<ExitRecord> {
    if !params.domain.contains(theta0, params.radius) {
        return Err(invalid("theta0", "start point must lie inside the domain"));
    }
    let dim = theta0.len();
    let sq = params.g * params.dt.sqrt();
    let mut x = theta0.to_vec();
    let mut y = vec![0.0; dim];
    for step in 1..=params.max_steps {
        let b = model.drift(&x)?;
        for i in 0..dim {
            let xi: f64 = rng.sample(StandardNormal);
            y[i] = x[i] + b[i] * params.dt + sq * xi;
        }
        if !params.domain.contains(&y, params.radius) {
            let s = params.domain.crossing(&x, &y, params.radius);
            let exit_point = x.iter().zip(&y).map(|(a, c)| a + s * (c - a)).collect();
            return Ok(ExitRecord {
                tau: (step as f64 - 1.0 + s) * params.dt,
                exit_point,
                steps: step,
                censored: false,
            });
        }
        std::mem::swap(&mut x, &mut y);
    }
    Ok(ExitRecord {
        tau: params.max_steps as f64 * params.dt,
        exit_point: x,
        steps: params.max_steps,
        censored: true,
    })
}

/// Runs `n_traj` trajectories in parallel, trajectory `i` on stream `i` of
/// the seed; records are returned in trajectory order.
pub fn run_exits(
    model: &GroundStateModel,
    params: &SDEParams,
    theta0: &[f64],
) -> Result<Vec<ExitRecord>> {
    params.validate(model)?;
    (0..params.n_traj)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
            rng.set_stream(i as u64);
            euler_maruyama_exit(model, params, &mut rng, theta0)
        })
        .collect()
}

pub const MIN_UNCENSORED: usize = 1000;
pub const MAX_CENSORED_FRACTION: f64 = 0.05;

#[derive(Debug, Clone, Serialize)]
pub struct EigenEstimate {
    pub lambda: f64,
    pub stderr: f64,
    /// Survival-fit window `[t_start, t_end]`.
    pub window: (f64, f64),
    pub r2: f64,
    pub n_tail: usize,
    pub censored_fraction: f64,
    /// Secondary MGF-threshold estimate, if it could be formed.
    pub mgf: Option<(f64, f64)>,
}

impl EigenEstimate {
    /// Whether the two estimators agree within `k` combined standard errors.
    pub fn estimators_agree(&self, k: f64) -> Option<bool> {
        self.mgf
            .map(|(l, e)| (l - self.lambda).abs() <= k * e.hypot(self.stderr))
    }
}

/// Empirical survival `(τ_(i), P(τ > τ_(i)))` with censored
/// records counted as surviving past every uncensored time.
pub fn survival_curve(records: &[ExitRecord]) -> Vec<(f64, f64)> {
    let n = records.len() as f64;
    let mut taus: Vec<f64> = records.iter().filter(|r| !r.censored).map(|r| r.tau).collect();
    taus.sort_by(f64::total_cmp);
    taus.iter()
        .enumerate()
        .map(|(i, &t)| (t, (n - (i + 1) as f64) / n))
        .collect()
}

/// Ordinary least squares `(slope, intercept, r²)`.
pub(crate) fn ols(xs: &[f64], ys: &[f64]) -> (f64, f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let r2 = if syy > 0.0 { sxy * sxy / (sxx * syy) } else { 1.0 };
    (slope, my - slope * mx, r2)
}

/// Exponential-tail fit of the survival function, with the MGF-threshold
/// estimate as a cross-check.
pub fn eigenvalue_from_exits(records: &[ExitRecord]) -> Result<EigenEstimate> {
    let n = records.len();
    let n_cens = records.iter().filter(|r| r.censored).count();
    let fraction = n_cens as f64 / n.max(1) as f64;
    if n - n_cens < MIN_UNCENSORED {
        return Err(Error::TooFewSamples {
            needed: MIN_UNCENSORED,
            have: n - n_cens,
        });
    }
    if fraction > MAX_CENSORED_FRACTION {
        return Err(Error::TooMuchCensoring { fraction });
    }
    let surv = survival_curve(records);
    let m = surv.len();
    let keep = (n / 100).max(10);
    // the window stops where `keep` samples remain in total
    let end = (n - keep).min(m).saturating_sub(1);
    let min_beyond = m / 10;

    let mut fit = None;
    for q in (0..=14).map(|k| 0.2 + 0.05 * k as f64) {
        let start = (q * m as f64) as usize;
        if m - start < min_beyond || start + 10 > end {
            break;
        }
        let (xs, ys): (Vec<f64>, Vec<f64>) = surv[start..end]
            .iter()
            .map(|&(t, s)| (t, s.ln()))
            .unzip();
        let (slope, _, r2) = ols(&xs, &ys);
        if r2 >= 0.99 && slope < 0.0 {
            fit = Some((start, -slope, r2));
            break;
        }
    }
    let (start, lambda, r2) = fit.ok_or(Error::NoLinearTail)?;
    let n_tail = n - start;
    let t0 = surv[start].0;
    let t1 = surv[end].0;
    Ok(EigenEstimate {
        lambda,
        stderr: lambda / (n_tail as f64).sqrt(),
        window: (t0, t1),
        r2,
        n_tail,
        censored_fraction: fraction,
        mgf: mgf_threshold(records, t0, t1),
    })
}

/// Trend of `ln I_k(λ)` over equal time bins of `[t0, t1]`, where
/// `I_k(λ) = Σ_{τ_i ∈ bin k} e^{λ(τ_i − t0)}`. The truncated MGF stops
/// growing geometrically across bins exactly at the decay rate of the tail.
fn mgf_trend(taus: &[f64], lambda: f64, t0: f64, t1: f64, bins: usize) -> Option<f64> {
    let width = (t1 - t0) / bins as f64;
    let mut sums = vec![0.0; bins];
    for &t in taus {
        if t >= t0 && t < t1 {
            let k = (((t - t0) / width) as usize).min(bins - 1);
            sums[k] += (lambda * (t - t0)).exp();
        }
    }
    let (xs, ys): (Vec<f64>, Vec<f64>) = sums
        .iter()
        .enumerate()
        .filter(|(_, s)| **s > 0.0)
        .map(|(k, s)| ((k as f64 + 0.5) * width, s.ln()))
        .unzip();
    if xs.len() < 3 {
        return None;
    }
    Some(ols(&xs, &ys).0)
}

fn mgf_root(taus: &[f64], t0: f64, t1: f64) -> Option<f64> {
    let bins = 10;
    let span = t1 - t0;
    let (mut lo, mut hi) = (0.0, 50.0 / span);
    if mgf_trend(taus, lo, t0, t1, bins)? >= 0.0 || mgf_trend(taus, hi, t0, t1, bins)? <= 0.0 {
        return None;
    }
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if mgf_trend(taus, mid, t0, t1, bins)? < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Some(0.5 * (lo + hi))
}

/// Largest `λ` for which the truncated empirical MGF is not growing, with a
/// 20-block jackknife error.
pub fn mgf_threshold(records: &[ExitRecord], t0: f64, t1: f64) -> Option<(f64, f64)> {
    let taus: Vec<f64> = records.iter().filter(|r| !r.censored).map(|r| r.tau).collect();
    let est = mgf_root(&taus, t0, t1)?;
    let blocks = 20;
    let size = taus.len() / blocks;
    let mut reps = Vec::with_capacity(blocks);
    for b in 0..blocks {
        let sub: Vec<f64> = taus
            .iter()
            .enumerate()
            .filter(|(i, _)| i / size != b)
            .map(|(_, &t)| t)
            .collect();
        reps.push(mgf_root(&sub, t0, t1)?);
    }
    let mean = reps.iter().sum::<f64>() / blocks as f64;
    let var = reps.iter().map(|r| (r - mean).powi(2)).sum::<f64>() * (blocks - 1) as f64 / blocks as f64;
    Some((est, var.sqrt()))
}
