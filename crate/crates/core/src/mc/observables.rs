//! Wilson loops, temporal plaquette correlators and mass-gap fits.

use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::group::{GroupKind, Irrep};
use crate::lattice::{Lattice, LatticeSpec};
use crate::mc::metropolis::{run_chains, ChainOutput, MCParams};
use crate::mc::stats::{block_means, jackknife, ObservableSeries, MIN_BLOCKS};

/// Merges chain outputs in chain order into one series per observable.
pub fn merge_series(outputs: &[ChainOutput], n_obs: usize) -> Vec<Vec<f64>> {
    let mut series = vec![Vec::new(); n_obs];
    for out in outputs {
        for m in &out.measurements {
            for (s, v) in series.iter_mut().zip(m) {
                s.push(*v);
            }
        }
    }
    series
}

#[derive(Debug, Clone, Serialize)]
pub struct WilsonResult {
    pub r: usize,
    pub t: usize,
    pub irrep: Irrep,
    pub mean: f64,
    pub stderr: f64,
    pub n_measurements: usize,
    pub n_loops: usize,
    pub acceptance: f64,
    #[serde(skip)]
    pub series: Vec<f64>,
}

/// Base sites and planes of every `r × t` rectangle that fits in the lattice.
fn fitting_loops(lattice: &Lattice, r: usize, t: usize) -> Vec<Vec<(usize, bool)>> {
    let mut loops = Vec::new();
    for site in 0..lattice.n_sites() {
        for a in 0..lattice.dim() {
            for b in (a + 1)..lattice.dim() {
                if let Ok(path) = lattice.rectangle_loop(site, a, b, r, t) {
                    loops.push(path);
                }
            }
        }
    }
    loops
}

/// `⟨(1/d_λ) Re χ_λ(W)⟩` for `r × t` rectangular loops, averaged over every
/// position and plane where the loop fits.
pub fn expectation_wilson(
    spec: &LatticeSpec,
    kind: GroupKind,
    params: &MCParams,
    (r, t): (usize, usize),
    irrep: Irrep,
) -> Result<WilsonResult> {
    if irrep.kind() != kind {
        return Err(Error::KindMismatch {
            expected: kind,
            found: irrep.kind(),
        });
    }
    let lattice = Lattice::build(spec.clone())?;
    let loops = fitting_loops(&lattice, r, t);
    if loops.is_empty() {
        return Err(Error::LoopDoesNotFit { r, t });
    }
    let d = irrep.dim() as f64;
    let outputs = run_chains(&lattice, kind, params, |chain| {
        let mut sum = 0.0;
        for path in &loops {
            sum += irrep.character(&chain.config.path_product(path)?)?.re / d;
        }
        Ok(vec![sum / loops.len() as f64])
    })?;
    let series = merge_series(&outputs, 1).remove(0);
    let n = series.len();
    let stats = ObservableSeries::new(format!("wilson_{r}x{t}"), series, MIN_BLOCKS)?;
    Ok(WilsonResult {
        r,
        t,
        irrep,
        mean: stats.mean,
        stderr: stats.stderr,
        n_measurements: n,
        n_loops: loops.len(),
        acceptance: outputs.iter().map(|o| o.acceptance).sum::<f64>() / outputs.len() as f64,
        series: stats.values,
    })
}

/// Exact 2D open-boundary Wilson loop: `e^{−c(λ) β · area}`.
pub fn exact_2d_wilson(irrep: Irrep, area: usize, beta: f64) -> f64 {
    (-irrep.casimir() * beta * area as f64).exp()
}

#[derive(Debug, Clone, Serialize)]
pub struct CorrelatorResult {
    pub t: Vec<usize>,
    pub c: Vec<f64>,
    pub stderr: Vec<f64>,
    pub n_measurements: usize,
    /// Leave-one-block-out replicas of `c`, one vector per block.
    #[serde(skip)]
    pub replicas: Option<Vec<Vec<f64>>>,
}

impl CorrelatorResult {
    /// A correlator without jackknife replicas (e.g. synthetic input).
    pub fn from_values(c: Vec<f64>, stderr: Vec<f64>) -> Self {
        CorrelatorResult {
            t: (0..c.len()).collect(),
            c,
            stderr,
            n_measurements: 0,
            replicas: None,
        }
    }
}

/// Connected correlator of the plaquette operator `(1/d) Re χ_fund(U_□)` in
/// plane `(0, 1)` along the last (time) axis, averaged over spatial
/// locations and time translations.
pub fn temporal_correlator(
    spec: &LatticeSpec,
    kind: GroupKind,
    params: &MCParams,
    t_max: usize,
) -> Result<CorrelatorResult> {
    let lattice = Lattice::build(spec.clone())?;
    let time = spec.dim - 1;
    let lt = spec.extents[time];
    if lt < 2 * t_max {
        return Err(invalid(
            "t_max",
            format!("time extent {lt} must be at least 2·t_max = {}", 2 * t_max),
        ));
    }
    // operator columns: plaquettes at the same spatial location, ordered in time
    let mut columns: Vec<Vec<usize>> = Vec::new();
    for site in 0..lattice.n_sites() {
        if lattice.site_coords(site)[time] != 0 {
            continue;
        }
        let mut col = Vec::with_capacity(lt);
        let mut cur = Some(site);
        for _ in 0..lt {
            let Some(s) = cur else { break };
            match lattice.plaquette_at(s, 0, 1) {
                Some(p) => col.push(p),
                None => break,
            }
            cur = lattice.shift(s, time, 1);
        }
        if !col.is_empty() {
            columns.push(col);
        }
    }
    let periodic = spec.boundary == crate::lattice::Boundary::Periodic;
    let fund = kind.fundamental_irrep();
    let d = fund.dim() as f64;

    // observables: [mean O, A_0, ..., A_tmax] with A_t the averaged product at lag t
    let outputs = run_chains(&lattice, kind, params, |chain| {
        let mut out = vec![0.0; t_max + 2];
        let (mut n_o, mut n_pairs) = (0usize, vec![0usize; t_max + 1]);
        for col in &columns {
            let o: Vec<f64> = col
                .iter()
                .map(|&p| {
                    let u = chain.config.plaquette_product(&chain.lattice().plaquettes()[p])?;
                    Ok(fund.character(&u)?.re / d)
                })
                .collect::<Result<_>>()?;
            let len = o.len();
            out[0] += o.iter().sum::<f64>();
            n_o += len;
            for t in 0..=t_max {
                for tau in 0..len {
                    let j = tau + t;
                    let other = if j < len {
                        o[j]
                    } else if periodic && len == lt {
                        o[j % len]
                    } else {
                        continue;
                    };
                    out[t + 1] += o[tau] * other;
                    n_pairs[t] += 1;
                }
            }
        }
        out[0] /= n_o as f64;
        for t in 0..=t_max {
            out[t + 1] /= n_pairs[t].max(1) as f64;
        }
        Ok(out)
    })?;

    let series = merge_series(&outputs, t_max + 2);
    let n = series[0].len();
    let means: Vec<Vec<f64>> = series
        .iter()
        .map(|s| block_means(s, MIN_BLOCKS))
        .collect::<Result<_>>()?;
    let blocks: Vec<Vec<f64>> = (0..MIN_BLOCKS)
        .map(|b| means.iter().map(|m| m[b]).collect())
        .collect();
    let mut c = Vec::with_capacity(t_max + 1);
    let mut stderr = Vec::with_capacity(t_max + 1);
    let mut replicas: Vec<Vec<f64>> = (0..MIN_BLOCKS).map(|_| Vec::with_capacity(t_max + 1)).collect();
    for t in 0..=t_max {
        let (v, e, reps) = jackknife(&blocks, |m| Some(m[t + 1] - m[0] * m[0]))
            .ok_or(Error::DegenerateVariance)?;
        c.push(v);
        stderr.push(e);
        for (r, x) in replicas.iter_mut().zip(reps) {
            r.push(x);
        }
    }
    Ok(CorrelatorResult {
        t: (0..=t_max).collect(),
        c,
        stderr,
        n_measurements: n,
        replicas: Some(replicas),
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct EffectiveMass {
    pub t: usize,
    pub m_eff: f64,
    pub stderr: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct MassGapResult {
    pub m_eff: Vec<EffectiveMass>,
    /// `None` when the gap is undefined.
    pub m: Option<f64>,
    pub stderr: Option<f64>,
    /// True when consecutive effective masses agree within 2σ over the fit window.
    pub plateau: bool,
    pub window: Option<(usize, usize)>,
    pub reason: Option<String>,
}

impl MassGapResult {
    pub fn gap_defined(&self) -> bool {
        self.m.is_some()
    }

    fn undefined(m_eff: Vec<EffectiveMass>, reason: String) -> Self {
        MassGapResult {
            m_eff,
            m: None,
            stderr: None,
            plateau: false,
            window: None,
            reason: Some(reason),
        }
    }
}

fn usable(c: f64, err: f64) -> bool {
    c > 0.0 && (err == 0.0 || c >= 2.0 * err)
}

/// Effective masses and a single-exponential fit over the plateau window.
///
/// Only the leading run of separations with `C(t) > 0` and `C(t) ≥ 2σ` is
/// used; fewer than three such points leaves the gap undefined.
pub fn mass_gap_fit(corr: &CorrelatorResult) -> MassGapResult {
    let n_usable = corr
        .c
        .iter()
        .zip(&corr.stderr)
        .take_while(|(c, e)| usable(**c, **e))
        .count();

    let m_eff: Vec<EffectiveMass> = (0..n_usable.saturating_sub(1))
        .map(|i| {
            let m = (corr.c[i] / corr.c[i + 1]).ln();
            let stderr = match &corr.replicas {
                Some(reps) => {
                    let vals: Vec<f64> = reps
                        .iter()
                        .map(|r| {
                            if r[i] > 0.0 && r[i + 1] > 0.0 {
                                (r[i] / r[i + 1]).ln()
                            } else {
                                f64::NAN
                            }
                        })
                        .collect();
                    let n = vals.len() as f64;
                    let mean = vals.iter().sum::<f64>() / n;
                    (vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() * (n - 1.0) / n).sqrt()
                }
                None => (corr.stderr[i] / corr.c[i]).hypot(corr.stderr[i + 1] / corr.c[i + 1]),
            };
            EffectiveMass {
                t: corr.t[i],
                m_eff: m,
                stderr,
            }
        })
        .collect();

    if n_usable < 3 {
        return MassGapResult::undefined(
            m_eff,
            format!("only {n_usable} usable correlator points (need 3); gap undefined"),
        );
    }
    if m_eff.iter().any(|m| !m.stderr.is_finite()) {
        return MassGapResult::undefined(m_eff, "effective mass error undefined; gap undefined".into());
    }

    // earliest start from which all consecutive effective masses agree
    let agree = |a: &EffectiveMass, b: &EffectiveMass| {
        let tol = 2.0 * a.stderr.hypot(b.stderr) + 1e-9 * a.m_eff.abs().max(b.m_eff.abs());
        (a.m_eff - b.m_eff).abs() <= tol
    };
    let start = (0..m_eff.len().saturating_sub(1))
        .find(|&s| m_eff[s..].windows(2).all(|w| agree(&w[0], &w[1])));

    let Some(start) = start else {
        let last = m_eff.last().expect("at least two effective masses");
        return MassGapResult {
            m: Some(last.m_eff),
            stderr: Some(last.stderr),
            plateau: false,
            window: Some((last.t, last.t + 1)),
            reason: Some("no plateau; last effective mass reported".into()),
            m_eff,
        };
    };

    // weighted least squares of ln C(t) = a − m t over the window
    let idx: Vec<usize> = (start..n_usable).collect();
    let pts: Vec<(f64, f64, f64)> = idx
        .iter()
        .map(|&i| {
            let w = if corr.stderr[i] > 0.0 {
                (corr.c[i] / corr.stderr[i]).powi(2)
            } else {
                1.0
            };
            (corr.t[i] as f64, corr.c[i].ln(), w)
        })
        .collect();
    let sw: f64 = pts.iter().map(|p| p.2).sum();
    let sx: f64 = pts.iter().map(|p| p.2 * p.0).sum();
    let sy: f64 = pts.iter().map(|p| p.2 * p.1).sum();
    let sxx: f64 = pts.iter().map(|p| p.2 * p.0 * p.0).sum();
    let sxy: f64 = pts.iter().map(|p| p.2 * p.0 * p.1).sum();
    let det = sw * sxx - sx * sx;
    let slope = (sw * sxy - sx * sy) / det;
    let all_exact = corr.stderr[start..n_usable].iter().all(|&e| e == 0.0);
    let fit_err = if all_exact {
        // unweighted: scale the covariance by the residual variance
        let icpt = (sy - slope * sx) / sw;
        let rss: f64 = pts.iter().map(|p| (p.1 - icpt - slope * p.0).powi(2)).sum();
        let dof = (pts.len() as f64 - 2.0).max(1.0);
        (rss / dof * sw / det).sqrt()
    } else {
        (sw / det).sqrt()
    };
    MassGapResult {
        m: Some(-slope),
        stderr: Some(fit_err),
        plateau: true,
        window: Some((corr.t[start], corr.t[n_usable - 1])),
        reason: None,
        m_eff,
    }
}
