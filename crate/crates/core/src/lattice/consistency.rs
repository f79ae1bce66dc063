//! Checks that heat-kernel plaquette densities are consistent under one step
//! of refinement: integrating the fine-lattice density over the new
//! variables reproduces the coarse density.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::group::{GroupElement, GroupKind};
use crate::heat_kernel::{
    beta_schedule, convolve_coeffs, tail_bound, truncation_cutoff, ClassFunctionCoeffs,
    HeatKernel, RefinementStep, DEFAULT_TAIL_TOL,
};
use crate::lattice::subdivision::{refine_plaquette, Letter, SubdivisionPattern, Symbol};
use crate::lattice::{Boundary, Lattice, LatticeSpec};

#[derive(Debug, Clone, Serialize)]
pub struct ConsistencyReport {
    pub kind: GroupKind,
    pub beta: f64,
    pub cutoff: u32,
    /// Coefficient residual of the fully integrated fine density against `K(·, β)`.
    pub residual: f64,
    /// Residual of the intermediate rectangle stage against `K(·, β/2)`.
    pub rect_residual: f64,
    /// `max |∫K(T_k, β/4) dμ_H − 1|` over the transverse slots.
    pub transverse_residual: f64,
    pub n_transverse: usize,
    /// Truncation tail bound of the fine kernels.
    pub tail: f64,
    pub chain: String,
}

impl ConsistencyReport {
    pub fn max_residual(&self) -> f64 {
        self.residual.max(self.rect_residual).max(self.transverse_residual)
    }

    pub fn passes(&self, tol: f64) -> bool {
        self.max_residual() <= tol + self.tail
    }
}

fn standard_pattern() -> Result<SubdivisionPattern> {
    let unit = Lattice::build(LatticeSpec::new(vec![2, 2], 0, Boundary::Open)?)?;
    refine_plaquette(&unit.plaquettes()[0])
}

fn letter_coeffs(q: &ClassFunctionCoeffs, l: &Letter) -> ClassFunctionCoeffs {
    if l.inverse {
        q.inverted()
    } else {
        q.clone()
    }
}

/// Integrates the subdivided plaquette's interior variables in character
/// space and compares with the coarse kernel.
pub fn consistency_check_exact(kind: GroupKind, beta: f64) -> Result<ConsistencyReport> {
    let pattern = standard_pattern()?;
    let telescoped = pattern.telescope()?;
    let fine_beta = beta_schedule(beta, RefinementStep::SquareToHalfSquare)?;
    let rect_beta = beta_schedule(beta, RefinementStep::SquareToRect)?;
    let cutoff = truncation_cutoff(kind, fine_beta, DEFAULT_TAIL_TOL);
    let fine = ClassFunctionCoeffs::heat_kernel(kind, fine_beta, cutoff);

    // the X_i substitutions leave one convolution per link of the chain
    let mut stages = Vec::with_capacity(telescoped.chain.len());
    let mut acc = letter_coeffs(&fine, &telescoped.chain[0]);
    stages.push(acc.clone());
    for l in &telescoped.chain[1..] {
        acc = convolve_coeffs(&acc, &letter_coeffs(&fine, l))?;
        stages.push(acc.clone());
    }
    let target = ClassFunctionCoeffs::heat_kernel(kind, beta, cutoff);
    let rect = ClassFunctionCoeffs::heat_kernel(kind, rect_beta, cutoff);
    let residual = acc.max_abs_diff(&target);
    let rect_residual = stages[1].max_abs_diff(&rect);

    let transverse: Vec<Symbol> = pattern
        .factors()
        .iter()
        .filter(|f| f.word.len() == 1 && matches!(f.word.0[0].symbol, Symbol::Transverse(_)))
        .map(|f| f.word.0[0].symbol)
        .collect();
    let transverse_residual = transverse
        .iter()
        .map(|_| (fine.haar_integral().re - 1.0).abs())
        .fold(0.0, f64::max);

    Ok(ConsistencyReport {
        kind,
        beta,
        cutoff,
        residual,
        rect_residual,
        transverse_residual,
        n_transverse: transverse.len(),
        tail: tail_bound(kind, fine_beta, cutoff),
        chain: crate::lattice::subdivision::Word(telescoped.chain).to_string(),
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct BoundaryRatio {
    pub ratio: f64,
    pub stderr: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct McConsistency {
    pub kind: GroupKind,
    pub beta: f64,
    pub n_samples: usize,
    /// One entry per boundary assignment; the first has all `G_i = e`.
    pub boundaries: Vec<BoundaryRatio>,
    /// Inverse-variance weighted mean ratio.
    pub ratio: f64,
    pub stderr: f64,
    /// Largest pairwise `|r_i − r_j| / √(σ_i² + σ_j²)`.
    pub max_pull: f64,
    pub constant: bool,
}

const N_BOUNDARIES: usize = 10;
const CHUNK: usize = 1 << 14;

/// Monte Carlo estimate of `∫ Π_i K(W_i, β/4) dμ_H(interior) / K(G1G2G3⁻¹G4⁻¹, β)`
/// at ten boundary assignments, with the interior variables Haar-sampled.
pub fn consistency_check_mc<R: Rng + ?Sized>(
    kind: GroupKind,
    beta: f64,
    n_samples: usize,
    rng: &mut R,
) -> Result<McConsistency> {
    if n_samples < 10_000 {
        return Err(invalid("n_samples", format!("must be >= 10000, got {n_samples}")));
    }
    let pattern = standard_pattern()?;
    let fine = HeatKernel::new(kind, beta_schedule(beta, RefinementStep::SquareToHalfSquare)?)?;
    let coarse = HeatKernel::new(kind, beta)?;

    let mut boundaries = Vec::with_capacity(N_BOUNDARIES);
    for b in 0..N_BOUNDARIES {
        let big: [GroupElement; 4] = if b == 0 {
            [kind.identity(); 4]
        } else {
            std::array::from_fn(|_| kind.haar_sample(rng))
        };
        let seed: u64 = rng.random();
        let denom = coarse.eval(&pattern.outer.evaluate(kind, |s| match s {
            Symbol::Boundary(i) => big[i as usize - 1],
            _ => kind.identity(),
        })?)?;

        let n_chunks = n_samples.div_ceil(CHUNK);
        let sums = (0..n_chunks)
            .into_par_iter()
            .map(|c| -> Result<(f64, f64)> {
                let mut local = ChaCha8Rng::seed_from_u64(seed);
                local.set_stream(c as u64);
                let n = CHUNK.min(n_samples - c * CHUNK);
                let (mut s1, mut s2) = (0.0, 0.0);
                for _ in 0..n {
                    let g: [GroupElement; 4] = std::array::from_fn(|_| kind.haar_sample(&mut local));
                    let y: [GroupElement; 4] = std::array::from_fn(|_| kind.haar_sample(&mut local));
                    let assign = |s: Symbol| match s {
                        Symbol::Half(i) => g[i as usize - 1],
                        Symbol::Interior(i) => y[i as usize - 1],
                        Symbol::Boundary(i) => big[i as usize - 1],
                        Symbol::Transverse(_) => kind.identity(),
                    };
                    let mut prod = 1.0;
                    for w in &pattern.sub_loops {
                        prod *= fine.value(&w.evaluate(kind, assign)?);
                    }
                    s1 += prod;
                    s2 += prod * prod;
                }
                Ok((s1, s2))
            })
            .collect::<Result<Vec<_>>>()?
            .into_iter()
            .fold((0.0, 0.0), |a, b| (a.0 + b.0, a.1 + b.1));

        let n = n_samples as f64;
        let mean = sums.0 / n;
        let var = (sums.1 / n - mean * mean).max(0.0) * n / (n - 1.0);
        let stderr = (var / n).sqrt() / denom;
        if !(stderr > 0.0 && stderr.is_finite()) {
            return Err(Error::DegenerateVariance);
        }
        boundaries.push(BoundaryRatio {
            ratio: mean / denom,
            stderr,
        });
    }

    let mut max_pull: f64 = 0.0;
    for (i, a) in boundaries.iter().enumerate() {
        for b in &boundaries[i + 1..] {
            let pull = (a.ratio - b.ratio).abs() / (a.stderr.hypot(b.stderr));
            max_pull = max_pull.max(pull);
        }
    }
    let wsum: f64 = boundaries.iter().map(|b| b.stderr.powi(-2)).sum();
    let ratio = boundaries.iter().map(|b| b.ratio * b.stderr.powi(-2)).sum::<f64>() / wsum;
    Ok(McConsistency {
        kind,
        beta,
        n_samples,
        boundaries,
        ratio,
        stderr: wsum.sqrt().recip(),
        max_pull,
        constant: max_pull <= 3.0,
    })
}
