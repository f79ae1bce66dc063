//! Single-edge Metropolis sampling of `e^{−S}` with `S = −Σ_□ ln K(U_□, β)`.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{invalid, Result};
use crate::group::{GroupElement, GroupKind};
use crate::heat_kernel::HeatKernel;
use crate::lattice::{FieldConfig, Lattice, PlaquetteRef};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MCParams {
    pub beta: f64,
    pub n_therm: usize,
    pub n_measure: usize,
    pub measure_every: usize,
    /// Initial proposal width; tuned during thermalization.
    pub proposal_width: f64,
    pub seed: u64,
    pub n_chains: usize,
}

impl Default for MCParams {
    fn default() -> Self {
        MCParams {
            beta: 1.0,
            n_therm: 500,
            n_measure: 10_000,
            measure_every: 1,
            proposal_width: 1.0,
            seed: 1,
            n_chains: 4,
        }
    }
}

impl MCParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.beta > 0.0 && self.beta.is_finite()) {
            return Err(invalid("beta", format!("must be > 0, got {}", self.beta)));
        }
        if self.measure_every == 0 {
            return Err(invalid("measure_every", "must be >= 1"));
        }
        if self.n_chains == 0 {
            return Err(invalid("n_chains", "must be >= 1"));
        }
        if !(self.proposal_width > 0.0 && self.proposal_width.is_finite()) {
            return Err(invalid("proposal_width", "must be > 0"));
        }
        Ok(())
    }

    /// Measurements per chain.
    pub fn measurements_per_chain(&self) -> usize {
        self.n_measure / self.measure_every
    }
}

/// `S = −Σ_□ ln K(U_□, β)` over every plaquette of the lattice.
pub fn action(lattice: &Lattice, config: &FieldConfig, kernel: &HeatKernel) -> Result<f64> {
    let mut s = 0.0;
    for p in lattice.plaquettes() {
        s -= kernel.log_eval(&config.plaquette_product(p)?)?;
    }
    Ok(s)
}

fn max_width(kind: GroupKind) -> f64 {
    match kind {
        GroupKind::Circle => PI,
        GroupKind::UnitQuaternion => 2.0 * PI,
    }
}

/// Random element whose distribution is invariant under inversion.
fn proposal<R: Rng + ?Sized>(kind: GroupKind, width: f64, rng: &mut R) -> GroupElement {
    match kind {
        GroupKind::Circle => GroupElement::circle(width * (2.0 * rng.random::<f64>() - 1.0)),
        GroupKind::UnitQuaternion => {
            let v: [f64; 3] = std::array::from_fn(|_| width * (2.0 * rng.random::<f64>() - 1.0));
            GroupElement::Quaternion(crate::group::UnitQuaternion::exp(v))
        }
    }
}

/// Holonomy of `p` with edge `e` replaced by `h`.
fn plaquette_with(
    config: &FieldConfig,
    p: &PlaquetteRef,
    e: usize,
    h: &GroupElement,
) -> Result<GroupElement> {
    let mut acc = config.kind.identity();
    for i in 0..4 {
        let link = if p.edges[i] == e { h } else { &config.links[p.edges[i]] };
        let link = if p.signs[i] > 0 { *link } else { link.inverse() };
        acc = acc.multiply(&link)?;
    }
    Ok(acc)
}

/// One Markov chain with a private RNG stream.
#[derive(Debug, Clone)]
pub struct Chain<'a> {
    lattice: &'a Lattice,
    kernel: HeatKernel,
    pub config: FieldConfig,
    /// `ln K(U_□)` per plaquette, kept in sync with `config`.
    log_k: Vec<f64>,
    width: f64,
    rng: ChaCha8Rng,
}

impl<'a> Chain<'a> {
    /// Cold start from the identity configuration.
    pub fn new(lattice: &'a Lattice, kind: GroupKind, params: &MCParams, index: u64) -> Result<Self> {
        params.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
        rng.set_stream(index);
        Self::with_config(lattice, FieldConfig::identity(kind, lattice), params, rng)
    }

    pub fn with_config(
        lattice: &'a Lattice,
        config: FieldConfig,
        params: &MCParams,
        rng: ChaCha8Rng,
    ) -> Result<Self> {
        let kernel = HeatKernel::new(config.kind, params.beta)?;
        let log_k = lattice
            .plaquettes()
            .iter()
            .map(|p| kernel.log_eval(&config.plaquette_product(p)?))
            .collect::<Result<_>>()?;
        let width = params.proposal_width.min(max_width(config.kind));
        Ok(Chain {
            lattice,
            kernel,
            config,
            log_k,
            width,
            rng,
        })
    }

    pub fn lattice(&self) -> &Lattice {
        self.lattice
    }

    pub fn kernel(&self) -> &HeatKernel {
        &self.kernel
    }

    pub fn width(&self) -> f64 {
        self.width
    }

    /// Current action from the cache.
    pub fn action(&self) -> f64 {
        -self.log_k.iter().sum::<f64>()
    }

    /// Action change and new local `ln K` values if edge `e` is set to `h`.
    pub fn delta_action(&self, e: usize, h: &GroupElement) -> Result<(f64, Vec<f64>)> {
        let plaquettes = self.lattice.plaquettes_of(e);
        let mut new = Vec::with_capacity(plaquettes.len());
        let mut delta = 0.0;
        for &p in plaquettes {
            let u = plaquette_with(&self.config, &self.lattice.plaquettes()[p], e, h)?;
            let lk = self.kernel.log_eval(&u)?;
            delta -= lk - self.log_k[p];
            new.push(lk);
        }
        Ok((delta, new))
    }

    /// One pass over all edges in order; returns the acceptance rate.
    pub fn sweep(&mut self) -> Result<f64> {
        let kind = self.config.kind;
        let n = self.config.links.len();
        let mut accepted = 0usize;
        for e in 0..n {
            let r = proposal(kind, self.width, &mut self.rng);
            let h = r.multiply(&self.config.links[e])?;
            let (delta, new) = self.delta_action(e, &h)?;
            let u: f64 = self.rng.random();
            if delta <= 0.0 || u < (-delta).exp() {
                self.config.links[e] = h;
                for (&p, lk) in self.lattice.plaquettes_of(e).iter().zip(new) {
                    self.log_k[p] = lk;
                }
                accepted += 1;
            }
        }
        Ok(accepted as f64 / n.max(1) as f64)
    }

    /// Sweeps with proposal-width tuning; returns the mean acceptance of the
    /// final tenth of the sweeps.
    pub fn thermalize(&mut self, n_sweeps: usize) -> Result<f64> {
        let cap = max_width(self.config.kind);
        let tail_start = n_sweeps - n_sweeps / 10;
        let (mut tail_sum, mut tail_n) = (0.0, 0usize);
        for s in 0..n_sweeps {
            let acc = self.sweep()?;
            if acc > 0.6 {
                self.width = (self.width * 1.1).min(cap);
            } else if acc < 0.4 {
                self.width *= 0.9;
            }
            if s >= tail_start {
                tail_sum += acc;
                tail_n += 1;
            }
        }
        Ok(if tail_n > 0 { tail_sum / tail_n as f64 } else { f64::NAN })
    }
}

/// Output of one chain.
#[derive(Debug, Clone, Serialize)]
pub struct ChainOutput {
    pub index: usize,
    pub therm_acceptance: f64,
    pub acceptance: f64,
    pub width: f64,
    /// `measurements[m][q]`: observable `q` at measurement `m`.
    pub measurements: Vec<Vec<f64>>,
}

/// Runs `params.n_chains` independent chains in parallel and returns their
/// outputs in chain order.
pub fn run_chains<M>(
    lattice: &Lattice,
    kind: GroupKind,
    params: &MCParams,
    measure: M,
) -> Result<Vec<ChainOutput>>
where
    M: Fn(&Chain) -> Result<Vec<f64>> + Sync,
{
    params.validate()?;
    (0..params.n_chains)
        .into_par_iter()
        .map(|index| {
            let mut chain = Chain::new(lattice, kind, params, index as u64)?;
            let therm_acceptance = chain.thermalize(params.n_therm)?;
            let mut acc = 0.0;
            let mut measurements = Vec::with_capacity(params.measurements_per_chain());
            for s in 1..=params.n_measure {
                acc += chain.sweep()?;
                if s % params.measure_every == 0 {
                    measurements.push(measure(&chain)?);
                }
            }
            Ok(ChainOutput {
                index,
                therm_acceptance,
                acceptance: acc / params.n_measure.max(1) as f64,
                width: chain.width(),
                measurements,
            })
        })
        .collect()
}
