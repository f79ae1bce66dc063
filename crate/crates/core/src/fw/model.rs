//! Ground-state densities `|Ψ₀|²` in low-dimensional coordinates and the
//! drift `b = ½ ∇ ln |Ψ₀|²` of the associated diffusion.

use std::f64::consts::{PI, TAU};

use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::group::GroupKind;
use crate::heat_kernel::HeatKernel;

/// Uniform-grid transfer quadrature for a 2D open circle lattice.
///
/// Axis 0 is space with `lx` sites, axis 1 time with `lt` sites. Temporal
/// links are gauge-fixed to the identity and the top time slice is pinned to
/// the identity, so each spatial column is a chain of plaquette kernels
/// between consecutive slices. The free coordinates are the `lx − 1` spatial
/// links of the bottom slice; the interior slices are integrated out.
#[derive(Debug, Clone)]
pub struct QuadratureModel {
    pub lx: usize,
    pub lt: usize,
    pub beta: f64,
    pub resolution: usize,
    kernel: HeatKernel,
    /// Grid nodes `φ_j`.
    nodes: Vec<f64>,
    /// Column density of the first interior slice on the grid; `None` when
    /// there are no interior slices.
    transfer: Option<Vec<f64>>,
    /// Relative change of the density when the resolution is halved.
    pub resolution_error: f64,
}

pub const MAX_FREE_COORDS: usize = 5;

impl QuadratureModel {
    pub fn new(lx: usize, lt: usize, beta: f64, resolution: usize) -> Result<Self> {
        if lx < 2 || lx - 1 > MAX_FREE_COORDS {
            return Err(invalid(
                "lx",
                format!("need 1..={MAX_FREE_COORDS} free spatial links, got {}", lx.saturating_sub(1)),
            ));
        }
        if lt < 2 {
            return Err(invalid("lt", format!("must be >= 2, got {lt}")));
        }
        if resolution < 16 {
            return Err(invalid("resolution", format!("must be >= 16, got {resolution}")));
        }
        let fine = Self::build(lx, lt, beta, resolution)?;
        let coarse = Self::build(lx, lt, beta, resolution / 2)?;
        let mut err: f64 = 0.0;
        for x in [0.0, 0.5, 1.0, 2.0, 3.0] {
            let a = fine.column(x).0;
            let b = coarse.column(x).0;
            err = err.max((a - b).abs() / a.abs());
        }
        if err > 0.01 {
            return Err(Error::UnderResolved {
                available: resolution,
                required: 2 * resolution,
            });
        }
        Ok(QuadratureModel {
            resolution_error: err,
            ..fine
        })
    }

    fn build(lx: usize, lt: usize, beta: f64, n: usize) -> Result<Self> {
        let kernel = HeatKernel::new(GroupKind::Circle, beta)?;
        let nodes: Vec<f64> = (0..n).map(|j| -PI + TAU * j as f64 / n as f64).collect();
        // slices 1..lt-2 are interior; slice lt-1 is pinned to identity
        let transfer = if lt >= 3 {
            let mut v: Vec<f64> = nodes.iter().map(|&p| kernel.circle_value(p)).collect();
            for _ in 0..(lt - 3) {
                v = nodes
                    .iter()
                    .map(|&p| {
                        nodes
                            .iter()
                            .zip(&v)
                            .map(|(&q, &w)| kernel.circle_value(p - q) * w)
                            .sum::<f64>()
                            / n as f64
                    })
                    .collect();
            }
            Some(v)
        } else {
            None
        };
        Ok(QuadratureModel {
            lx,
            lt,
            beta,
            resolution: n,
            kernel,
            nodes,
            transfer,
            resolution_error: 0.0,
        })
    }

    pub fn dim(&self) -> usize {
        self.lx - 1
    }

    /// Column density and its derivative at bottom-slice angle `x`.
    fn column(&self, x: f64) -> (f64, f64) {
        match &self.transfer {
            None => (self.kernel.circle_value(x), self.kernel.circle_derivative(x)),
            Some(v) => {
                let n = self.nodes.len() as f64;
                let (mut f, mut df) = (0.0, 0.0);
                for (&q, &w) in self.nodes.iter().zip(v) {
                    f += self.kernel.circle_value(x - q) * w;
                    df += self.kernel.circle_derivative(x - q) * w;
                }
                (f / n, df / n)
            }
        }
    }
}

#[derive(Debug, Clone)]
pub enum GroundStateModel {
    /// `|Ψ₀|² ≡ 1`, so `b ≡ 0` (Brownian control).
    Flat { dim: usize },
    /// `|Ψ₀|² = K(·, β)` on one group element in exponential coordinates.
    SingleLink { kind: GroupKind, kernel: HeatKernel },
    Quadrature(Box<QuadratureModel>),
    /// `ln |Ψ₀|² = −(x² − a²)²` in one dimension: two attractors at `±a`.
    DoubleWell { a: f64 },
}

#[derive(Debug, Clone, Serialize)]
pub struct ModelInfo {
    pub name: &'static str,
    pub dim: usize,
    pub beta: Option<f64>,
}

impl GroundStateModel {
    pub fn single_link(kind: GroupKind, beta: f64) -> Result<Self> {
        Ok(GroundStateModel::SingleLink {
            kind,
            kernel: HeatKernel::new(kind, beta)?,
        })
    }

    pub fn quadrature(lx: usize, lt: usize, beta: f64, resolution: usize) -> Result<Self> {
        Ok(GroundStateModel::Quadrature(Box::new(QuadratureModel::new(
            lx, lt, beta, resolution,
        )?)))
    }

    pub fn info(&self) -> ModelInfo {
        let (name, beta) = match self {
            GroundStateModel::Flat { .. } => ("flat", None),
            GroundStateModel::SingleLink { kernel, .. } => ("single-link", Some(kernel.beta())),
            GroundStateModel::Quadrature(q) => ("quadrature", Some(q.beta)),
            GroundStateModel::DoubleWell { .. } => ("double-well", None),
        };
        ModelInfo {
            name,
            dim: self.dim(),
            beta,
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            GroundStateModel::Flat { dim } => *dim,
            GroundStateModel::SingleLink { kind, .. } => kind.algebra_dim(),
            GroundStateModel::Quadrature(q) => q.dim(),
            GroundStateModel::DoubleWell { .. } => 1,
        }
    }

    /// Largest admissible domain radius.
    pub fn max_radius(&self) -> f64 {
        match self {
            GroundStateModel::Flat { .. } | GroundStateModel::DoubleWell { .. } => f64::INFINITY,
            GroundStateModel::SingleLink { kind, .. } => kind.injectivity_radius(),
            GroundStateModel::Quadrature(_) => PI,
        }
    }

    fn check_dim(&self, theta: &[f64]) -> Result<()> {
        if theta.len() != self.dim() {
            return Err(invalid(
                "theta",
                format!("expected {} coordinates, got {}", self.dim(), theta.len()),
            ));
        }
        Ok(())
    }

    /// `ln |Ψ₀|²(θ)`, unnormalized.
    pub fn log_density(&self, theta: &[f64]) -> Result<f64> {
        self.check_dim(theta)?;
        match self {
            GroundStateModel::Flat { .. } => Ok(0.0),
            GroundStateModel::SingleLink { kind, kernel } => {
                kernel.log_eval(&kind.exp_coordinates(theta)?)
            }
            GroundStateModel::Quadrature(q) => {
                let mut s = 0.0;
                for &x in theta {
                    let (f, _) = q.column(x);
                    if f <= 0.0 {
                        return Err(Error::NonPositiveKernel {
                            value: f,
                            beta: q.beta,
                        });
                    }
                    s += f.ln();
                }
                Ok(s)
            }
            GroundStateModel::DoubleWell { a } => Ok(-(theta[0] * theta[0] - a * a).powi(2)),
        }
    }

    pub fn density(&self, theta: &[f64]) -> Result<f64> {
        self.log_density(theta).map(f64::exp)
    }

    /// `∇ ln |Ψ₀|²(θ)`.
    pub fn grad_log_density(&self, theta: &[f64]) -> Result<Vec<f64>> {
        self.check_dim(theta)?;
        match self {
            GroundStateModel::Flat { dim } => Ok(vec![0.0; *dim]),
            GroundStateModel::SingleLink { kind, kernel } => {
                kernel.log_grad(&kind.exp_coordinates(theta)?)
            }
            GroundStateModel::Quadrature(q) => theta
                .iter()
                .map(|&x| {
                    let (f, df) = q.column(x);
                    if f > 0.0 {
                        Ok(df / f)
                    } else {
                        Err(Error::NonPositiveKernel {
                            value: f,
                            beta: q.beta,
                        })
                    }
                })
                .collect(),
            GroundStateModel::DoubleWell { a } => {
                let x = theta[0];
                Ok(vec![-4.0 * x * (x * x - a * a)])
            }
        }
    }

    /// Drift `b = ½ ∇ ln |Ψ₀|²`.
    pub fn drift(&self, theta: &[f64]) -> Result<Vec<f64>> {
        let mut g = self.grad_log_density(theta)?;
        g.iter_mut().for_each(|v| *v *= 0.5);
        Ok(g)
    }

    /// Jacobian `∂b_i/∂θ_j` by central differences.
    pub fn drift_jacobian(&self, theta: &[f64]) -> Result<Vec<Vec<f64>>> {
        let n = theta.len();
        let h = 1e-5;
        let mut jac = vec![vec![0.0; n]; n];
        let mut x = theta.to_vec();
        for j in 0..n {
            x[j] = theta[j] + h;
            let bp = self.drift(&x)?;
            x[j] = theta[j] - h;
            let bm = self.drift(&x)?;
            x[j] = theta[j];
            for i in 0..n {
                jac[i][j] = (bp[i] - bm[i]) / (2.0 * h);
            }
        }
        Ok(jac)
    }

    /// `max_{i<j} |∂b_i/∂θ_j − ∂b_j/∂θ_i|` at `θ`.
    pub fn curl_residual(&self, theta: &[f64]) -> Result<f64> {
        let jac = self.drift_jacobian(theta)?;
        let mut worst: f64 = 0.0;
        for i in 0..jac.len() {
            for j in (i + 1)..jac.len() {
                worst = worst.max((jac[i][j] - jac[j][i]).abs());
            }
        }
        Ok(worst)
    }
}
