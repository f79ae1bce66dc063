//! Quadrature rules for the normalized Haar measure.
//!
//! `ClassFunction` rules integrate central functions only; `FullGroup` rules
//! integrate arbitrary polynomials in the group coordinates up to their
//! stated degree. Every rule records the trigonometric / polynomial degree it
//! integrates exactly, which callers compare against kernel cutoffs.

use std::f64::consts::{PI, TAU};

use crate::error::{invalid, Result};
use crate::group::{GroupElement, GroupKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RuleKind {
    FullGroup,
    ClassFunction,
}

#[derive(Debug, Clone)]
pub struct QuadratureRule {
    pub group: GroupKind,
    pub kind: RuleKind,
    pub nodes: Vec<GroupElement>,
    pub weights: Vec<f64>,
    /// Largest degree integrated exactly. Circle: Fourier degree of the
    /// integrand. Quaternion class rule: largest `k + l` for which
    /// `∫ χ_k χ_l` is exact. Quaternion full rule: polynomial degree in the
    /// quaternion components.
    pub exact_degree: usize,
}

impl QuadratureRule {
    pub fn integrate<F: FnMut(&GroupElement) -> f64>(&self, mut f: F) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(g, w)| w * f(g))
            .sum()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Largest irrep label whose products with each other are integrated exactly.
    pub fn irrep_bound(&self) -> u32 {
        (self.exact_degree / 2) as u32
    }
}

/// Rule for central functions.
///
/// Circle: uniform grid of `resolution` points on `(-π, π]`. Quaternion:
/// midpoint rule in the half class angle `φ = ψ/2 ∈ [0, π]` against the
/// density `(2/π) sin²φ`, i.e. `(1/π) sin²(ψ/2) dψ`.
pub fn class_quadrature(kind: GroupKind, resolution: usize) -> Result<QuadratureRule> {
    if resolution < 8 {
        return Err(invalid("resolution", format!("must be >= 8, got {resolution}")));
    }
    let n = resolution;
    match kind {
        GroupKind::Circle => Ok(circle_grid(n, RuleKind::ClassFunction)),
        GroupKind::UnitQuaternion => {
            let mut nodes = Vec::with_capacity(n);
            let mut weights = Vec::with_capacity(n);
            for j in 0..n {
                let phi = (j as f64 + 0.5) * PI / n as f64;
                nodes.push(GroupElement::quaternion(phi.cos(), phi.sin(), 0.0, 0.0));
                weights.push(2.0 / n as f64 * phi.sin().powi(2));
            }
            Ok(QuadratureRule {
                group: kind,
                kind: RuleKind::ClassFunction,
                nodes,
                weights,
                // cos(mφ) is integrated exactly for m < 2n; χ_k χ_l sin²φ
                // contains frequencies up to k + l + 2.
                exact_degree: 2 * n - 3,
            })
        }
    }
}

/// Rule for arbitrary (non-central) integrands, exact for polynomials of
/// total degree `degree` in the group coordinates.
///
/// Circle: uniform grid of `degree + 1` points. Quaternion: product rule in
/// hyperspherical angles `(φ, ϑ, α)`; Gauss–Chebyshev (second kind) in
/// `cos φ`, Gauss–Legendre in `cos ϑ`, uniform in `α`.
pub fn full_quadrature(kind: GroupKind, degree: usize) -> Result<QuadratureRule> {
    if degree < 2 {
        return Err(invalid("degree", format!("must be >= 2, got {degree}")));
    }
    match kind {
        GroupKind::Circle => {
            let mut rule = circle_grid(degree + 1, RuleKind::FullGroup);
            rule.exact_degree = degree;
            Ok(rule)
        }
        GroupKind::UnitQuaternion => {
            let n_alpha = degree + 1;
            let n_theta = degree / 2 + 1;
            let n_phi = degree / 2 + 1;
            let (t_nodes, t_weights) = gauss_legendre(n_theta);
            let mut nodes = Vec::with_capacity(n_alpha * n_theta * n_phi);
            let mut weights = Vec::with_capacity(nodes.capacity());
            let norm = 1.0 / (2.0 * PI * PI);
            for i in 1..=n_phi {
                let a = i as f64 * PI / (n_phi + 1) as f64;
                let (sphi, cphi) = a.sin_cos();
                let w_phi = PI / (n_phi + 1) as f64 * sphi * sphi;
                for (&ct, &w_theta) in t_nodes.iter().zip(&t_weights) {
                    let st = (1.0 - ct * ct).max(0.0).sqrt();
                    for m in 0..n_alpha {
                        let alpha = TAU * m as f64 / n_alpha as f64;
                        let (sa, ca) = alpha.sin_cos();
                        nodes.push(GroupElement::quaternion(
                            cphi,
                            sphi * ct,
                            sphi * st * ca,
                            sphi * st * sa,
                        ));
                        weights.push(norm * w_phi * w_theta * TAU / n_alpha as f64);
                    }
                }
            }
            Ok(QuadratureRule {
                group: kind,
                kind: RuleKind::FullGroup,
                nodes,
                weights,
                exact_degree: degree,
            })
        }
    }
}

fn circle_grid(n: usize, kind: RuleKind) -> QuadratureRule {
    let nodes = (0..n)
        .map(|j| GroupElement::circle(-PI + TAU * (j as f64 + 1.0) / n as f64))
        .collect();
    QuadratureRule {
        group: GroupKind::Circle,
        kind,
        nodes,
        weights: vec![1.0 / n as f64; n],
        exact_degree: n - 1,
    }
}

/// Gauss–Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut z = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, z);
            dp = d;
            let dz = p / d;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, z);
        if d != 0.0 {
            dp = d;
        }
        let weight = 2.0 / ((1.0 - z * z) * dp * dp);
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = weight;
        w[n - 1 - i] = weight;
    }
    (x, w)
}

fn legendre_with_derivative(n: usize, z: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, z);
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (z * p1 - p0) / (z * z - 1.0);
    (p1, d)
}
