//! The two supported compact structure groups: the circle U(1) and the unit
//! quaternions (SU(2)).
//!
//! Elements are always stored canonically: angles in `(-π, π]`, quaternions
//! renormalized after every product. Irreducible representations are labelled
//! by a winding number (circle) or by twice the spin `k = 2j` (quaternions).
//! For SU(2) the Lie-algebra coordinates are `g = exp(i θ^α σ_α / 2)`, so the
//! coordinate norm equals the class angle `ψ` with `w = cos(ψ/2)`, and the
//! Laplacian eigenvalue on the spin-`j` character is `j(j+1)`.

use std::f64::consts::{PI, TAU};
use std::fmt;
use std::ops::Mul;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum GroupKind {
    Circle,
    UnitQuaternion,
}

impl GroupKind {
    /// Dimension of the Lie algebra (number of coordinates per element).
    pub fn algebra_dim(self) -> usize {
        match self {
            GroupKind::Circle => 1,
            GroupKind::UnitQuaternion => 3,
        }
    }

    /// Radius of the coordinate ball on which `exp_coordinates` is injective.
    pub fn injectivity_radius(self) -> f64 {
        match self {
            GroupKind::Circle => PI,
            GroupKind::UnitQuaternion => TAU,
        }
    }

    pub fn identity(self) -> GroupElement {
        match self {
            GroupKind::Circle => GroupElement::circle(0.0),
            GroupKind::UnitQuaternion => GroupElement::Quaternion(UnitQuaternion::IDENTITY),
        }
    }

    /// Draws an element from the normalized Haar measure.
    pub fn haar_sample<R: Rng + ?Sized>(self, rng: &mut R) -> GroupElement {
        match self {
            GroupKind::Circle => {
                let u: f64 = rng.random();
                GroupElement::circle(PI - TAU * u)
            }
            GroupKind::UnitQuaternion => loop {
                let c: [f64; 4] = [
                    rng.sample(StandardNormal),
                    rng.sample(StandardNormal),
                    rng.sample(StandardNormal),
                    rng.sample(StandardNormal),
                ];
                let n2: f64 = c.iter().map(|v| v * v).sum();
                if n2 > 1e-20 {
                    break GroupElement::Quaternion(UnitQuaternion::new(c[0], c[1], c[2], c[3]));
                }
            },
        }
    }

    pub fn trivial_irrep(self) -> Irrep {
        match self {
            GroupKind::Circle => Irrep::Winding(0),
            GroupKind::UnitQuaternion => Irrep::Spin(0),
        }
    }

    /// The defining (fundamental) representation.
    pub fn fundamental_irrep(self) -> Irrep {
        match self {
            GroupKind::Circle => Irrep::Winding(1),
            GroupKind::UnitQuaternion => Irrep::Spin(1),
        }
    }

    /// All irreps with label magnitude at most `cutoff`, in increasing label order.
    pub fn irreps_up_to(self, cutoff: u32) -> Vec<Irrep> {
        match self {
            GroupKind::Circle => {
                let c = cutoff as i64;
                (-c..=c).map(Irrep::Winding).collect()
            }
            GroupKind::UnitQuaternion => (0..=cutoff).map(Irrep::Spin).collect(),
        }
    }

    /// Irrep from its integer label (winding number, or twice the spin).
    pub fn irrep(self, label: i64) -> Result<Irrep> {
        match self {
            GroupKind::Circle => Ok(Irrep::Winding(label)),
            GroupKind::UnitQuaternion => u32::try_from(label)
                .map(Irrep::Spin)
                .map_err(|_| crate::error::invalid("irrep", "twice-spin label must be >= 0")),
        }
    }

    /// Inverse of [`GroupElement::algebra_coordinates`] on the injectivity ball.
    pub fn exp_coordinates(self, v: &[f64]) -> Result<GroupElement> {
        if v.len() != self.algebra_dim() {
            return Err(crate::error::invalid(
                "coordinates",
                format!("expected {} components, got {}", self.algebra_dim(), v.len()),
            ));
        }
        Ok(match self {
            GroupKind::Circle => GroupElement::circle(v[0]),
            GroupKind::UnitQuaternion => {
                GroupElement::Quaternion(UnitQuaternion::exp([v[0], v[1], v[2]]))
            }
        })
    }
}

impl fmt::Display for GroupKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            GroupKind::Circle => "circle",
            GroupKind::UnitQuaternion => "quaternion",
        })
    }
}

/// Wraps an angle into the canonical branch `(-π, π]`.
pub fn wrap_angle(theta: f64) -> f64 {
    let mut t = theta - TAU * (theta / TAU).round();
    if t <= -PI {
        t += TAU;
    } else if t > PI {
        t -= TAU;
    }
    t
}

/// Unit quaternion `(w, x, y, z)`; the norm is restored on construction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UnitQuaternion([f64; 4]);

impl UnitQuaternion {
    pub const IDENTITY: UnitQuaternion = UnitQuaternion([1.0, 0.0, 0.0, 0.0]);

    pub fn new(w: f64, x: f64, y: f64, z: f64) -> Self {
        let n = (w * w + x * x + y * y + z * z).sqrt();
        UnitQuaternion([w / n, x / n, y / n, z / n])
    }

    /// `exp(i v·σ/2)` as `(cos(|v|/2), sin(|v|/2) v̂)`.
    pub fn exp(v: [f64; 3]) -> Self {
        let norm = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
        if norm < 1e-300 {
            return Self::IDENTITY;
        }
        let (s, c) = (0.5 * norm).sin_cos();
        let k = s / norm;
        Self::new(c, k * v[0], k * v[1], k * v[2])
    }

    pub fn components(&self) -> [f64; 4] {
        self.0
    }

    pub fn w(&self) -> f64 {
        self.0[0]
    }

    pub fn conj(&self) -> Self {
        let [w, x, y, z] = self.0;
        UnitQuaternion([w, -x, -y, -z])
    }

    pub fn norm(&self) -> f64 {
        self.0.iter().map(|v| v * v).sum::<f64>().sqrt()
    }
}

impl Mul for UnitQuaternion {
    type Output = UnitQuaternion;

    fn mul(self, rhs: UnitQuaternion) -> UnitQuaternion {
        let [a1, b1, c1, d1] = self.0;
        let [a2, b2, c2, d2] = rhs.0;
        UnitQuaternion::new(
            a1 * a2 - b1 * b2 - c1 * c2 - d1 * d2,
            a1 * b2 + b1 * a2 + c1 * d2 - d1 * c2,
            a1 * c2 - b1 * d2 + c1 * a2 + d1 * b2,
            a1 * d2 + b1 * c2 - c1 * b2 + d1 * a2,
        )
    }
}

/// A point of the structure group.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GroupElement {
    /// Angle in `(-π, π]`.
    Circle(f64),
    Quaternion(UnitQuaternion),
}

impl GroupElement {
    pub fn circle(theta: f64) -> Self {
        GroupElement::Circle(wrap_angle(theta))
    }

    pub fn quaternion(w: f64, x: f64, y: f64, z: f64) -> Self {
        GroupElement::Quaternion(UnitQuaternion::new(w, x, y, z))
    }

    pub fn kind(&self) -> GroupKind {
        match self {
            GroupElement::Circle(_) => GroupKind::Circle,
            GroupElement::Quaternion(_) => GroupKind::UnitQuaternion,
        }
    }

    /// Checked group product.
    pub fn multiply(&self, other: &GroupElement) -> Result<GroupElement> {
        match (self, other) {
            (GroupElement::Circle(a), GroupElement::Circle(b)) => Ok(GroupElement::circle(a + b)),
            (GroupElement::Quaternion(a), GroupElement::Quaternion(b)) => {
                Ok(GroupElement::Quaternion(*a * *b))
            }
            _ => Err(Error::KindMismatch {
                expected: self.kind(),
                found: other.kind(),
            }),
        }
    }

    pub fn inverse(&self) -> GroupElement {
        match self {
            GroupElement::Circle(a) => GroupElement::circle(-a),
            GroupElement::Quaternion(q) => GroupElement::Quaternion(q.conj()),
        }
    }

    /// Class angle: `θ` for the circle, `ψ ∈ [0, 2π]` with `w = cos(ψ/2)` for quaternions.
    pub fn class_angle(&self) -> f64 {
        match self {
            GroupElement::Circle(a) => *a,
            GroupElement::Quaternion(q) => 2.0 * q.w().clamp(-1.0, 1.0).acos(),
        }
    }

    /// Geodesic distance to the identity in the metric whose Laplacian has
    /// eigenvalue `c(λ)` on `χ_λ`.
    pub fn cc_distance(&self) -> f64 {
        match self {
            GroupElement::Circle(a) => a.abs(),
            GroupElement::Quaternion(_) => self.class_angle(),
        }
    }

    /// Lie-algebra coordinates `θ^α`; inverse of [`GroupKind::exp_coordinates`]
    /// away from the cut locus (`-1` for quaternions).
    pub fn algebra_coordinates(&self) -> Vec<f64> {
        match self {
            GroupElement::Circle(a) => vec![*a],
            GroupElement::Quaternion(q) => {
                let [w, x, y, z] = q.components();
                let s = (x * x + y * y + z * z).sqrt();
                if s < 1e-300 {
                    return if w > 0.0 { vec![0.0; 3] } else { vec![TAU, 0.0, 0.0] };
                }
                let psi = 2.0 * s.atan2(w);
                vec![psi * x / s, psi * y / s, psi * z / s]
            }
        }
    }

    pub fn as_angle(&self) -> Option<f64> {
        match self {
            GroupElement::Circle(a) => Some(*a),
            GroupElement::Quaternion(_) => None,
        }
    }

    pub fn as_quaternion(&self) -> Option<UnitQuaternion> {
        match self {
            GroupElement::Quaternion(q) => Some(*q),
            GroupElement::Circle(_) => None,
        }
    }

    /// `h g h⁻¹`.
    pub fn conjugate_by(&self, h: &GroupElement) -> Result<GroupElement> {
        h.multiply(self)?.multiply(&h.inverse())
    }
}

/// Unchecked product; panics when the kinds differ. Use
/// [`GroupElement::multiply`] where kinds are not known to agree.
impl Mul for GroupElement {
    type Output = GroupElement;

    fn mul(self, rhs: GroupElement) -> GroupElement {
        match self.multiply(&rhs) {
            Ok(g) => g,
            Err(e) => panic!("{e}"),
        }
    }
}

/// Irreducible representation label.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Irrep {
    /// Circle character `e^{inθ}`.
    Winding(i64),
    /// SU(2) irrep of twice-spin `k = 2j`.
    Spin(u32),
}

impl Irrep {
    pub fn kind(&self) -> GroupKind {
        match self {
            Irrep::Winding(_) => GroupKind::Circle,
            Irrep::Spin(_) => GroupKind::UnitQuaternion,
        }
    }

    pub fn label(&self) -> i64 {
        match self {
            Irrep::Winding(n) => *n,
            Irrep::Spin(k) => *k as i64,
        }
    }

    pub fn dim(&self) -> u32 {
        match self {
            Irrep::Winding(_) => 1,
            Irrep::Spin(k) => k + 1,
        }
    }

    /// Laplacian eigenvalue: `n²` or `j(j+1)`.
    pub fn casimir(&self) -> f64 {
        match self {
            Irrep::Winding(n) => (*n as f64).powi(2),
            Irrep::Spin(k) => {
                let j = *k as f64 / 2.0;
                j * (j + 1.0)
            }
        }
    }

    pub fn is_trivial(&self) -> bool {
        self.label() == 0
    }

    /// Character value `χ_λ(g)`.
    pub fn character(&self, g: &GroupElement) -> Result<Complex64> {
        match (self, g) {
            (Irrep::Winding(n), GroupElement::Circle(a)) => {
                Ok(Complex64::from_polar(1.0, *n as f64 * a))
            }
            (Irrep::Spin(k), GroupElement::Quaternion(q)) => {
                Ok(Complex64::new(chebyshev_u(*k, q.w()), 0.0))
            }
            _ => Err(Error::KindMismatch {
                expected: self.kind(),
                found: g.kind(),
            }),
        }
    }
}

/// Chebyshev polynomial of the second kind, `U_k(x)`. With `x = cos(ψ/2)`
/// this is the SU(2) character `sin((k+1)ψ/2) / sin(ψ/2)`, including the
/// limits at `ψ = 0` and `ψ = 2π`.
pub fn chebyshev_u(k: u32, x: f64) -> f64 {
    let (mut prev, mut cur) = (1.0, 2.0 * x);
    if k == 0 {
        return 1.0;
    }
    for _ in 1..k {
        let next = 2.0 * x * cur - prev;
        prev = cur;
        cur = next;
    }
    cur
}
