//! Heat-kernel plaquette density `K(g, β) = Σ_λ d_λ e^{-c(λ)β} χ_λ(g)`.
//!
//! The character series is truncated at a cutoff certified by an analytic
//! tail bound. For the circle at very small `β` the kernel is evaluated in
//! its wrapped-Gaussian (Poisson-summed) form instead.

use std::collections::BTreeMap;
use std::f64::consts::{PI, TAU};

use num_complex::Complex64;

use crate::error::{invalid, Error, Result};
use crate::group::{GroupElement, GroupKind, Irrep};
use crate::quadrature::{QuadratureRule, RuleKind};

/// Default absolute truncation tolerance of the character series.
pub const DEFAULT_TAIL_TOL: f64 = 1e-14;

/// Below this `β` the series is not used (circle switches to the wrapped
/// Gaussian; quaternion kernels are rejected).
pub const MIN_SERIES_BETA: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HeatKernelParams {
    pub kind: GroupKind,
    pub beta: f64,
    pub cutoff: u32,
    pub tail_tol: f64,
}

impl HeatKernelParams {
    pub fn new(kind: GroupKind, beta: f64) -> Result<Self> {
        Self::with_tolerance(kind, beta, DEFAULT_TAIL_TOL)
    }

    pub fn with_tolerance(kind: GroupKind, beta: f64, tail_tol: f64) -> Result<Self> {
        if !(beta.is_finite() && beta > 0.0) {
            return Err(invalid("beta", format!("must be > 0, got {beta}")));
        }
        if !(tail_tol.is_finite() && tail_tol > 0.0) {
            return Err(invalid("tail_tol", format!("must be > 0, got {tail_tol}")));
        }
        if beta <= MIN_SERIES_BETA && kind == GroupKind::UnitQuaternion {
            return Err(invalid(
                "beta",
                format!("must exceed {MIN_SERIES_BETA} for the quaternion series, got {beta}"),
            ));
        }
        let cutoff = if beta <= MIN_SERIES_BETA {
            0
        } else {
            truncation_cutoff(kind, beta, tail_tol)
        };
        Ok(HeatKernelParams {
            kind,
            beta,
            cutoff,
            tail_tol,
        })
    }
}

/// Analytic bound on `Σ_{λ > cutoff} d_λ² e^{-c(λ)β}`.
///
/// Successive term ratios decrease monotonically, so the tail is dominated by
/// a geometric series started at the first omitted term.
pub fn tail_bound(kind: GroupKind, beta: f64, cutoff: u32) -> f64 {
    let (mult, term): (f64, fn(u32, f64) -> f64) = match kind {
        GroupKind::Circle => (2.0, |n, b| (-(n as f64).powi(2) * b).exp()),
        GroupKind::UnitQuaternion => (1.0, |k, b| {
            let irrep = Irrep::Spin(k);
            (irrep.dim() as f64).powi(2) * (-irrep.casimir() * b).exp()
        }),
    };
    let first = term(cutoff + 1, beta);
    if first == 0.0 {
        return 0.0;
    }
    let ratio = term(cutoff + 2, beta) / first;
    if ratio >= 1.0 || !ratio.is_finite() {
        return f64::INFINITY;
    }
    mult * first / (1.0 - ratio)
}

/// Smallest cutoff whose tail bound does not exceed `tail_tol`.
pub fn truncation_cutoff(kind: GroupKind, beta: f64, tail_tol: f64) -> u32 {
    let mut cutoff = 0;
    while tail_bound(kind, beta, cutoff) > tail_tol {
        cutoff += 1;
    }
    cutoff
}

/// Below this fraction of the peak value the series has lost relative
/// precision to cancellation, and the image sum is used instead.
const TAIL_SWITCH: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Mode {
    Series,
    WrappedGaussian,
}

/// A heat kernel at fixed `β` with precomputed series coefficients.
#[derive(Debug, Clone)]
pub struct HeatKernel {
    params: HeatKernelParams,
    mode: Mode,
    /// `d_λ e^{-c(λ)β}` indexed by `|label|`.
    coeffs: Vec<f64>,
    /// `K(e, β)` from the series.
    peak: f64,
}

impl HeatKernel {
    pub fn new(kind: GroupKind, beta: f64) -> Result<Self> {
        Ok(Self::from_params(HeatKernelParams::new(kind, beta)?))
    }

    pub fn from_params(params: HeatKernelParams) -> Self {
        let mode = if params.beta <= MIN_SERIES_BETA {
            Mode::WrappedGaussian
        } else {
            Mode::Series
        };
        let coeffs = (0..=params.cutoff)
            .map(|l| {
                let irrep = match params.kind {
                    GroupKind::Circle => Irrep::Winding(l as i64),
                    GroupKind::UnitQuaternion => Irrep::Spin(l),
                };
                irrep.dim() as f64 * (-irrep.casimir() * params.beta).exp()
            })
            .collect::<Vec<f64>>();
        let peak = match params.kind {
            GroupKind::Circle => coeffs[0] + 2.0 * coeffs[1..].iter().sum::<f64>(),
            GroupKind::UnitQuaternion => coeffs
                .iter()
                .enumerate()
                .map(|(k, a)| a * (k + 1) as f64)
                .sum(),
        };
        HeatKernel {
            params,
            mode,
            coeffs,
            peak,
        }
    }

    pub fn params(&self) -> &HeatKernelParams {
        &self.params
    }

    pub fn kind(&self) -> GroupKind {
        self.params.kind
    }

    pub fn beta(&self) -> f64 {
        self.params.beta
    }

    pub fn cutoff(&self) -> u32 {
        self.params.cutoff
    }

    /// `K(g, β)` without the positivity check. Panics on a kind mismatch.
    pub fn value(&self, g: &GroupElement) -> f64 {
        match g {
            GroupElement::Circle(theta) => {
                assert_eq!(self.kind(), GroupKind::Circle, "heat kernel kind mismatch");
                self.circle_value(*theta)
            }
            GroupElement::Quaternion(q) => {
                assert_eq!(self.kind(), GroupKind::UnitQuaternion, "heat kernel kind mismatch");
                self.quaternion_value(q.w()).0
            }
        }
    }

    pub fn eval(&self, g: &GroupElement) -> Result<f64> {
        if g.kind() != self.kind() {
            return Err(Error::KindMismatch {
                expected: self.kind(),
                found: g.kind(),
            });
        }
        let v = self.value(g);
        if v > 0.0 {
            Ok(v)
        } else {
            Err(Error::NonPositiveKernel {
                value: v,
                beta: self.beta(),
            })
        }
    }

    pub fn log_eval(&self, g: &GroupElement) -> Result<f64> {
        self.eval(g).map(f64::ln)
    }

    /// Gradient of `ln K` in the Lie-algebra coordinates of `g`.
    ///
    /// For a central function the coordinate gradient and the left-invariant
    /// derivative coincide, so this is also the Lie-algebra gradient.
    pub fn log_grad(&self, g: &GroupElement) -> Result<Vec<f64>> {
        let k = self.eval(g)?;
        Ok(match g {
            GroupElement::Circle(theta) => vec![self.circle_derivative(*theta) / k],
            GroupElement::Quaternion(q) => {
                let (_, dk_dw) = self.quaternion_value(q.w());
                let [_, x, y, z] = q.components();
                let s = -0.5 * dk_dw / k;
                vec![s * x, s * y, s * z]
            }
        })
    }

    /// Circle kernel as a function of the angle (any real, not necessarily wrapped).
    pub fn circle_value(&self, theta: f64) -> f64 {
        if self.mode == Mode::Series {
            let v = self.circle_series(theta).0;
            if v > TAIL_SWITCH * self.peak {
                return v;
            }
        }
        wrapped_gaussian_oracle(theta, self.beta())
    }

    /// `dK/dθ` for the circle kernel.
    pub fn circle_derivative(&self, theta: f64) -> f64 {
        if self.mode == Mode::Series {
            let (v, d) = self.circle_series(theta);
            if v > TAIL_SWITCH * self.peak {
                return d;
            }
        }
        wrapped_gaussian_derivative(theta, self.beta())
    }

    /// Truncated character series and its `θ` derivative.
    pub fn circle_series(&self, theta: f64) -> (f64, f64) {
        let (s1, c1) = theta.sin_cos();
        let (mut c, mut s) = (1.0, 0.0);
        let (mut val, mut der) = (0.0, 0.0);
        for (n, &a) in self.coeffs.iter().enumerate().skip(1) {
            let cn = c * c1 - s * s1;
            s = s * c1 + c * s1;
            c = cn;
            val += a * c;
            der += n as f64 * a * s;
        }
        (self.coeffs[0] + 2.0 * val, -2.0 * der)
    }

    /// `(K, dK/dw)` for the quaternion kernel as a function of `w = cos(ψ/2)`.
    fn quaternion_value(&self, w: f64) -> (f64, f64) {
        let series = self.quaternion_series(w);
        if series.0 > TAIL_SWITCH * self.peak {
            series
        } else {
            quaternion_images(w.clamp(-1.0, 1.0).acos(), self.beta())
        }
    }

    /// Truncated character series `Σ a_k U_k(w)` and its `w` derivative.
    pub fn quaternion_series(&self, w: f64) -> (f64, f64) {
        let (mut u_prev, mut u) = (0.0, 1.0);
        let (mut du_prev, mut du) = (0.0, 0.0);
        let (mut val, mut der) = (0.0, 0.0);
        for &a in &self.coeffs {
            val += a * u;
            der += a * du;
            let u_next = 2.0 * w * u - u_prev;
            let du_next = 2.0 * u + 2.0 * w * du - du_prev;
            u_prev = u;
            u = u_next;
            du_prev = du;
            du = du_next;
        }
        (val, der)
    }

    /// Character coefficients of the truncated kernel.
    pub fn coefficients(&self) -> ClassFunctionCoeffs {
        ClassFunctionCoeffs::heat_kernel(self.kind(), self.beta(), self.cutoff())
    }
}

/// Coefficients `f_λ` of a central function `f = Σ f_λ χ_λ`.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassFunctionCoeffs {
    pub kind: GroupKind,
    pub coeffs: BTreeMap<i64, Complex64>,
}

impl ClassFunctionCoeffs {
    pub fn new(kind: GroupKind) -> Self {
        ClassFunctionCoeffs {
            kind,
            coeffs: BTreeMap::new(),
        }
    }

    /// The constant function 1 (trivial character only).
    pub fn constant_one(kind: GroupKind) -> Self {
        let mut c = Self::new(kind);
        c.coeffs.insert(0, Complex64::new(1.0, 0.0));
        c
    }

    pub fn heat_kernel(kind: GroupKind, beta: f64, cutoff: u32) -> Self {
        let mut c = Self::new(kind);
        for irrep in kind.irreps_up_to(cutoff) {
            let v = irrep.dim() as f64 * (-irrep.casimir() * beta).exp();
            c.coeffs.insert(irrep.label(), Complex64::new(v, 0.0));
        }
        c
    }

    pub fn get(&self, label: i64) -> Complex64 {
        self.coeffs.get(&label).copied().unwrap_or_default()
    }

    pub fn evaluate(&self, g: &GroupElement) -> Result<Complex64> {
        let mut sum = Complex64::new(0.0, 0.0);
        for (&label, &f) in &self.coeffs {
            sum += f * self.kind.irrep(label)?.character(g)?;
        }
        Ok(sum)
    }

    /// `∫ f dμ_H`, the trivial-character coefficient.
    pub fn haar_integral(&self) -> Complex64 {
        self.get(0)
    }

    /// Largest coefficient difference over the union of supports.
    pub fn max_abs_diff(&self, other: &ClassFunctionCoeffs) -> f64 {
        self.coeffs
            .keys()
            .chain(other.coeffs.keys())
            .map(|&l| (self.get(l) - other.get(l)).norm())
            .fold(0.0, f64::max)
    }

    /// Coefficients of `g ↦ f(g⁻¹)`.
    pub fn inverted(&self) -> ClassFunctionCoeffs {
        let coeffs = match self.kind {
            GroupKind::Circle => self.coeffs.iter().map(|(&l, &f)| (-l, f)).collect(),
            // SU(2) characters are real and χ(g⁻¹) = χ(g)
            GroupKind::UnitQuaternion => self.coeffs.clone(),
        };
        ClassFunctionCoeffs {
            kind: self.kind,
            coeffs,
        }
    }

    /// Circle: `f_{-n} = conj(f_n)`; quaternion: all coefficients real.
    pub fn is_real_symmetric(&self, tol: f64) -> bool {
        match self.kind {
            GroupKind::Circle => self
                .coeffs
                .iter()
                .all(|(&l, &f)| (self.get(-l) - f.conj()).norm() <= tol),
            GroupKind::UnitQuaternion => self.coeffs.values().all(|f| f.im.abs() <= tol),
        }
    }
}

/// Coefficients of `(f∗h)(g) = ∫ f(g x) h(x⁻¹) dμ_H(x)`: `f_λ h_λ / d_λ`.
pub fn convolve_coeffs(
    f: &ClassFunctionCoeffs,
    h: &ClassFunctionCoeffs,
) -> Result<ClassFunctionCoeffs> {
    if f.kind != h.kind {
        return Err(Error::KindMismatch {
            expected: f.kind,
            found: h.kind,
        });
    }
    let mut out = ClassFunctionCoeffs::new(f.kind);
    for (&label, &fl) in &f.coeffs {
        if let Some(&hl) = h.coeffs.get(&label) {
            let d = f.kind.irrep(label)?.dim() as f64;
            out.coeffs.insert(label, fl * hl / d);
        }
    }
    Ok(out)
}

/// `|∫ K(g x, β1) K(x⁻¹ h, β2) dμ_H(x) − K(g h, β1 + β2)|` by quadrature.
pub fn convolution_check(
    kind: GroupKind,
    beta1: f64,
    beta2: f64,
    g: &GroupElement,
    h: &GroupElement,
    rule: &QuadratureRule,
) -> Result<f64> {
    for e in [g, h] {
        if e.kind() != kind {
            return Err(Error::KindMismatch {
                expected: kind,
                found: e.kind(),
            });
        }
    }
    if rule.group != kind {
        return Err(Error::KindMismatch {
            expected: kind,
            found: rule.group,
        });
    }
    let k1 = HeatKernel::new(kind, beta1)?;
    let k2 = HeatKernel::new(kind, beta2)?;
    let k12 = HeatKernel::new(kind, beta1 + beta2)?;
    let required = (k1.cutoff() + k2.cutoff()) as usize;
    if rule.kind != RuleKind::FullGroup || rule.exact_degree < required {
        let available = if rule.kind == RuleKind::FullGroup {
            rule.exact_degree
        } else {
            0
        };
        return Err(Error::UnderResolved {
            available,
            required,
        });
    }
    let h = *h;
    let g = *g;
    let lhs = rule.integrate(|x| k1.value(&(g * *x)) * k2.value(&(x.inverse() * h)));
    Ok((lhs - k12.value(&(g * h))).abs())
}

/// One step of the plaquette subdivision.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RefinementStep {
    /// Square of edge `a/2^{k-1}` to a square of half the edge: `β → β/4`.
    SquareToHalfSquare,
    /// Square to an `a/2^k × a/2^{k-1}` rectangle: `β → β/2`.
    SquareToRect,
    /// Rectangle back up to the coarse square: `β → 2β`.
    RectToSquare,
}

pub fn beta_schedule(beta: f64, step: RefinementStep) -> Result<f64> {
    if !(beta.is_finite() && beta > 0.0) {
        return Err(invalid("beta", format!("must be > 0, got {beta}")));
    }
    Ok(match step {
        RefinementStep::SquareToHalfSquare => beta / 4.0,
        RefinementStep::SquareToRect => beta / 2.0,
        RefinementStep::RectToSquare => beta * 2.0,
    })
}

fn wrapped_terms(theta: f64, beta: f64) -> impl Iterator<Item = f64> {
    let theta = crate::group::wrap_angle(theta);
    // |θ − 2πk| ≥ (2|k| − 1)π; stop once the Gaussian factor is below 1e-300.
    let reach = (4.0 * beta * 700.0).sqrt();
    let m = ((reach / PI + 1.0) / 2.0).ceil() as i64 + 1;
    (-m..=m).map(move |k| theta - TAU * k as f64)
}

/// `√(π/β) Σ_k exp(−(θ − 2πk)² / 4β)`, the Poisson-summed circle heat kernel.
pub fn wrapped_gaussian_oracle(theta: f64, beta: f64) -> f64 {
    let pref = (PI / beta).sqrt();
    pref * wrapped_terms(theta, beta)
        .map(|x| (-x * x / (4.0 * beta)).exp())
        .sum::<f64>()
}

fn wrapped_gaussian_derivative(theta: f64, beta: f64) -> f64 {
    let pref = (PI / beta).sqrt();
    pref * wrapped_terms(theta, beta)
        .map(|x| -x / (2.0 * beta) * (-x * x / (4.0 * beta)).exp())
        .sum::<f64>()
}

/// Image-sum form of the quaternion kernel at half class angle `x = ψ/2`,
/// returning `(K, dK/dw)`.
///
/// `K = e^{β/4} √(4π/β) / (β sin x) · f(x)` with
/// `f(x) = Σ_k (x − 2πk) e^{−(x−2πk)²/β}`.
fn quaternion_images(x: f64, beta: f64) -> (f64, f64) {
    let pref = (beta / 4.0).exp() * (4.0 * PI / beta).sqrt() / beta;
    // f with its first and third derivatives, summed over images
    let derivs = |x: f64| {
        let reach = (beta * 700.0).sqrt();
        let m = (reach / TAU).ceil() as i64 + 1;
        let (mut f, mut df, mut d3f) = (0.0, 0.0, 0.0);
        for k in -m..=m {
            let y = x - TAU * k as f64;
            let q = y * y / beta;
            let e = (-q).exp();
            f += y * e;
            df += (1.0 - 2.0 * q) * e;
            d3f += (-6.0 + 24.0 * q - 8.0 * q * q) / beta * e;
        }
        (f, df, d3f)
    };
    let (s, c) = x.sin_cos();
    if s.abs() < 1e-6 {
        // f and sin x both vanish at 0 and π; take the limits of the ratios
        let (_, df, d3f) = derivs(x);
        return (pref * df / c, -pref * (d3f + df) / 3.0);
    }
    let (f, df, _) = derivs(x);
    let k = pref * f / s;
    let dk_dx = pref * (df * s - f * c) / (s * s);
    (k, -dk_dx / s)
}

/// Fitted constants of `c1 V⁻¹ e^{−d²/(c2 β)} ≤ K ≤ c3 V⁻¹ e^{−d²/(c4 β)}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianBounds {
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
    pub c4: f64,
    pub pass: bool,
}

/// Fits the two-sided Gaussian estimate over a grid of group elements and a
/// list of `β`, with ball-volume proxy `V = β^{dim/2}`.
///
/// The prefactors `c1`, `c3` are the extreme identity values of `K·V`; the
/// exponents are then the tightest ones for which the bounds hold everywhere.
pub fn gaussian_bound_check(
    kind: GroupKind,
    betas: &[f64],
    grid: &[GroupElement],
) -> Result<GaussianBounds> {
    if betas.is_empty() || grid.is_empty() {
        return Err(invalid("grid", "need at least one beta and one grid point"));
    }
    let half_dim = kind.algebra_dim() as f64 / 2.0;
    let mut points = Vec::with_capacity(betas.len() * grid.len());
    let (mut ln_c1, mut ln_c3) = (f64::INFINITY, f64::NEG_INFINITY);
    for &beta in betas {
        if !(beta > 0.0 && beta <= 1.0) {
            return Err(invalid("beta", format!("must lie in (0, 1], got {beta}")));
        }
        let kernel = HeatKernel::new(kind, beta)?;
        let v = beta.powf(half_dim);
        let y0 = (kernel.eval(&kind.identity())? * v).ln();
        ln_c1 = ln_c1.min(y0);
        ln_c3 = ln_c3.max(y0);
        for g in grid {
            let d = g.cc_distance();
            points.push((d * d / beta, (kernel.eval(g)? * v).ln()));
        }
    }
    let mut inv_c2: f64 = 0.0;
    let mut inv_c4 = f64::INFINITY;
    for &(x, y) in points.iter().filter(|(x, _)| *x > 1e-12) {
        inv_c2 = inv_c2.max((ln_c1 - y) / x);
        inv_c4 = inv_c4.min((ln_c3 - y) / x);
    }
    if inv_c4 <= 0.0 || !inv_c4.is_finite() {
        return Err(Error::FitInfeasible(format!(
            "upper exponent 1/c4 = {inv_c4} is not positive"
        )));
    }
    if inv_c2 <= 0.0 {
        // lower bound holds for every exponent; report the flattest one tested
        inv_c2 = f64::MIN_POSITIVE;
    }
    let tol = 1e-12;
    let holds = points.iter().all(|&(x, y)| {
        ln_c1 - x * inv_c2 <= y + tol * (1.0 + y.abs())
            && y <= ln_c3 - x * inv_c4 + tol * (1.0 + y.abs())
    });
    let bounds = GaussianBounds {
        c1: ln_c1.exp(),
        c2: 1.0 / inv_c2,
        c3: ln_c3.exp(),
        c4: 1.0 / inv_c4,
        pass: false,
    };
    let finite = [bounds.c1, bounds.c2, bounds.c3, bounds.c4]
        .iter()
        .all(|c| c.is_finite() && *c > 0.0);
    Ok(GaussianBounds {
        pass: holds && finite && bounds.c1 <= bounds.c3,
        ..bounds
    })
}

/// Evenly spaced class-angle grid: `(-π, π]` for the circle, `(0, 2π]` for
/// quaternions.
pub fn class_angle_grid(kind: GroupKind, n: usize) -> Vec<GroupElement> {
    (1..=n)
        .map(|j| match kind {
            GroupKind::Circle => GroupElement::circle(-PI + TAU * j as f64 / n as f64),
            GroupKind::UnitQuaternion => {
                let half = PI * j as f64 / n as f64;
                GroupElement::quaternion(half.cos(), half.sin(), 0.0, 0.0)
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::{class_quadrature, full_quadrature};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    const KINDS: [GroupKind; 2] = [GroupKind::Circle, GroupKind::UnitQuaternion];

    #[test]
    fn cutoff_examples() {
        let c = truncation_cutoff(GroupKind::Circle, 1.0, 1e-12);
        assert!(c <= 6);
        assert!(tail_bound(GroupKind::Circle, 1.0, c) <= 1e-12);
        assert!(tail_bound(GroupKind::Circle, 1.0, c - 1) > 1e-12);
        // 2 Σ_{n≥7} e^{-n²} < 2e-21
        assert!(tail_bound(GroupKind::Circle, 1.0, 6) < 2e-21);
        for kind in KINDS {
            let mut last = u32::MAX;
            for tol in [1e-16, 1e-12, 1e-8, 1e-4, 1e-1] {
                let c = truncation_cutoff(kind, 0.3, tol);
                assert!(c <= last);
                last = c;
            }
            let mut last = u32::MAX;
            for beta in [0.01, 0.02, 0.04, 0.08, 0.16, 0.32, 0.64] {
                let c = truncation_cutoff(kind, beta, 1e-12);
                assert!(c <= last);
                last = c;
            }
        }
    }

    #[test]
    fn tail_bound_dominates_actual_tail() {
        for kind in KINDS {
            for beta in [0.05, 0.3, 1.0] {
                for cutoff in [0u32, 2, 5, 10] {
                    let actual: f64 = ((cutoff + 1)..(cutoff + 400))
                        .map(|l| {
                            let i = match kind {
                                GroupKind::Circle => Irrep::Winding(l as i64),
                                GroupKind::UnitQuaternion => Irrep::Spin(l),
                            };
                            let m = if kind == GroupKind::Circle { 2.0 } else { 1.0 };
                            m * (i.dim() as f64).powi(2) * (-i.casimir() * beta).exp()
                        })
                        .sum();
                    assert!(tail_bound(kind, beta, cutoff) >= actual * (1.0 - 1e-12));
                }
            }
        }
    }

    #[test]
    fn rejects_bad_beta() {
        assert!(HeatKernel::new(GroupKind::Circle, 0.0).is_err());
        assert!(HeatKernel::new(GroupKind::Circle, -1.0).is_err());
        assert!(HeatKernel::new(GroupKind::UnitQuaternion, 5e-5).is_err());
        // circle falls back to the wrapped Gaussian
        let k = HeatKernel::new(GroupKind::Circle, 5e-5).unwrap();
        let expected = (PI / 5e-5).sqrt();
        assert!((k.value(&GroupElement::circle(0.0)) / expected - 1.0).abs() < 1e-12);
    }

    #[test]
    fn circle_reference_values() {
        let k = HeatKernel::new(GroupKind::Circle, 1.0).unwrap();
        // Σ_n e^{-n²} and Σ_n (-1)^n e^{-n²}
        let direct0: f64 = (-30i32..=30).map(|n| (-(n * n) as f64).exp()).sum();
        let direct_pi: f64 = (-30i32..=30)
            .map(|n| if n % 2 == 0 { 1.0 } else { -1.0 } * (-(n * n) as f64).exp())
            .sum();
        assert!((k.value(&GroupElement::circle(0.0)) - direct0).abs() < 1e-13);
        assert!((k.value(&GroupElement::circle(PI)) - direct_pi).abs() < 1e-13);
        assert!((direct0 - 1.772_637).abs() < 1e-6);
        assert!((direct_pi - 0.300_625).abs() < 1e-6);
        assert!((wrapped_gaussian_oracle(0.0, 1.0) - direct0).abs() < 1e-13);
    }

    #[test]
    fn wrapped_gaussian_values() {
        assert!((wrapped_gaussian_oracle(0.0, 0.5) - (2.0 * PI).sqrt()).abs() < 1e-5);
        assert!((wrapped_gaussian_oracle(0.0, 0.5) - 2.50663).abs() < 1e-5);
        assert!((wrapped_gaussian_oracle(2.0, 0.5) - 0.3395).abs() < 1e-4);
        for beta in [0.05, 0.2, 0.7, 2.0] {
            let k = HeatKernel::new(GroupKind::Circle, beta).unwrap();
            for j in 0..257 {
                let t = -PI + TAU * j as f64 / 256.0;
                assert!((k.circle_value(t) - wrapped_gaussian_oracle(t, beta)).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn quaternion_images_match_series() {
        for beta in [0.1, 0.3, 1.0, 2.0] {
            let k = HeatKernel::new(GroupKind::UnitQuaternion, beta).unwrap();
            for j in 0..=400 {
                let x = PI * j as f64 / 400.0;
                let (sv, sd) = k.quaternion_series(x.cos());
                let (iv, id) = quaternion_images(x, beta);
                if sv > 1e-6 * k.peak {
                    assert!((sv - iv).abs() <= 1e-10 * sv, "{beta} {x}: {sv} vs {iv}");
                    assert!((sd - id).abs() <= 1e-8 * sd.abs().max(1.0), "{beta} {x}: {sd} vs {id}");
                }
            }
        }
    }

    #[test]
    fn normalization_and_positivity() {
        for kind in KINDS {
            let rule = class_quadrature(kind, 512).unwrap();
            for beta in [0.05, 0.25, 0.5, 1.0, 2.0] {
                let k = HeatKernel::new(kind, beta).unwrap();
                assert!((rule.integrate(|g| k.value(g)) - 1.0).abs() < 1e-10);
                for g in class_angle_grid(kind, 300) {
                    assert!(k.eval(&g).unwrap() > 0.0);
                }
            }
        }
    }

    #[test]
    fn peak_decreases_with_beta() {
        for kind in KINDS {
            let mut last = f64::INFINITY;
            for beta in [0.01, 0.05, 0.1, 0.3, 1.0, 3.0] {
                let v = HeatKernel::new(kind, beta).unwrap().value(&kind.identity());
                assert!(v < last);
                last = v;
            }
        }
    }

    #[test]
    fn log_grad_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for kind in KINDS {
            let k = HeatKernel::new(kind, 1.0).unwrap();
            let g0 = k.log_grad(&kind.identity()).unwrap();
            assert!(g0.iter().all(|v| *v == 0.0));
            for _ in 0..100 {
                let r = 0.9 * kind.injectivity_radius() * rng.random::<f64>();
                let mut v: Vec<f64> =
                    (0..kind.algebra_dim()).map(|_| rng.random::<f64>() - 0.5).collect();
                let n = v.iter().map(|c| c * c).sum::<f64>().sqrt();
                v.iter_mut().for_each(|c| *c *= r / n);
                let grad = k.log_grad(&kind.exp_coordinates(&v).unwrap()).unwrap();
                for a in 0..v.len() {
                    let h = 1e-5;
                    let mut vp = v.clone();
                    let mut vm = v.clone();
                    vp[a] += h;
                    vm[a] -= h;
                    let fp = k.log_eval(&kind.exp_coordinates(&vp).unwrap()).unwrap();
                    let fm = k.log_eval(&kind.exp_coordinates(&vm).unwrap()).unwrap();
                    let fd = (fp - fm) / (2.0 * h);
                    assert!(
                        (grad[a] - fd).abs() <= 1e-6 * fd.abs().max(1e-3),
                        "{kind:?} {v:?}: {} vs {fd}",
                        grad[a]
                    );
                }
            }
        }
        let k = HeatKernel::new(GroupKind::Circle, 1.0).unwrap();
        let a = k.log_grad(&GroupElement::circle(1.0)).unwrap()[0];
        let b = k.log_grad(&GroupElement::circle(-1.0)).unwrap()[0];
        assert!((a + b).abs() < 1e-15);
    }

    #[test]
    fn convolution_of_coefficients() {
        for kind in KINDS {
            let q = ClassFunctionCoeffs::heat_kernel(kind, 0.25, 30);
            let half = ClassFunctionCoeffs::heat_kernel(kind, 0.5, 30);
            let conv = convolve_coeffs(&q, &q).unwrap();
            assert!(conv.max_abs_diff(&half) < 1e-15);
            let one = ClassFunctionCoeffs::constant_one(kind);
            let c = convolve_coeffs(&one, &half).unwrap();
            assert!((c.get(0) - half.get(0)).norm() < 1e-15);
            assert_eq!(c.coeffs.len(), 1);
            assert!(q.is_real_symmetric(0.0));
        }
        let mixed = convolve_coeffs(
            &ClassFunctionCoeffs::constant_one(GroupKind::Circle),
            &ClassFunctionCoeffs::constant_one(GroupKind::UnitQuaternion),
        );
        assert!(mixed.is_err());
    }

    #[test]
    fn circle_convolution_on_grid() {
        let quarter = HeatKernel::new(GroupKind::Circle, 0.25).unwrap();
        let half = HeatKernel::new(GroupKind::Circle, 0.5).unwrap();
        let n = 512;
        let xs: Vec<f64> = (0..n).map(|j| TAU * j as f64 / n as f64).collect();
        let mut err: f64 = 0.0;
        for (a, b) in [(0.3, -1.1), (2.5, 2.9), (-3.0, 0.0), (0.0, 0.0)] {
            let s: f64 = xs
                .iter()
                .map(|x| quarter.circle_value(a - x) * quarter.circle_value(x - b))
                .sum::<f64>()
                / n as f64;
            err = err.max((s - half.circle_value(a - b)).abs());
        }
        assert!(err <= 1e-10);
    }

    #[test]
    fn quadrature_convolution_check() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for kind in KINDS {
            let deg = 2 * truncation_cutoff(kind, 0.25, DEFAULT_TAIL_TOL) as usize;
            let rule = full_quadrature(kind, deg).unwrap();
            let id = kind.identity();
            assert!(convolution_check(kind, 0.5, 0.5, &id, &id, &rule).unwrap() <= 1e-10);
            for _ in 0..5 {
                let g = kind.haar_sample(&mut rng);
                let h = kind.haar_sample(&mut rng);
                assert!(convolution_check(kind, 0.25, 0.5, &g, &h, &rule).unwrap() <= 1e-8);
            }
            let coarse = full_quadrature(kind, 4).unwrap();
            assert!(matches!(
                convolution_check(kind, 0.25, 0.25, &id, &id, &coarse),
                Err(Error::UnderResolved { .. })
            ));
            let class = class_quadrature(kind, 256).unwrap();
            assert!(convolution_check(kind, 0.25, 0.25, &id, &id, &class).is_err());
        }
    }

    #[test]
    fn schedule_values() {
        let quarter = beta_schedule(1.0, RefinementStep::SquareToHalfSquare).unwrap();
        let half = beta_schedule(1.0, RefinementStep::SquareToRect).unwrap();
        assert_eq!(quarter, 0.25);
        assert_eq!(half, 0.5);
        assert_eq!(quarter + quarter, half);
        assert_eq!(beta_schedule(half, RefinementStep::RectToSquare).unwrap(), 1.0);
        assert!(beta_schedule(0.0, RefinementStep::SquareToRect).is_err());
    }

    #[test]
    fn distance_calibration() {
        // −4β ln[K(g,β)/K(e,β)] → d²(g) as β → 0
        for kind in KINDS {
            for angle in [0.4, 1.0, 2.0, 2.8] {
                let g = match kind {
                    GroupKind::Circle => GroupElement::circle(angle),
                    GroupKind::UnitQuaternion => {
                        GroupElement::quaternion((angle / 2.0).cos(), 0.0, (angle / 2.0).sin(), 0.0)
                    }
                };
                let f = |beta: f64| {
                    let k = HeatKernel::new(kind, beta).unwrap();
                    -4.0 * beta * (k.value(&g) / k.value(&kind.identity())).ln()
                };
                let (a, b, c) = (f(0.02), f(0.01), f(0.005));
                // quadratic Richardson through β = 0.02, 0.01, 0.005
                let limit = (8.0 * c - 6.0 * b + a) / 3.0;
                let d2 = g.cc_distance().powi(2);
                assert!((limit - d2).abs() <= 0.02 * d2, "{kind:?} {angle}: {limit} vs {d2}");
            }
        }
    }

    #[test]
    fn gaussian_bounds_circle() {
        let grid = class_angle_grid(GroupKind::Circle, 200);
        let b = gaussian_bound_check(GroupKind::Circle, &[0.1, 0.2, 0.5], &grid).unwrap();
        assert!(b.pass);
        assert!(b.c2 <= 4.0 && b.c2 > 3.9, "c2 = {}", b.c2);
        assert!(b.c4 >= 4.0 && b.c4 < 5.0, "c4 = {}", b.c4);
        let k = HeatKernel::new(GroupKind::Circle, 0.2).unwrap();
        let kv = k.value(&GroupKind::Circle.identity()) * 0.2f64.sqrt();
        assert!(b.c1 <= kv * (1.0 + 1e-12) && kv <= b.c3 * (1.0 + 1e-12));
    }

    #[test]
    fn gaussian_bounds_quaternion() {
        let grid = class_angle_grid(GroupKind::UnitQuaternion, 200);
        let b = gaussian_bound_check(GroupKind::UnitQuaternion, &[0.1, 0.2, 0.5], &grid).unwrap();
        assert!(b.pass, "{b:?}");
        assert!(b.c1 <= b.c3);
    }
}
