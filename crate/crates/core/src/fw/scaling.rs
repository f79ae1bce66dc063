//! Small-noise scaling of the principal eigenvalue: `ln λ0` against `1/g²`.

use serde::Serialize;

use crate::error::{invalid, Result};
use crate::fw::exit::ols;

pub const MIN_POINTS: usize = 4;

#[derive(Debug, Clone, Serialize)]
pub struct ScalingFit {
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
    pub n_points: usize,
}

impl ScalingFit {
    /// `|slope + V|/V ≤ rel_tol` and `r² ≥ min_r2`.
    pub fn matches(&self, v: f64, rel_tol: f64, min_r2: f64) -> bool {
        (self.slope + v).abs() / v <= rel_tol && self.r2 >= min_r2
    }
}

/// Ordinary least squares of `ln λ0` on `1/g²` over `(g, λ0)` points.
pub fn fw_scaling_fit(points: &[(f64, f64)]) -> Result<ScalingFit> {
    if points.len() < MIN_POINTS {
        return Err(invalid(
            "g_list",
            format!("need at least {MIN_POINTS} values of g, got {}", points.len()),
        ));
    }
    if let Some((g, l)) = points.iter().find(|(g, l)| !(*g > 0.0 && *l > 0.0)) {
        return Err(invalid("lambda0", format!("need g > 0 and λ0 > 0, got g={g}, λ0={l}")));
    }
    let (xs, ys): (Vec<f64>, Vec<f64>) = points.iter().map(|(g, l)| (1.0 / (g * g), l.ln())).unzip();
    let (slope, intercept, r2) = ols(&xs, &ys);
    Ok(ScalingFit {
        slope,
        intercept,
        r2,
        n_points: points.len(),
    })
}
