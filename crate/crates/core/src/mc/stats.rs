//! Blocked jackknife error analysis.

use serde::Serialize;

use crate::error::{Error, Result};

pub const MIN_BLOCKS: usize = 20;

/// Splits `values` into `n_blocks` equal blocks (dropping the remainder at
/// the end) and returns the block means.
pub fn block_means(values: &[f64], n_blocks: usize) -> Result<Vec<f64>> {
    if n_blocks < 2 || values.len() < n_blocks {
        return Err(Error::TooFewSamples {
            needed: n_blocks.max(2),
            have: values.len(),
        });
    }
    let size = values.len() / n_blocks;
    Ok(values
        .chunks_exact(size)
        .take(n_blocks)
        .map(|c| c.iter().sum::<f64>() / size as f64)
        .collect())
}

/// Jackknife estimate of `f` applied to the means of several observables.
///
/// `blocks[b][q]` is the mean of observable `q` in block `b`. Returns the
/// full-sample estimate, its stderr, and the leave-one-out replicas; `None`
/// if `f` is undefined on the full sample or on any replica.
pub fn jackknife<F>(blocks: &[Vec<f64>], f: F) -> Option<(f64, f64, Vec<f64>)>
where
    F: Fn(&[f64]) -> Option<f64>,
{
    let n = blocks.len();
    if n < 2 {
        return None;
    }
    let q = blocks[0].len();
    let mut total = vec![0.0; q];
    for b in blocks {
        for (t, v) in total.iter_mut().zip(b) {
            *t += v;
        }
    }
    let full: Vec<f64> = total.iter().map(|t| t / n as f64).collect();
    let estimate = f(&full)?;
    let mut replicas = Vec::with_capacity(n);
    let mut scratch = vec![0.0; q];
    for b in blocks {
        for ((s, t), v) in scratch.iter_mut().zip(&total).zip(b) {
            *s = (t - v) / (n - 1) as f64;
        }
        replicas.push(f(&scratch)?);
    }
    let mean = replicas.iter().sum::<f64>() / n as f64;
    let var = replicas.iter().map(|r| (r - mean).powi(2)).sum::<f64>() * (n - 1) as f64 / n as f64;
    Some((estimate, var.sqrt(), replicas))
}

#[derive(Debug, Clone, Serialize)]
pub struct ObservableSeries {
    pub name: String,
    pub values: Vec<f64>,
    pub block_means: Vec<f64>,
    pub mean: f64,
    pub stderr: f64,
    /// Standard error ignoring autocorrelation.
    pub naive_stderr: f64,
}

impl ObservableSeries {
    pub fn new(name: impl Into<String>, values: Vec<f64>, n_blocks: usize) -> Result<Self> {
        let n_blocks = n_blocks.max(MIN_BLOCKS);
        let means = block_means(&values, n_blocks)?;
        let blocks: Vec<Vec<f64>> = means.iter().map(|&m| vec![m]).collect();
        let (mean, stderr, _) = jackknife(&blocks, |m| Some(m[0])).ok_or(Error::DegenerateVariance)?;
        let n = values.len() as f64;
        let avg = values.iter().sum::<f64>() / n;
        let var = values.iter().map(|v| (v - avg).powi(2)).sum::<f64>() / (n - 1.0);
        Ok(ObservableSeries {
            name: name.into(),
            values,
            block_means: means,
            mean,
            stderr,
            naive_stderr: (var / n).sqrt(),
        })
    }

    pub fn n_blocks(&self) -> usize {
        self.block_means.len()
    }
}
