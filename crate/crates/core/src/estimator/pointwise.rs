use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::chain::{check_bandwidth, check_bias, distance_matrix, DistanceMatrix, Metric};
use crate::error::{Error, Result};
use crate::kernels::Kernel;
use crate::sample::{euclidean, Sample};

/// `(1 / (N h^D)) Σ_n K(d(x, x_n) / h)`.
pub fn kde_evaluate(sample: &Sample, kernel: Kernel, h: f64, x: &[f64]) -> Result<f64> {
    check_bandwidth(h)?;
    if x.len() != sample.dim() {
        return Err(Error::DimensionMismatch {
            expected: sample.dim(),
            found: x.len(),
        });
    }
    Ok(kde_unchecked(sample, kernel, h, x))
}

pub(crate) fn kde_unchecked(sample: &Sample, kernel: Kernel, h: f64, x: &[f64]) -> f64 {
    let k = kernel.in_dim(sample.dim());
    let sum: f64 = sample.rows().map(|r| k.eval(euclidean(x, r) / h)).sum();
    sum / kde_scale(sample.len(), sample.dim(), h)
}

/// `N h^D`.
pub(crate) fn kde_scale(n: usize, dim: usize, h: f64) -> f64 {
    n as f64 * h.powi(dim as i32)
}

/// `b K(0) / (N h^D)`, the self-contribution removed by the movement bias.
pub fn self_weight_offset(kernel: Kernel, n: usize, dim: usize, h: f64, b: f64) -> f64 {
    b * kernel.in_dim(dim).at_origin() / kde_scale(n, dim, h)
}

/// Unnormalized density at the sample points, proportional to the stationary
/// distribution of the chain with bandwidth `h` and movement bias `b`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointwiseEstimate {
    pub values: Vec<f64>,
    pub h: f64,
    pub b: f64,
    pub kernel: Kernel,
    pub dim: usize,
    /// Number of values that came out negative and were clamped to zero.
    pub clamped: usize,
}

impl PointwiseEstimate {
    /// Computes `Σ_n W_mn / (N h^D)` for every row without materializing `W`.
    pub fn from_distances(d: &DistanceMatrix, kernel: Kernel, h: f64, b: f64) -> Result<Self> {
        check_bandwidth(h)?;
        check_bias(b)?;
        let n = d.n();
        let k = kernel.in_dim(d.dim());
        let diag = (1.0 - b) * k.at_origin();
        let scale = kde_scale(n, d.dim(), h);
        let raw: Vec<f64> = (0..n)
            .into_par_iter()
            .map(|m| {
                let s: f64 = d
                    .row(m)
                    .iter()
                    .enumerate()
                    .map(|(j, &dist)| if j == m { diag } else { k.eval(dist / h) })
                    .sum();
                s / scale
            })
            .collect();
        let clamped = raw.iter().filter(|v| **v < 0.0).count();
        if clamped > 0 {
            log::warn!("{clamped} negative pointwise values clamped to zero");
        }
        Ok(Self {
            values: raw.into_iter().map(|v| v.max(0.0)).collect(),
            h,
            b,
            kernel,
            dim: d.dim(),
            clamped,
        })
    }

    /// Values rescaled to sum one: the stationary distribution.
    pub fn stationary(&self) -> Vec<f64> {
        let total: f64 = self.values.iter().sum();
        self.values.iter().map(|v| v / total).collect()
    }
}

pub fn pointwise_estimate(sample: &Sample, kernel: Kernel, h: f64, b: f64) -> Result<PointwiseEstimate> {
    check_bandwidth(h)?;
    check_bias(b)?;
    let d = distance_matrix(sample, Metric::Euclidean)?;
    PointwiseEstimate::from_distances(&d, kernel, h, b)
}

/// KDE-based extension: `max(KDE(x) − b K(0)/(N h^D), 0)`, unnormalized.
pub fn f1_evaluate(sample: &Sample, kernel: Kernel, h: f64, b: f64, x: &[f64]) -> Result<f64> {
    check_bias(b)?;
    let kde = kde_evaluate(sample, kernel, h, x)?;
    let offset = self_weight_offset(kernel, sample.len(), sample.dim(), h, b);
    Ok((kde - offset).max(0.0))
}
