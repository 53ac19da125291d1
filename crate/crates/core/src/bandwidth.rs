//! Bandwidth grids and loss-based bandwidth selection.
//!
//! Three selectors are available:
//!
//! * [`Optimizer::Nll`] scores each bandwidth by the negative log-likelihood
//!   of the normalized chain estimate at the sample points. Normalization is
//!   what gives this loss an interior minimum; the same loss on a plain KDE
//!   keeps decreasing as `h → 0`.
//! * [`Optimizer::Loo`] uses the leave-one-out log-likelihood, which is the
//!   unnormalized `b = 1` estimate.
//! * [`Optimizer::KdeCv`] is k-fold cross-validated KDE.

use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::chain::{check_bandwidth, distance_matrix, DistanceMatrix, Metric};
use crate::error::{Error, Result};
use crate::estimator::{self, FitConfig, PointwiseEstimate};
use crate::kernels::Kernel;
use crate::sample::Sample;

/// How to lay out the candidate bandwidths.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub min: f64,
    pub max: f64,
    pub count: usize,
    #[serde(default = "yes")]
    pub log: bool,
    /// Divide both ends by `√N`.
    #[serde(default = "yes")]
    pub n_scaling: bool,
}

fn yes() -> bool {
    true
}

impl Default for GridSpec {
    /// 20 log-spaced values in `[1, 100] / √N`.
    fn default() -> Self {
        Self {
            min: 1.0,
            max: 100.0,
            count: 20,
            log: true,
            n_scaling: true,
        }
    }
}

impl GridSpec {
    pub fn resolve(&self, n: usize) -> Result<BandwidthGrid> {
        if !(self.min > 0.0) || !(self.max >= self.min) || !self.max.is_finite() || self.count == 0 {
            return Err(Error::InvalidParams(format!(
                "bandwidth grid needs 0 < min <= max and count >= 1, got {self:?}"
            )));
        }
        let scale = if self.n_scaling { (n.max(1) as f64).sqrt() } else { 1.0 };
        let (lo, hi) = (self.min / scale, self.max / scale);
        let values = if self.count == 1 {
            vec![lo]
        } else {
            let steps = (self.count - 1) as f64;
            (0..self.count)
                .map(|i| {
                    let t = i as f64 / steps;
                    if self.log {
                        (lo.ln() + t * (hi.ln() - lo.ln())).exp()
                    } else {
                        lo + t * (hi - lo)
                    }
                })
                .collect()
        };
        BandwidthGrid::new(values, Some(*self))
    }
}

/// Strictly increasing positive bandwidths.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BandwidthGrid {
    values: Vec<f64>,
    spec: Option<GridSpec>,
}

impl BandwidthGrid {
    pub fn new(values: Vec<f64>, spec: Option<GridSpec>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidParams("empty bandwidth grid".into()));
        }
        for &h in &values {
            check_bandwidth(h)?;
        }
        if values.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::InvalidParams("bandwidth grid must be strictly increasing".into()));
        }
        Ok(Self { values, spec })
    }

    pub fn from_values(values: Vec<f64>) -> Result<Self> {
        Self::new(values, None)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn spec(&self) -> Option<&GridSpec> {
        self.spec.as_ref()
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
pub enum Optimizer {
    #[default]
    #[serde(rename = "nll")]
    Nll,
    #[serde(rename = "loo")]
    Loo,
    #[serde(rename = "kde-cv")]
    KdeCv,
}

impl Optimizer {
    pub fn name(self) -> &'static str {
        match self {
            Optimizer::Nll => "nll",
            Optimizer::Loo => "loo",
            Optimizer::KdeCv => "kde-cv",
        }
    }
}

impl fmt::Display for Optimizer {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Optimizer {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        [Optimizer::Nll, Optimizer::Loo, Optimizer::KdeCv]
            .into_iter()
            .find(|o| o.name() == s)
            .ok_or_else(|| Error::InvalidParams(format!("unknown optimizer `{s}`")))
    }
}

/// One scored grid point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LossPoint {
    pub h: f64,
    /// `None` when the grid point failed.
    pub loss: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub failure: Option<String>,
}

/// Loss as a function of bandwidth.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LossCurve {
    pub points: Vec<LossPoint>,
    pub argmin: Option<usize>,
}

impl LossCurve {
    /// Assembles a curve; the argmin skips failed points and breaks ties
    /// toward the smaller bandwidth.
    pub fn from_results(grid: &BandwidthGrid, results: Vec<Result<f64>>) -> Self {
        let points: Vec<LossPoint> = grid
            .values()
            .iter()
            .zip(results)
            .map(|(&h, r)| match r {
                Ok(l) if l.is_finite() => LossPoint {
                    h,
                    loss: Some(l),
                    failure: None,
                },
                Ok(l) => LossPoint {
                    h,
                    loss: None,
                    failure: Some(format!("non-finite loss {l}")),
                },
                Err(e) => LossPoint {
                    h,
                    loss: None,
                    failure: Some(e.to_string()),
                },
            })
            .collect();
        let mut argmin: Option<(usize, f64)> = None;
        for (i, p) in points.iter().enumerate() {
            if let Some(l) = p.loss {
                if argmin.is_none_or(|(_, best)| l < best) {
                    argmin = Some((i, l));
                }
            }
        }
        Self {
            points,
            argmin: argmin.map(|(i, _)| i),
        }
    }

    pub fn best_h(&self) -> Result<f64> {
        self.argmin
            .map(|i| self.points[i].h)
            .ok_or(Error::AllGridPointsFailed)
    }

    pub fn failed(&self) -> usize {
        self.points.iter().filter(|p| p.loss.is_none()).count()
    }

    /// True when the argmin is neither the first nor the last grid point.
    pub fn has_interior_minimum(&self) -> bool {
        matches!(self.argmin, Some(i) if i > 0 && i + 1 < self.points.len())
    }
}

/// `−Σ_j log q(x_j)` for a normalized density `q`.
pub fn loss_nll<F>(density: F, sample: &Sample) -> Result<f64>
where
    F: Fn(&[f64]) -> f64,
{
    let values: Vec<f64> = sample.rows().map(density).collect();
    loss_nll_values(&values)
}

/// `−Σ_j log v_j` for density values already evaluated at the sample points.
pub fn loss_nll_values(values: &[f64]) -> Result<f64> {
    let mut loss = 0.0;
    for (index, &v) in values.iter().enumerate() {
        if !(v > 0.0) {
            return Err(Error::ZeroDensityAtSamplePoint { index });
        }
        loss -= v.ln();
    }
    Ok(loss)
}

/// Leave-one-out loss `−Σ_i log((1/(N h^D)) Σ_{k≠i} K(d_ik/h))`.
pub fn loss_loo(sample: &Sample, kernel: Kernel, h: f64) -> Result<f64> {
    check_bandwidth(h)?;
    let d = distance_matrix(sample, Metric::Euclidean)?;
    loo_from_distances(&d, kernel, h)
}

fn loo_from_distances(d: &DistanceMatrix, kernel: Kernel, h: f64) -> Result<f64> {
    let p = PointwiseEstimate::from_distances(d, kernel, h, 1.0)?;
    loss_nll_values(&p.values)
}

/// Shuffled contiguous folds: fold `f` holds `perm[f N / k .. (f+1) N / k]`.
pub fn fold_assignment(n: usize, folds: usize, seed: u64) -> Result<Vec<Vec<usize>>> {
    if folds < 2 || n < folds {
        return Err(Error::TooFewPoints { folds, n });
    }
    let mut perm: Vec<usize> = (0..n).collect();
    perm.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    Ok((0..folds)
        .map(|f| perm[f * n / folds..(f + 1) * n / folds].to_vec())
        .collect())
}

/// k-fold cross-validation of a plain KDE, scored by held-out negative
/// log-likelihood summed over all folds.
pub fn kde_kfold_cv_curve(
    sample: &Sample,
    kernel: Kernel,
    grid: &BandwidthGrid,
    folds: usize,
    seed: u64,
) -> Result<LossCurve> {
    let n = sample.len();
    let assignment = fold_assignment(n, folds, seed)?;
    let mut fold_of = vec![0usize; n];
    for (f, members) in assignment.iter().enumerate() {
        for &i in members {
            fold_of[i] = f;
        }
    }
    let d = distance_matrix(sample, Metric::Euclidean)?;
    let k = kernel.in_dim(sample.dim());
    let dim = sample.dim() as i32;
    let results = grid
        .values()
        .par_iter()
        .map(|&h| {
            let mut total = 0.0;
            for i in 0..n {
                let f = fold_of[i];
                let train = n - assignment[f].len();
                let s: f64 = d
                    .row(i)
                    .iter()
                    .zip(&fold_of)
                    .filter(|(_, &g)| g != f)
                    .map(|(&dist, _)| k.eval(dist / h))
                    .sum();
                let dens = s / (train as f64 * h.powi(dim));
                if !(dens > 0.0) {
                    return Err(Error::ZeroDensityAtSamplePoint { index: i });
                }
                total -= dens.ln();
            }
            Ok(total)
        })
        .collect();
    Ok(LossCurve::from_results(grid, results))
}

pub fn kde_kfold_cv(sample: &Sample, kernel: Kernel, grid: &BandwidthGrid, folds: usize, seed: u64) -> Result<f64> {
    kde_kfold_cv_curve(sample, kernel, grid, folds, seed)?.best_h()
}

/// Leave-one-out loss over a grid.
pub fn loo_curve(sample: &Sample, kernel: Kernel, grid: &BandwidthGrid) -> Result<LossCurve> {
    let d = distance_matrix(sample, Metric::Euclidean)?;
    let results = grid
        .values()
        .par_iter()
        .map(|&h| loo_from_distances(&d, kernel, h))
        .collect();
    Ok(LossCurve::from_results(grid, results))
}

/// Selects a bandwidth with the method named in `config` over its grid.
pub fn optimize(sample: &Sample, config: &FitConfig) -> Result<(f64, LossCurve)> {
    let grid = config.h_grid.resolve(sample.len())?;
    let curve = match config.optimizer {
        Optimizer::Nll => estimator::nll_curve(sample, config, &grid)?,
        Optimizer::Loo => loo_curve(sample, config.kernel, &grid)?,
        Optimizer::KdeCv => kde_kfold_cv_curve(sample, config.kernel, &grid, config.folds, config.seed)?,
    };
    Ok((curve.best_h()?, curve))
}
