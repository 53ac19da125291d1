//! Local density-ratio outlier scores.
//!
//! The score of a point is the mean estimated density over its `k` nearest
//! neighbors divided by its own estimated density. Any global rescaling of
//! the densities cancels, so the unnormalized chain estimate can be used
//! directly. Localized groups of outliers are only separated from the bulk
//! once `k` exceeds the group size.

use std::cmp::Ordering;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimator::{FitConfig, PointwiseEstimate};
use crate::chain::{distance_matrix, Metric};
use crate::bandwidth::optimize;
use crate::preprocess::whiten;
use crate::sample::{squared_distance, Sample};

/// Exact k-nearest-neighbor lists, self excluded, ascending by distance with
/// ties broken by lower index.
#[derive(Debug, Clone, PartialEq)]
pub struct NeighborIndex {
    k: usize,
    neighbors: Vec<Vec<usize>>,
    distances: Vec<Vec<f64>>,
}

impl NeighborIndex {
    pub fn k(&self) -> usize {
        self.k
    }

    pub fn neighbors(&self, i: usize) -> &[usize] {
        &self.neighbors[i]
    }

    pub fn distances(&self, i: usize) -> &[f64] {
        &self.distances[i]
    }

    pub fn len(&self) -> usize {
        self.neighbors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.neighbors.is_empty()
    }

    /// The index for a smaller `k`; lists are prefixes of the longer ones.
    pub fn truncated(&self, k: usize) -> Result<NeighborIndex> {
        if k == 0 || k > self.k {
            return Err(Error::KOutOfRange { k, max: self.k });
        }
        Ok(NeighborIndex {
            k,
            neighbors: self.neighbors.iter().map(|n| n[..k].to_vec()).collect(),
            distances: self.distances.iter().map(|d| d[..k].to_vec()).collect(),
        })
    }
}

fn by_distance_then_index(a: &(f64, usize), b: &(f64, usize)) -> Ordering {
    a.0.total_cmp(&b.0).then(a.1.cmp(&b.1))
}

/// Full-scan k-NN with partial selection per row.
pub fn knn(sample: &Sample, k: usize) -> Result<NeighborIndex> {
    let n = sample.len();
    if k == 0 || k + 1 > n {
        return Err(Error::KOutOfRange {
            k,
            max: n.saturating_sub(1),
        });
    }
    let rows: Vec<(Vec<usize>, Vec<f64>)> = (0..n)
        .into_par_iter()
        .map(|i| {
            let xi = sample.row(i);
            let mut cand: Vec<(f64, usize)> = (0..n)
                .filter(|&j| j != i)
                .map(|j| (squared_distance(xi, sample.row(j)), j))
                .collect();
            if k < cand.len() {
                cand.select_nth_unstable_by(k - 1, by_distance_then_index);
                cand.truncate(k);
            }
            cand.sort_unstable_by(by_distance_then_index);
            (cand.iter().map(|c| c.1).collect(), cand.iter().map(|c| c.0.sqrt()).collect())
        })
        .collect();
    let (neighbors, distances) = rows.into_iter().unzip();
    Ok(NeighborIndex { k, neighbors, distances })
}

/// Scores plus the number of `0/0` cases that were set to the neutral value 1.
#[derive(Debug, Clone, PartialEq)]
pub struct Scores {
    pub values: Vec<f64>,
    pub undefined: usize,
}

/// `S_k(x_i) = mean_{j ∈ nn(i)} f(x_j) / f(x_i)`. A zero own density with a
/// positive neighbor mean scores `+∞`.
pub fn anomaly_scores(density: &[f64], nn: &NeighborIndex) -> Result<Scores> {
    if density.len() != nn.len() {
        return Err(Error::DimensionMismatch {
            expected: nn.len(),
            found: density.len(),
        });
    }
    if let Some(v) = density.iter().find(|v| !(**v >= 0.0) || !v.is_finite()) {
        return Err(Error::InvalidParams(format!("densities must be finite and >= 0, got {v}")));
    }
    let mut undefined = 0;
    let values = density
        .iter()
        .enumerate()
        .map(|(i, &own)| {
            let mean = nn.neighbors(i).iter().map(|&j| density[j]).sum::<f64>() / nn.k() as f64;
            if own > 0.0 {
                mean / own
            } else if mean > 0.0 {
                f64::INFINITY
            } else {
                undefined += 1;
                1.0
            }
        })
        .collect();
    if undefined > 0 {
        log::warn!("{undefined} points with zero density and zero neighbor density scored as 1");
    }
    Ok(Scores { values, undefined })
}

/// Probability that a random outlier (`true`) outscores a random inlier,
/// ties counting one half; computed from mid-ranks.
pub fn auc(scores: &[f64], labels: &[bool]) -> Result<f64> {
    if scores.len() != labels.len() {
        return Err(Error::DimensionMismatch {
            expected: scores.len(),
            found: labels.len(),
        });
    }
    if scores.iter().any(|s| s.is_nan()) {
        return Err(Error::InvalidParams("NaN score".into()));
    }
    let n_pos = labels.iter().filter(|&&l| l).count();
    let n_neg = labels.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(Error::DegenerateLabels);
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    let mut rank_sum = 0.0;
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && scores[order[end]] == scores[order[start]] {
            end += 1;
        }
        // Ranks start..end (1-based: start+1..=end) share their mean.
        let mid = (start + 1 + end) as f64 / 2.0;
        let positives = order[start..end].iter().filter(|&&i| labels[i]).count();
        rank_sum += mid * positives as f64;
        start = end;
    }
    let u = rank_sum - (n_pos * (n_pos + 1)) as f64 / 2.0;
    Ok(u / (n_pos as f64 * n_neg as f64))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutlierReport {
    pub k: usize,
    /// `+∞` serializes as `null`.
    pub scores: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub labels: Option<Vec<bool>>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub auc: Option<f64>,
    pub h_star: f64,
    pub undefined_scores: usize,
}

/// Densities at the sample points, fitted once and scored for any `k`.
#[derive(Debug, Clone)]
pub struct OutlierDetector {
    points: Sample,
    h_star: f64,
    density: Vec<f64>,
}

impl OutlierDetector {
    /// Optionally whitens, selects `h*` with `config`'s optimizer, and keeps
    /// the `b = 1` sample-point estimate at `h*`.
    pub fn fit(sample: &Sample, config: &FitConfig, whitened: bool) -> Result<Self> {
        let points = if whitened { whiten(sample)?.0 } else { sample.clone() };
        let (h_star, _) = optimize(&points, config)?;
        let d = distance_matrix(&points, Metric::Euclidean)?;
        let density = PointwiseEstimate::from_distances(&d, config.kernel, h_star, 1.0)?.values;
        Ok(Self { points, h_star, density })
    }

    pub fn h_star(&self) -> f64 {
        self.h_star
    }

    /// Unnormalized densities at the (possibly whitened) sample points.
    pub fn density(&self) -> &[f64] {
        &self.density
    }

    pub fn points(&self) -> &Sample {
        &self.points
    }

    pub fn neighbors(&self, k: usize) -> Result<NeighborIndex> {
        knn(&self.points, k)
    }

    pub fn report_with(&self, nn: &NeighborIndex, labels: Option<&[bool]>) -> Result<OutlierReport> {
        let scores = anomaly_scores(&self.density, nn)?;
        let auc = labels.map(|l| auc(&scores.values, l)).transpose()?;
        Ok(OutlierReport {
            k: nn.k(),
            scores: scores.values,
            labels: labels.map(<[bool]>::to_vec),
            auc,
            h_star: self.h_star,
            undefined_scores: scores.undefined,
        })
    }

    pub fn report(&self, k: usize, labels: Option<&[bool]>) -> Result<OutlierReport> {
        self.report_with(&self.neighbors(k)?, labels)
    }
}

/// Whitens, fits, and scores with `k` neighbors in one call.
pub fn detect(sample: &Sample, k: usize, config: &FitConfig, labels: Option<&[bool]>) -> Result<OutlierReport> {
    if let Some(l) = labels {
        if l.len() != sample.len() {
            return Err(Error::DimensionMismatch {
                expected: sample.len(),
                found: l.len(),
            });
        }
    }
    if k == 0 || k >= sample.len() {
        return Err(Error::KOutOfRange {
            k,
            max: sample.len().saturating_sub(1),
        });
    }
    OutlierDetector::fit(sample, config, true)?.report(k, labels)
}
