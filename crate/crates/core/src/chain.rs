//! Markov chain over the sample points.
//!
//! The chain jumps from `x_m` to `x_n` with probability proportional to
//! `W_mn = K(d_mn / h) (1 − b δ_mn)`. Because `W` is symmetric, the vector of
//! row sums is a left eigenvector of the row-normalized transition matrix, so
//! the stationary distribution is available in closed form.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::kernels::Kernel;
use crate::sample::{euclidean, Sample};

/// Distance function between sample points.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Metric {
    #[default]
    Euclidean,
}

/// Dense symmetric matrix of pairwise distances, row-major. Memory is O(N²).
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceMatrix {
    n: usize,
    dim: usize,
    entries: Vec<f64>,
}

impl DistanceMatrix {
    pub fn n(&self) -> usize {
        self.n
    }

    /// Dimension of the space the points came from.
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, m: usize, n: usize) -> f64 {
        self.entries[m * self.n + n]
    }

    pub fn row(&self, m: usize) -> &[f64] {
        &self.entries[m * self.n..(m + 1) * self.n]
    }
}

pub fn distance_matrix(sample: &Sample, metric: Metric) -> Result<DistanceMatrix> {
    let n = sample.len();
    if n < 2 {
        return Err(Error::EmptySample {
            required: 2,
            found: n,
        });
    }
    let Metric::Euclidean = metric;
    let mut entries = vec![0.0; n * n];
    entries
        .par_chunks_mut(n)
        .enumerate()
        .for_each(|(m, row)| {
            let xm = sample.row(m);
            for (k, slot) in row.iter_mut().enumerate() {
                if k != m {
                    *slot = euclidean(xm, sample.row(k));
                }
            }
        });
    Ok(DistanceMatrix {
        n,
        dim: sample.dim(),
        entries,
    })
}

pub(crate) fn check_bandwidth(h: f64) -> Result<()> {
    if h > 0.0 && h.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidBandwidth(h))
    }
}

pub(crate) fn check_bias(b: f64) -> Result<()> {
    if (0.0..=1.0).contains(&b) {
        Ok(())
    } else {
        Err(Error::InvalidBias(b))
    }
}

/// `W_mn = K(d_mn/h)(1 − b δ_mn)`, symmetric and non-negative.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightMatrix {
    n: usize,
    dim: usize,
    entries: Vec<f64>,
    h: f64,
    b: f64,
    kernel: Kernel,
}

impl WeightMatrix {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn b(&self) -> f64 {
        self.b
    }

    pub fn kernel(&self) -> Kernel {
        self.kernel
    }

    pub fn get(&self, m: usize, n: usize) -> f64 {
        self.entries[m * self.n + n]
    }

    pub fn row(&self, m: usize) -> &[f64] {
        &self.entries[m * self.n..(m + 1) * self.n]
    }

    /// Row sums, summed left to right.
    pub fn row_sums(&self) -> Vec<f64> {
        self.entries
            .par_chunks(self.n)
            .map(|r| r.iter().sum())
            .collect()
    }

    /// Multiplies every weight by `c`. The chain is unchanged for any `c > 0`.
    pub fn scaled(&self, c: f64) -> WeightMatrix {
        WeightMatrix {
            entries: self.entries.iter().map(|w| w * c).collect(),
            ..self.clone()
        }
    }

    fn check_rows(&self, sums: &[f64]) -> Result<()> {
        match sums.iter().position(|&s| !(s > 0.0)) {
            Some(row) => Err(Error::ZeroRow { row }),
            None => Ok(()),
        }
    }
}

pub fn weight_matrix(d: &DistanceMatrix, kernel: Kernel, h: f64, b: f64) -> Result<WeightMatrix> {
    check_bandwidth(h)?;
    check_bias(b)?;
    let n = d.n;
    let k = kernel.in_dim(d.dim);
    let diag = (1.0 - b) * k.at_origin();
    let mut entries = vec![0.0; n * n];
    entries
        .par_chunks_mut(n)
        .enumerate()
        .for_each(|(m, row)| {
            for (j, slot) in row.iter_mut().enumerate() {
                *slot = if j == m { diag } else { k.eval(d.get(m, j) / h) };
            }
        });
    Ok(WeightMatrix {
        n,
        dim: d.dim,
        entries,
        h,
        b,
        kernel,
    })
}

/// Row-stochastic matrix `Q_mn = W_mn / Σ_k W_mk`.
#[derive(Debug, Clone, PartialEq)]
pub struct TransitionMatrix {
    n: usize,
    entries: Vec<f64>,
}

impl TransitionMatrix {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn get(&self, m: usize, n: usize) -> f64 {
        self.entries[m * self.n + n]
    }

    pub fn row(&self, m: usize) -> &[f64] {
        &self.entries[m * self.n..(m + 1) * self.n]
    }

    /// Row vector times matrix: `(v Q)_n = Σ_m v_m Q_mn`.
    pub fn left_multiply(&self, v: &[f64]) -> Vec<f64> {
        assert_eq!(v.len(), self.n);
        let mut out = vec![0.0; self.n];
        for (m, &vm) in v.iter().enumerate() {
            for (o, q) in out.iter_mut().zip(self.row(m)) {
                *o += vm * q;
            }
        }
        out
    }
}

pub fn transition_matrix(w: &WeightMatrix) -> Result<TransitionMatrix> {
    let sums = w.row_sums();
    w.check_rows(&sums)?;
    let n = w.n;
    let entries = w
        .entries
        .chunks(n)
        .zip(&sums)
        .flat_map(|(row, s)| row.iter().map(move |x| x / s))
        .collect();
    Ok(TransitionMatrix { n, entries })
}

/// Stationary distribution of the chain; entries sum to one.
#[derive(Debug, Clone, PartialEq)]
pub struct StationaryVector(Vec<f64>);

impl StationaryVector {
    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }
}

/// `π_m ∝ Σ_n W_mn`, normalized to sum one.
pub fn stationary_distribution(w: &WeightMatrix) -> Result<StationaryVector> {
    let sums = w.row_sums();
    w.check_rows(&sums)?;
    let total: f64 = sums.iter().sum();
    Ok(StationaryVector(sums.into_iter().map(|s| s / total).collect()))
}
