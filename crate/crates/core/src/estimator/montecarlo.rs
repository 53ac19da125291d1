//! Seeded Monte Carlo integration over a box.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::interpolate::DomainBox;
use crate::error::{Error, Result};

pub const MIN_DRAWS: usize = 1000;

/// Result of a Monte Carlo integration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McEstimate {
    pub integral: f64,
    pub std_error: f64,
}

/// `m` uniform points of the unit cube, generated sequentially from one
/// ChaCha8 stream so the same seed always yields the same draws.
#[derive(Debug, Clone)]
pub struct UnitDraws {
    dim: usize,
    coords: Vec<f64>,
}

impl UnitDraws {
    pub fn new(dim: usize, m: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let coords = (0..dim * m).map(|_| rng.random::<f64>()).collect();
        Self { dim, coords }
    }

    pub fn len(&self) -> usize {
        self.coords.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn iter(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        self.coords.chunks_exact(self.dim)
    }

    /// Draws mapped into `domain`, row-major.
    pub fn mapped(&self, domain: &DomainBox) -> Vec<f64> {
        let mut out = vec![0.0; self.coords.len()];
        for (u, o) in self.iter().zip(out.chunks_exact_mut(self.dim)) {
            domain.from_unit(u, o);
        }
        out
    }
}

/// Mean and standard error of `values`, scaled by `volume`.
pub fn summarize(values: &[f64], volume: f64) -> McEstimate {
    let m = values.len() as f64;
    let mean = values.iter().sum::<f64>() / m;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (m - 1.0).max(1.0);
    McEstimate {
        integral: volume * mean,
        std_error: volume * (var / m).sqrt(),
    }
}

pub(crate) fn check_domain(domain: &DomainBox, m: usize) -> Result<()> {
    if m < MIN_DRAWS {
        return Err(Error::TooFewDraws {
            min: MIN_DRAWS,
            found: m,
        });
    }
    let v = domain.volume();
    if !(v > 0.0) || !v.is_finite() {
        return Err(Error::DegenerateDomain);
    }
    Ok(())
}

/// `∫_domain density` from `m` uniform draws. Deterministic in `seed`;
/// evaluation runs in parallel but the reduction order is fixed.
pub fn mc_normalize<F>(density: F, domain: &DomainBox, m: usize, seed: u64) -> Result<McEstimate>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    check_domain(domain, m)?;
    let dim = domain.dim();
    let points = UnitDraws::new(dim, m, seed).mapped(domain);
    let values: Vec<f64> = points.par_chunks_exact(dim).map(&density).collect();
    Ok(summarize(&values, domain.volume()))
}
