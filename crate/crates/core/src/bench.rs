//! Experiment harness: estimator accuracy against KDE on known densities, and
//! outlier-ranking quality on labeled synthetic data.
//!
//! Density experiments follow a fixed protocol per `(D, N)` cell:
//!
//! 1. draw `training_repeats` training samples, whiten each, select a
//!    bandwidth for both estimators, and average the selections;
//! 2. draw `r` test samples, whiten each, estimate with both estimators at
//!    the fixed bandwidths, and compute the empirical MSE at the test points
//!    against the true density carried into whitened coordinates;
//! 3. average over realizations and report 2σ half-widths of the means.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bandwidth::{kde_kfold_cv, loo_curve, optimize, GridSpec, Optimizer};
use crate::error::{Error, Result};
use crate::estimator::{fit_at_bandwidth, pointwise_estimate, FitConfig, Variant};
use crate::kernels::Kernel;
use crate::outlier::OutlierDetector;
use crate::preprocess::whiten;
use crate::sample::Sample;
use crate::synthdata::{pdf_eval, sample_product, DistributionSpec, OutlierDataset};

/// `(1/N) Σ_j (f(x_j) − f̂(x_j))²`.
pub fn emse<F, G>(truth: F, estimate: G, sample: &Sample) -> f64
where
    F: Fn(&[f64]) -> f64,
    G: Fn(&[f64]) -> f64,
{
    let t: Vec<f64> = sample.rows().map(truth).collect();
    let e: Vec<f64> = sample.rows().map(estimate).collect();
    emse_values(&t, &e)
}

pub fn emse_values(truth: &[f64], estimate: &[f64]) -> f64 {
    assert_eq!(truth.len(), estimate.len());
    truth
        .iter()
        .zip(estimate)
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        / truth.len() as f64
}

/// `⟨EMSE⟩_reference / ⟨EMSE⟩_candidate`; above one the candidate wins.
pub fn performance_ratio(reference: f64, candidate: f64) -> f64 {
    reference / candidate
}

/// Mean and 2σ half-width of the mean; no half-width from a single value.
pub fn mean_and_half_width(values: &[f64]) -> (f64, Option<f64>) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, None);
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    (mean, Some(2.0 * (var / n).sqrt()))
}

/// SplitMix64 finalizer, used to derive independent seeds.
pub fn mix_seed(a: u64, b: u64) -> u64 {
    let mut z = a ^ b.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn default_r() -> usize {
    8
}
fn default_repeats() -> usize {
    2
}
fn default_folds() -> usize {
    5
}
fn default_kde_optimizer() -> Optimizer {
    Optimizer::KdeCv
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DEExperimentConfig {
    pub spec: DistributionSpec,
    pub dims: Vec<usize>,
    /// Ascending sample sizes.
    pub sizes: Vec<usize>,
    #[serde(default = "default_r")]
    pub r: usize,
    /// Bandwidth selector for the chain estimator. `kde-cv` reuses the KDE's
    /// cross-validated bandwidth.
    #[serde(default)]
    pub mcde_optimizer: Optimizer,
    /// `kde-cv` or `loo`.
    #[serde(default = "default_kde_optimizer")]
    pub kde_optimizer: Optimizer,
    #[serde(default)]
    pub kernel: Kernel,
    #[serde(default = "default_folds")]
    pub folds: usize,
    #[serde(default = "default_repeats")]
    pub training_repeats: usize,
    #[serde(default)]
    pub h_grid: GridSpec,
    #[serde(default)]
    pub mc_samples: Option<usize>,
    #[serde(default)]
    pub base_seed: u64,
}

impl DEExperimentConfig {
    pub fn new(spec: DistributionSpec, dims: Vec<usize>, sizes: Vec<usize>) -> Self {
        Self {
            spec,
            dims,
            sizes,
            r: default_r(),
            mcde_optimizer: Optimizer::Nll,
            kde_optimizer: Optimizer::KdeCv,
            kernel: Kernel::Gaussian,
            folds: default_folds(),
            training_repeats: default_repeats(),
            h_grid: GridSpec::default(),
            mc_samples: None,
            base_seed: 0,
        }
    }

    fn validate(&self) -> Result<()> {
        self.spec.validate()?;
        if self.r == 0 || self.training_repeats == 0 {
            return Err(Error::InvalidParams("r and training_repeats must be >= 1".into()));
        }
        if self.dims.is_empty() || self.dims.contains(&0) {
            return Err(Error::InvalidParams("dims must be non-empty and positive".into()));
        }
        if self.sizes.is_empty() || self.sizes.windows(2).any(|w| w[0] >= w[1]) || self.sizes[0] < 3 {
            return Err(Error::InvalidParams("sizes must be strictly ascending and >= 3".into()));
        }
        if self.kde_optimizer == Optimizer::Nll {
            return Err(Error::InvalidParams("the KDE baseline cannot use the nll optimizer".into()));
        }
        Ok(())
    }

    fn fit_config(&self, optimizer: Optimizer, seed: u64) -> FitConfig {
        FitConfig {
            kernel: self.kernel,
            b: 1.0,
            variant: Variant::F2,
            h_grid: self.h_grid,
            mc_samples: self.mc_samples,
            seed,
            optimizer,
            folds: self.folds,
            ..FitConfig::default()
        }
    }
}

/// Summary for one `(D, N)` cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DECell {
    pub dim: usize,
    pub n: usize,
    pub h_mcde: f64,
    pub h_kde: f64,
    pub emse_mcde: Vec<f64>,
    pub emse_kde: Vec<f64>,
    pub avg_emse_mcde: f64,
    pub avg_emse_kde: f64,
    pub half_width_mcde: Option<f64>,
    pub half_width_kde: Option<f64>,
    pub performance_ratio: f64,
    pub performance_ratio_half_width: Option<f64>,
    /// `avg_emse_*` divided by the smallest-N cell of the same dimension.
    pub scaled_emse_mcde: f64,
    pub scaled_emse_kde: f64,
    pub scaled_half_width_mcde: Option<f64>,
    pub scaled_half_width_kde: Option<f64>,
}

/// A cell that could not be completed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DEFailure {
    pub dim: usize,
    pub n: usize,
    pub error: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DEReport {
    pub config: DEExperimentConfig,
    pub cells: Vec<DECell>,
    pub failures: Vec<DEFailure>,
}

impl DEReport {
    pub fn cell(&self, dim: usize, n: usize) -> Option<&DECell> {
        self.cells.iter().find(|c| c.dim == dim && c.n == n)
    }

    /// Per-realization errors as CSV, for plotting.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("dim,n,realization,emse_mcde,emse_kde\n");
        for c in &self.cells {
            for (i, (m, k)) in c.emse_mcde.iter().zip(&c.emse_kde).enumerate() {
                out.push_str(&format!("{},{},{},{:.16e},{:.16e}\n", c.dim, c.n, i, m, k));
            }
        }
        out
    }
}

struct RawCell {
    dim: usize,
    n: usize,
    h_mcde: f64,
    h_kde: f64,
    emse_mcde: Vec<f64>,
    emse_kde: Vec<f64>,
}

fn whitened_draw(spec: &DistributionSpec, n: usize, dim: usize, seed: u64) -> Result<(Sample, Vec<f64>)> {
    let raw = sample_product(spec, n, dim, seed)?;
    let (white, t) = whiten(&raw)?;
    let jac = t.jacobian();
    let truth = raw.rows().map(|x| pdf_eval(spec, x) / jac).collect();
    Ok((white, truth))
}

fn select_bandwidths(config: &DEExperimentConfig, dim: usize, n: usize, cell_seed: u64) -> Result<(f64, f64)> {
    let mut h_mcde = 0.0;
    let mut h_kde = 0.0;
    for t in 0..config.training_repeats {
        let seed = mix_seed(cell_seed, 1_000_000 + t as u64);
        let (train, _) = whitened_draw(&config.spec, n, dim, seed)?;
        let grid = config.h_grid.resolve(n)?;
        let hk = match config.kde_optimizer {
            Optimizer::Loo => loo_curve(&train, config.kernel, &grid)?.best_h()?,
            _ => kde_kfold_cv(&train, config.kernel, &grid, config.folds, seed)?,
        };
        let hm = match config.mcde_optimizer {
            Optimizer::KdeCv => hk,
            o => optimize(&train, &config.fit_config(o, seed))?.0,
        };
        h_mcde += hm;
        h_kde += hk;
    }
    let reps = config.training_repeats as f64;
    Ok((h_mcde / reps, h_kde / reps))
}

fn run_cell(config: &DEExperimentConfig, dim: usize, n: usize) -> Result<RawCell> {
    let cell_seed = mix_seed(mix_seed(config.base_seed, dim as u64), n as u64);
    let (h_mcde, h_kde) = select_bandwidths(config, dim, n, cell_seed)?;
    let results: Vec<Result<(f64, f64)>> = (0..config.r)
        .into_par_iter()
        .map(|i| {
            let seed = cell_seed.wrapping_add(i as u64);
            let (test, truth) = whitened_draw(&config.spec, n, dim, seed)?;
            let model = fit_at_bandwidth(&test, &config.fit_config(Optimizer::Nll, seed), h_mcde)?;
            let kde = pointwise_estimate(&test, config.kernel, h_kde, 0.0)?;
            Ok((
                emse_values(&truth, &model.sample_densities()),
                emse_values(&truth, &kde.values),
            ))
        })
        .collect();
    let pairs = results.into_iter().collect::<Result<Vec<_>>>()?;
    let (emse_mcde, emse_kde) = pairs.into_iter().unzip();
    Ok(RawCell {
        dim,
        n,
        h_mcde,
        h_kde,
        emse_mcde,
        emse_kde,
    })
}

/// Runs every `(D, N)` cell. Cells run in order; realizations within a cell
/// run in parallel with seeds fixed by index, so the report is identical for
/// any thread count.
pub fn run_de_experiment(config: &DEExperimentConfig) -> Result<DEReport> {
    config.validate()?;
    let mut raw = Vec::new();
    let mut failures = Vec::new();
    for &dim in &config.dims {
        for &n in &config.sizes {
            match run_cell(config, dim, n) {
                Ok(c) => raw.push(c),
                Err(e) => failures.push(DEFailure {
                    dim,
                    n,
                    error: e.to_string(),
                }),
            }
        }
    }
    let cells = raw
        .iter()
        .map(|c| {
            let (avg_m, hw_m) = mean_and_half_width(&c.emse_mcde);
            let (avg_k, hw_k) = mean_and_half_width(&c.emse_kde);
            let reference = raw.iter().find(|r| r.dim == c.dim).expect("cell itself qualifies");
            let ref_m = mean_and_half_width(&reference.emse_mcde).0;
            let ref_k = mean_and_half_width(&reference.emse_kde).0;
            let ratio = performance_ratio(avg_k, avg_m);
            let ratio_hw = match (hw_m, hw_k) {
                (Some(a), Some(b)) => Some(ratio * ((a / avg_m).powi(2) + (b / avg_k).powi(2)).sqrt()),
                _ => None,
            };
            DECell {
                dim: c.dim,
                n: c.n,
                h_mcde: c.h_mcde,
                h_kde: c.h_kde,
                emse_mcde: c.emse_mcde.clone(),
                emse_kde: c.emse_kde.clone(),
                avg_emse_mcde: avg_m,
                avg_emse_kde: avg_k,
                half_width_mcde: hw_m,
                half_width_kde: hw_k,
                performance_ratio: ratio,
                performance_ratio_half_width: ratio_hw,
                scaled_emse_mcde: avg_m / ref_m,
                scaled_emse_kde: avg_k / ref_k,
                scaled_half_width_mcde: hw_m.map(|h| h / ref_m),
                scaled_half_width_kde: hw_k.map(|h| h / ref_k),
            }
        })
        .collect();
    Ok(DEReport {
        config: config.clone(),
        cells,
        failures,
    })
}

/// A named preset (`"dataset1"`) or an inline recipe.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum DatasetRef {
    Named(String),
    Custom(OutlierDataset),
}

impl DatasetRef {
    pub fn resolve(&self) -> Result<OutlierDataset> {
        match self {
            DatasetRef::Named(n) => OutlierDataset::by_name(n),
            DatasetRef::Custom(d) => Ok(d.clone()),
        }
    }
}

fn yes() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutlierExperimentConfig {
    pub datasets: Vec<DatasetRef>,
    pub dims: Vec<usize>,
    pub k_values: Vec<usize>,
    #[serde(default = "default_r")]
    pub r: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub fit: FitConfig,
    #[serde(default = "yes")]
    pub whiten: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AucRow {
    pub dataset: String,
    pub dim: usize,
    pub k: usize,
    pub auc: Vec<f64>,
    pub mean_auc: f64,
    pub half_width: Option<f64>,
    /// `k < (1 − c) N`: too few neighbors to reach past a localized outlier group.
    pub grey_zone: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutlierExperimentReport {
    pub config: OutlierExperimentConfig,
    pub rows: Vec<AucRow>,
}

impl OutlierExperimentReport {
    pub fn row(&self, dataset: &str, dim: usize, k: usize) -> Option<&AucRow> {
        self.rows
            .iter()
            .find(|r| r.dataset == dataset && r.dim == dim && r.k == k)
    }
}

/// AUC for every `(dataset, D, k)`, averaged over `r` realizations with
/// seeds `seed + i`. Each realization fits the density once and reuses it
/// for all `k`.
pub fn run_outlier_experiment(config: &OutlierExperimentConfig) -> Result<OutlierExperimentReport> {
    if config.r == 0 || config.k_values.is_empty() || config.dims.is_empty() {
        return Err(Error::InvalidParams("need r >= 1 and non-empty dims and k_values".into()));
    }
    let k_max = *config.k_values.iter().max().expect("non-empty");
    let mut rows = Vec::new();
    for dref in &config.datasets {
        let ds = dref.resolve()?;
        if k_max >= ds.n() || config.k_values.contains(&0) {
            return Err(Error::KOutOfRange {
                k: k_max,
                max: ds.n() - 1,
            });
        }
        for &dim in &config.dims {
            let per_seed: Vec<Vec<f64>> = (0..config.r)
                .into_par_iter()
                .map(|i| {
                    let seed = config.seed.wrapping_add(i as u64);
                    let data = ds.generate(dim, seed)?;
                    let fit = FitConfig {
                        seed,
                        ..config.fit.clone()
                    };
                    let det = OutlierDetector::fit(&data.points, &fit, config.whiten)?;
                    let full = det.neighbors(k_max)?;
                    config
                        .k_values
                        .iter()
                        .map(|&k| {
                            let nn = full.truncated(k)?;
                            Ok(det
                                .report_with(&nn, Some(&data.labels))?
                                .auc
                                .expect("labels supplied"))
                        })
                        .collect::<Result<Vec<f64>>>()
                })
                .collect::<Result<Vec<_>>>()?;
            for (j, &k) in config.k_values.iter().enumerate() {
                let auc: Vec<f64> = per_seed.iter().map(|s| s[j]).collect();
                let (mean_auc, half_width) = mean_and_half_width(&auc);
                rows.push(AucRow {
                    dataset: ds.name.clone(),
                    dim,
                    k,
                    auc,
                    mean_auc,
                    half_width,
                    grey_zone: k < ds.n_out,
                });
            }
        }
    }
    Ok(OutlierExperimentReport {
        config: config.clone(),
        rows,
    })
}
