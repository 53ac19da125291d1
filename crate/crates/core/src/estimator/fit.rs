use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::interpolate::{build_interpolant, DomainBox, InterpolationMethod, Interpolant, Stencil};
use super::montecarlo::{check_domain, mc_normalize, summarize, McEstimate, UnitDraws, MIN_DRAWS};
use super::pointwise::{kde_unchecked, self_weight_offset, PointwiseEstimate};
use crate::bandwidth::{loss_nll_values, optimize, BandwidthGrid, GridSpec, LossCurve, Optimizer};
use crate::chain::{check_bias, distance_matrix, DistanceMatrix, Metric};
use crate::error::{Error, Result};
use crate::kernels::Kernel;
use crate::preprocess::{whiten, WhiteningTransform};
use crate::sample::Sample;

/// Which extension of the sample-point estimate to the whole space.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Variant {
    /// KDE minus the self-weight offset, clamped at zero.
    F1,
    /// Interpolation of the sample-point values over the sample's domain box.
    #[default]
    F2,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum InterpolationChoice {
    /// Piecewise linear in 1-D, nearest neighbor above.
    #[default]
    Auto,
    Linear,
    Nearest,
}

impl InterpolationChoice {
    pub fn method(self, dim: usize) -> InterpolationMethod {
        match self {
            InterpolationChoice::Auto => InterpolationMethod::default_for(dim),
            InterpolationChoice::Linear => InterpolationMethod::PiecewiseLinear1d,
            InterpolationChoice::Nearest => InterpolationMethod::NearestNeighbor,
        }
    }
}

fn default_b() -> f64 {
    1.0
}

fn default_folds() -> usize {
    5
}

/// Everything a fit needs besides the data. Serializes to the JSON config
/// accepted by the command line tool; every field has a default.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitConfig {
    #[serde(default)]
    pub kernel: Kernel,
    #[serde(default = "default_b")]
    pub b: f64,
    #[serde(default)]
    pub variant: Variant,
    #[serde(default)]
    pub h_grid: GridSpec,
    #[serde(default)]
    pub interpolation: InterpolationChoice,
    /// Monte Carlo draws; `None` means `max(100 · 2^D, 10⁴)`.
    #[serde(default)]
    pub mc_samples: Option<usize>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub optimizer: Optimizer,
    /// Folds for `kde-cv`.
    #[serde(default = "default_folds")]
    pub folds: usize,
}

impl Default for FitConfig {
    fn default() -> Self {
        Self {
            kernel: Kernel::Gaussian,
            b: 1.0,
            variant: Variant::F2,
            h_grid: GridSpec::default(),
            interpolation: InterpolationChoice::Auto,
            mc_samples: None,
            seed: 0,
            optimizer: Optimizer::Nll,
            folds: 5,
        }
    }
}

impl FitConfig {
    /// Checks the settings that do not depend on the data.
    pub fn validate(&self) -> Result<()> {
        check_bias(self.b)?;
        self.h_grid.resolve(1)?;
        if self.folds < 2 {
            return Err(Error::InvalidParams(format!("folds must be >= 2, got {}", self.folds)));
        }
        if let Some(m) = self.mc_samples {
            if m < MIN_DRAWS {
                return Err(Error::TooFewDraws { min: MIN_DRAWS, found: m });
            }
        }
        Ok(())
    }

    pub fn mc_draws(&self, dim: usize) -> usize {
        self.mc_samples
            .unwrap_or_else(|| (100usize << dim.min(40)).max(10_000))
    }
}

/// Half-width, in units of `h`, of the region outside which the f1
/// extension vanishes: beyond it every kernel term is below `b K(0) / N`.
fn f1_reach(kernel: Kernel, n: usize, b: f64) -> f64 {
    if kernel.is_compact() {
        return kernel.support_radius();
    }
    let level = (b / n as f64).max(1e-12);
    match kernel {
        Kernel::Gaussian => (-2.0 * level.ln()).sqrt(),
        Kernel::Exponential => -level.ln(),
        _ => unreachable!("compact kernels handled above"),
    }
}

/// Per-sample state reused across the bandwidth grid. The Monte Carlo draws
/// are shared by every grid point, so loss differences between bandwidths
/// carry no independent integration noise.
pub(crate) struct Prepared<'a> {
    sample: &'a Sample,
    config: &'a FitConfig,
    distances: DistanceMatrix,
    normalizer: Normalizer,
}

enum Normalizer {
    Interpolated {
        stencils: Vec<Stencil>,
        volume: f64,
    },
    Kde {
        draws: usize,
        seed: u64,
        bounds: DomainBox,
    },
}

impl<'a> Prepared<'a> {
    pub(crate) fn new(sample: &'a Sample, config: &'a FitConfig) -> Result<Self> {
        check_bias(config.b)?;
        let distances = distance_matrix(sample, Metric::Euclidean)?;
        let m = config.mc_draws(sample.dim());
        let bounds = DomainBox::bounding(sample);
        let normalizer = match config.variant {
            Variant::F2 => {
                check_domain(&bounds, m)?;
                let method = config.interpolation.method(sample.dim());
                // Stencils depend only on anchor positions.
                let probe = build_interpolant(sample, &vec![0.0; sample.len()], method)?;
                let points = UnitDraws::new(sample.dim(), m, config.seed).mapped(&bounds);
                let stencils = points
                    .par_chunks_exact(sample.dim())
                    .map(|x| probe.stencil(x))
                    .collect();
                Normalizer::Interpolated {
                    stencils,
                    volume: bounds.volume(),
                }
            }
            Variant::F1 => Normalizer::Kde {
                draws: m,
                seed: config.seed,
                bounds,
            },
        };
        Ok(Self {
            sample,
            config,
            distances,
            normalizer,
        })
    }

    fn pointwise(&self, h: f64) -> Result<PointwiseEstimate> {
        PointwiseEstimate::from_distances(&self.distances, self.config.kernel, h, self.config.b)
    }

    fn integrate(&self, p: &PointwiseEstimate) -> Result<(McEstimate, DomainBox)> {
        match &self.normalizer {
            Normalizer::Interpolated { stencils, volume } => {
                let values: Vec<f64> = stencils.iter().map(|s| s.apply(&p.values)).collect();
                Ok((summarize(&values, *volume), DomainBox::bounding(self.sample)))
            }
            Normalizer::Kde { draws, seed, bounds } => {
                let reach = f1_reach(self.config.kernel, self.sample.len(), self.config.b);
                let domain = bounds.expanded(reach * p.h);
                let offset = self_weight_offset(p.kernel, self.sample.len(), p.dim, p.h, p.b);
                let (sample, kernel, h) = (self.sample, p.kernel, p.h);
                let est = mc_normalize(
                    |x| (kde_unchecked(sample, kernel, h, x) - offset).max(0.0),
                    &domain,
                    *draws,
                    *seed,
                )?;
                Ok((est, domain))
            }
        }
    }

    /// Normalized negative log-likelihood at one bandwidth.
    fn nll(&self, h: f64) -> Result<f64> {
        let p = self.pointwise(h)?;
        let (est, _) = self.integrate(&p)?;
        if !(est.integral > 0.0) {
            return Err(Error::DegenerateDomain);
        }
        let c = est.integral.recip();
        let normalized: Vec<f64> = p.values.iter().map(|v| c * v).collect();
        loss_nll_values(&normalized)
    }

    fn model_at(&self, h: f64) -> Result<DensityModel> {
        let p = self.pointwise(h)?;
        let (est, domain) = self.integrate(&p)?;
        if !(est.integral > 0.0) {
            return Err(Error::DegenerateDomain);
        }
        let interpolant = match self.config.variant {
            Variant::F2 => Some(build_interpolant(
                self.sample,
                &p.values,
                self.config.interpolation.method(self.sample.dim()),
            )?),
            Variant::F1 => None,
        };
        Ok(DensityModel {
            variant: self.config.variant,
            anchors: self.sample.clone(),
            pointwise: p,
            interpolant,
            domain,
            normalization_constant: est.integral.recip(),
            integral: est,
            h_star: h,
            mc_samples: self.config.mc_draws(self.sample.dim()),
            mc_seed: self.config.seed,
            whitening: None,
            loss_curve: None,
        })
    }
}

/// Normalized-NLL loss over `grid`, one full estimate per bandwidth. Grid
/// points that fail are recorded and skipped by the argmin.
pub fn nll_curve(sample: &Sample, config: &FitConfig, grid: &BandwidthGrid) -> Result<LossCurve> {
    let prepared = Prepared::new(sample, config)?;
    let results = grid
        .values()
        .par_iter()
        .map(|&h| {
            let r = prepared.nll(h);
            if let Err(e) = &r {
                log::warn!("bandwidth {h}: {e}");
            }
            r
        })
        .collect();
    Ok(LossCurve::from_results(grid, results))
}

/// A fitted, normalized density.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityModel {
    pub variant: Variant,
    /// Sample the model was fitted on, in fit coordinates.
    pub anchors: Sample,
    pub pointwise: PointwiseEstimate,
    /// Present for [`Variant::F2`].
    pub interpolant: Option<Interpolant>,
    /// Box outside which the density is zero.
    pub domain: DomainBox,
    /// `C = 1 / ∫ q`.
    pub normalization_constant: f64,
    pub integral: McEstimate,
    pub h_star: f64,
    pub mc_samples: usize,
    pub mc_seed: u64,
    pub whitening: Option<WhiteningTransform>,
    pub loss_curve: Option<LossCurve>,
}

impl DensityModel {
    pub fn kernel(&self) -> Kernel {
        self.pointwise.kernel
    }

    pub fn b(&self) -> f64 {
        self.pointwise.b
    }

    pub fn dim(&self) -> usize {
        self.anchors.dim()
    }

    /// Unnormalized extension `q(x)` in fit coordinates.
    pub fn unnormalized(&self, x: &[f64]) -> f64 {
        match &self.interpolant {
            Some(f) => f.evaluate(x),
            None => {
                if !self.domain.contains(x) {
                    return 0.0;
                }
                let p = &self.pointwise;
                let offset = self_weight_offset(p.kernel, self.anchors.len(), p.dim, p.h, p.b);
                (kde_unchecked(&self.anchors, p.kernel, p.h, x) - offset).max(0.0)
            }
        }
    }

    /// Normalized density in fit coordinates.
    pub fn density(&self, x: &[f64]) -> f64 {
        self.normalization_constant * self.unnormalized(x)
    }

    /// Normalized density at the anchors, `C · v_i`.
    pub fn sample_densities(&self) -> Vec<f64> {
        self.pointwise
            .values
            .iter()
            .map(|v| self.normalization_constant * v)
            .collect()
    }

    /// Density in the coordinates of the data handed to [`fit_whitened`]:
    /// whitened-space density times the whitening Jacobian.
    pub fn density_raw(&self, x: &[f64]) -> f64 {
        match &self.whitening {
            Some(t) => self.density(&t.apply(x)) * t.jacobian(),
            None => self.density(x),
        }
    }
}

/// Everything needed to rebuild a [`DensityModel`] without refitting.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelFile {
    pub variant: Variant,
    pub interpolation: Option<InterpolationMethod>,
    pub anchors: Sample,
    pub pointwise: PointwiseEstimate,
    pub domain: DomainBox,
    pub normalization_constant: f64,
    pub integral: McEstimate,
    pub h_star: f64,
    pub mc_samples: usize,
    pub mc_seed: u64,
    pub whitening: Option<WhiteningTransform>,
    pub loss_curve: Option<LossCurve>,
}

impl DensityModel {
    pub fn to_file(&self) -> ModelFile {
        ModelFile {
            variant: self.variant,
            interpolation: self.interpolant.as_ref().map(Interpolant::method),
            anchors: self.anchors.clone(),
            pointwise: self.pointwise.clone(),
            domain: self.domain.clone(),
            normalization_constant: self.normalization_constant,
            integral: self.integral,
            h_star: self.h_star,
            mc_samples: self.mc_samples,
            mc_seed: self.mc_seed,
            whitening: self.whitening.clone(),
            loss_curve: self.loss_curve.clone(),
        }
    }

    pub fn from_file(file: ModelFile) -> Result<Self> {
        if file.anchors.len() != file.pointwise.values.len() || file.anchors.dim() != file.pointwise.dim {
            return Err(Error::DimensionMismatch {
                expected: file.anchors.len(),
                found: file.pointwise.values.len(),
            });
        }
        let interpolant = match (file.variant, file.interpolation) {
            (Variant::F2, Some(m)) => Some(build_interpolant(&file.anchors, &file.pointwise.values, m)?),
            (Variant::F2, None) => {
                return Err(Error::InvalidParams("f2 model without interpolation method".into()))
            }
            (Variant::F1, _) => None,
        };
        Ok(DensityModel {
            variant: file.variant,
            anchors: file.anchors,
            pointwise: file.pointwise,
            interpolant,
            domain: file.domain,
            normalization_constant: file.normalization_constant,
            integral: file.integral,
            h_star: file.h_star,
            mc_samples: file.mc_samples,
            mc_seed: file.mc_seed,
            whitening: file.whitening,
            loss_curve: file.loss_curve,
        })
    }
}

/// Builds the model at a fixed bandwidth, skipping optimization.
pub fn fit_at_bandwidth(sample: &Sample, config: &FitConfig, h: f64) -> Result<DensityModel> {
    Prepared::new(sample, config)?.model_at(h)
}

/// Selects `h*` with the configured optimizer, then extends and normalizes
/// the estimate at `h*`. The sample is used as given.
pub fn fit_mcde(sample: &Sample, config: &FitConfig) -> Result<DensityModel> {
    if sample.len() < 2 {
        return Err(Error::EmptySample {
            required: 2,
            found: sample.len(),
        });
    }
    let (h_star, curve) = optimize(sample, config)?;
    let mut model = fit_at_bandwidth(sample, config, h_star)?;
    model.loss_curve = Some(curve);
    Ok(model)
}

/// Whitens the sample, fits in whitened space, and keeps the transform so
/// that [`DensityModel::density_raw`] answers in the original coordinates.
pub fn fit_whitened(sample: &Sample, config: &FitConfig) -> Result<DensityModel> {
    let (white, transform) = whiten(sample)?;
    let mut model = fit_mcde(&white, config)?;
    model.whitening = Some(transform);
    Ok(model)
}

/// `C = 1 / ∫ q` from the fit's Monte Carlo integration. Values near one
/// indicate the unnormalized estimate already carried almost unit mass.
pub fn normalization_constant_diagnostic(model: &DensityModel) -> f64 {
    model.integral.integral.recip()
}
