//! From the chain's stationary distribution to a normalized density on `R^D`.
//!
//! The pipeline per bandwidth is: pointwise values at the sample points
//! (proportional to the stationary distribution), extension to the whole
//! space ([`Variant::F1`] via the KDE, [`Variant::F2`] via interpolation),
//! and Monte Carlo normalization. [`fit_mcde`] runs it over a bandwidth grid
//! and keeps the bandwidth with the smallest normalized negative
//! log-likelihood.

mod fit;
mod interpolate;
mod montecarlo;
mod pointwise;

pub use fit::{
    fit_at_bandwidth, fit_mcde, fit_whitened, nll_curve, normalization_constant_diagnostic, DensityModel, FitConfig,
    InterpolationChoice, ModelFile, Variant,
};
pub use interpolate::{build_interpolant, DomainBox, Interpolant, InterpolationMethod, Stencil};
pub use montecarlo::{mc_normalize, summarize, McEstimate, UnitDraws, MIN_DRAWS};
pub use pointwise::{f1_evaluate, kde_evaluate, pointwise_estimate, self_weight_offset, PointwiseEstimate};
