//! Smoothing kernels and their analytic constants.
//!
//! A [`Kernel`] is a symmetric, non-increasing profile `K(u)` normalized to
//! unit mass on the real line. Multivariate use goes through
//! [`Kernel::in_dim`], which returns the radially symmetric kernel
//! `c_D · p(|x|)` normalized over `R^D`. For `D = 1` it coincides with the
//! univariate table values.

use std::f64::consts::{FRAC_1_SQRT_2, PI};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use statrs::function::gamma::gamma;

use crate::error::Error;

const FRAC_1_SQRT_2PI: f64 = FRAC_1_SQRT_2 * 0.564_189_583_547_756_3; // 1/√2 · 1/√π

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Kernel {
    #[default]
    Gaussian,
    Exponential,
    Uniform,
    Triangular,
    Epanechnikov,
    Cosine,
}

/// Moments and shape constants of a univariate kernel.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelConstants {
    /// `K(0)`.
    pub k0: f64,
    /// `∫ u² K(u) du`.
    pub sigma2_k: f64,
    /// `∫ K(u)² du`.
    pub r_k: f64,
    /// Interpolation-error exponents, defined for compact kernels only.
    pub alpha: Option<f64>,
    pub beta: Option<f64>,
    /// `|K''(0)| / K(0)`.
    pub gamma: f64,
}

impl Kernel {
    pub const ALL: [Kernel; 6] = [
        Kernel::Gaussian,
        Kernel::Exponential,
        Kernel::Uniform,
        Kernel::Triangular,
        Kernel::Epanechnikov,
        Kernel::Cosine,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Kernel::Gaussian => "gaussian",
            Kernel::Exponential => "exponential",
            Kernel::Uniform => "uniform",
            Kernel::Triangular => "triangular",
            Kernel::Epanechnikov => "epanechnikov",
            Kernel::Cosine => "cosine",
        }
    }

    /// 1 for compact families, infinite otherwise.
    pub fn support_radius(self) -> f64 {
        match self {
            Kernel::Gaussian | Kernel::Exponential => f64::INFINITY,
            _ => 1.0,
        }
    }

    pub fn is_compact(self) -> bool {
        self.support_radius().is_finite()
    }

    /// Univariate `K(u)`; zero outside the support.
    pub fn eval(self, u: f64) -> f64 {
        self.in_dim(1).eval(u.abs())
    }

    /// Unnormalized radial profile `p(r)`, `r ≥ 0`, with `p(0) = 1`.
    pub fn profile(self, r: f64) -> f64 {
        if r > self.support_radius() {
            return 0.0;
        }
        match self {
            Kernel::Gaussian => (-0.5 * r * r).exp(),
            Kernel::Exponential => (-r).exp(),
            Kernel::Uniform => 1.0,
            Kernel::Triangular => 1.0 - r,
            Kernel::Epanechnikov => 1.0 - r * r,
            Kernel::Cosine => (0.5 * PI * r).cos(),
        }
    }

    /// `c_D` such that `c_D · p(|x|)` integrates to one over `R^D`.
    pub fn radial_normalizer(self, dim: usize) -> f64 {
        assert!(dim >= 1, "dimension must be at least 1");
        if dim == 1 {
            return match self {
                Kernel::Gaussian => FRAC_1_SQRT_2PI,
                Kernel::Exponential | Kernel::Uniform => 0.5,
                Kernel::Triangular => 1.0,
                Kernel::Epanechnikov => 0.75,
                Kernel::Cosine => 0.25 * PI,
            };
        }
        let d = dim as f64;
        let sphere = 2.0 * PI.powf(0.5 * d) / gamma(0.5 * d);
        let mass = match self {
            Kernel::Gaussian => (2.0 * PI).powf(0.5 * d),
            Kernel::Exponential => sphere * gamma(d),
            Kernel::Uniform => sphere / d,
            Kernel::Triangular => sphere / (d * (d + 1.0)),
            Kernel::Epanechnikov => sphere * 2.0 / (d * (d + 2.0)),
            Kernel::Cosine => sphere * cosine_radial_moment(dim - 1),
        };
        1.0 / mass
    }

    /// The kernel normalized over `R^dim`, ready for repeated evaluation.
    pub fn in_dim(self, dim: usize) -> RadialKernel {
        RadialKernel {
            kernel: self,
            dim,
            norm: self.radial_normalizer(dim),
        }
    }

    /// Hand-coded `K''(0)`. For kernels with a cusp at the origin this is the
    /// one-sided limit from `u > 0`.
    pub fn second_derivative_at_origin(self) -> f64 {
        match self {
            Kernel::Gaussian => -FRAC_1_SQRT_2PI,
            Kernel::Exponential => 0.5,
            Kernel::Uniform | Kernel::Triangular => 0.0,
            Kernel::Epanechnikov => -1.5,
            Kernel::Cosine => -0.25 * PI * 0.25 * PI * PI,
        }
    }

    pub fn constants(self) -> KernelConstants {
        let k0 = self.eval(0.0);
        let (sigma2_k, r_k, alpha, beta) = match self {
            Kernel::Gaussian => (1.0, 0.5 / PI.sqrt(), None, None),
            Kernel::Exponential => (2.0, 0.25, None, None),
            Kernel::Uniform => (1.0 / 3.0, 0.5, Some(1.0), Some(0.0)),
            Kernel::Triangular => (1.0 / 6.0, 2.0 / 3.0, Some(2.0), Some(1.0)),
            Kernel::Epanechnikov => (0.2, 0.6, Some(2.0), Some(1.0)),
            Kernel::Cosine => (1.0 - 8.0 / (PI * PI), PI * PI / 16.0, Some(2.0), Some(1.0)),
        };
        KernelConstants {
            k0,
            sigma2_k,
            r_k,
            alpha,
            beta,
            gamma: self.second_derivative_at_origin().abs() / k0,
        }
    }
}

/// `∫₀¹ rⁿ cos(πr/2) dr` by the standard integration-by-parts recurrence.
fn cosine_radial_moment(n: usize) -> f64 {
    let a = 0.5 * PI;
    let (s, c) = a.sin_cos();
    let mut cos_m = s / a; // ∫ r^k cos(ar)
    let mut sin_m = (1.0 - c) / a; // ∫ r^k sin(ar)
    for k in 1..=n {
        let kf = k as f64;
        let next_cos = s / a - kf / a * sin_m;
        let next_sin = -c / a + kf / a * cos_m;
        cos_m = next_cos;
        sin_m = next_sin;
    }
    cos_m
}

impl fmt::Display for Kernel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Kernel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Kernel::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::InvalidParams(format!("unknown kernel `{s}`")))
    }
}

/// A kernel bound to a dimension, with its normalizer cached.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RadialKernel {
    kernel: Kernel,
    dim: usize,
    norm: f64,
}

impl RadialKernel {
    pub fn kernel(&self) -> Kernel {
        self.kernel
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// `K(r)` for a non-negative scaled distance `r = d/h`.
    #[inline]
    pub fn eval(&self, r: f64) -> f64 {
        self.norm * self.kernel.profile(r)
    }

    /// `K(0)` in this dimension.
    pub fn at_origin(&self) -> f64 {
        self.norm
    }
}
