//! Seeded generators and exact densities for the synthetic benchmarks.
//!
//! Multivariate distributions are products of one univariate family along
//! every coordinate. Draws are reproducible per `(seed, row)`: each row reads
//! from its own ChaCha8 stream, so rows can be generated in any order.
//!
//! Parameterizations: `normal:μ,σ²` (variance, not standard deviation),
//! `chisq:k`, `exp:λ` (rate), `gamma:k` (shape, unit scale),
//! `loglaplace:μ,s` (`exp(Y)` with `Y ~ Laplace(μ, s)`), and
//! `mix:A+B+…` with equal weights unless written as `w*A`.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{ChiSquared, Distribution, Exp, Gamma, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;
use statrs::function::gamma::{gamma_lr, ln_gamma};

use crate::error::{Error, Result};
use crate::sample::Sample;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum DistributionSpec {
    Normal { mean: f64, var: f64 },
    ChiSquared { df: f64 },
    Exponential { rate: f64 },
    Gamma { shape: f64 },
    LogLaplace { loc: f64, scale: f64 },
    /// Weighted components; weights sum to one.
    Mixture(Vec<(f64, DistributionSpec)>),
}

impl DistributionSpec {
    pub fn normal(mean: f64, var: f64) -> Self {
        Self::Normal { mean, var }
    }

    /// Equal-weight mixture.
    pub fn mixture(components: Vec<DistributionSpec>) -> Self {
        let w = 1.0 / components.len() as f64;
        Self::Mixture(components.into_iter().map(|c| (w, c)).collect())
    }

    pub fn validate(&self) -> Result<()> {
        let ok = match self {
            Self::Normal { mean, var } => mean.is_finite() && *var > 0.0 && var.is_finite(),
            Self::ChiSquared { df } => *df > 0.0 && df.is_finite(),
            Self::Exponential { rate } => *rate > 0.0 && rate.is_finite(),
            Self::Gamma { shape } => *shape > 0.0 && shape.is_finite(),
            Self::LogLaplace { loc, scale } => loc.is_finite() && *scale > 0.0 && scale.is_finite(),
            Self::Mixture(parts) => {
                for (_, c) in parts {
                    if matches!(c, Self::Mixture(_)) {
                        return Err(Error::InvalidParams("nested mixtures are not supported".into()));
                    }
                    c.validate()?;
                }
                let total: f64 = parts.iter().map(|(w, _)| w).sum();
                !parts.is_empty() && parts.iter().all(|(w, _)| *w > 0.0) && (total - 1.0).abs() < 1e-9
            }
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidParams(format!("invalid distribution parameters: {self}")))
        }
    }

    /// Univariate density; zero outside the support.
    pub fn pdf1(&self, x: f64) -> f64 {
        match *self {
            Self::Normal { mean, var } => {
                let z = x - mean;
                (-0.5 * z * z / var).exp() / (2.0 * std::f64::consts::PI * var).sqrt()
            }
            Self::ChiSquared { df } => gamma_pdf(0.5 * df, 2.0, x),
            Self::Exponential { rate } => {
                if x < 0.0 {
                    0.0
                } else {
                    rate * (-rate * x).exp()
                }
            }
            Self::Gamma { shape } => gamma_pdf(shape, 1.0, x),
            Self::LogLaplace { loc, scale } => {
                if x <= 0.0 {
                    0.0
                } else {
                    (-(x.ln() - loc).abs() / scale).exp() / (2.0 * scale * x)
                }
            }
            Self::Mixture(ref parts) => parts.iter().map(|(w, c)| w * c.pdf1(x)).sum(),
        }
    }

    /// Univariate distribution function.
    pub fn cdf1(&self, x: f64) -> f64 {
        match *self {
            Self::Normal { mean, var } => 0.5 * erfc(-(x - mean) / (2.0 * var).sqrt()),
            Self::ChiSquared { df } => {
                if x <= 0.0 {
                    0.0
                } else {
                    gamma_lr(0.5 * df, 0.5 * x)
                }
            }
            Self::Exponential { rate } => {
                if x <= 0.0 {
                    0.0
                } else {
                    1.0 - (-rate * x).exp()
                }
            }
            Self::Gamma { shape } => {
                if x <= 0.0 {
                    0.0
                } else {
                    gamma_lr(shape, x)
                }
            }
            Self::LogLaplace { loc, scale } => {
                if x <= 0.0 {
                    return 0.0;
                }
                let z = (x.ln() - loc) / scale;
                if z < 0.0 {
                    0.5 * z.exp()
                } else {
                    1.0 - 0.5 * (-z).exp()
                }
            }
            Self::Mixture(ref parts) => parts.iter().map(|(w, c)| w * c.cdf1(x)).sum(),
        }
    }

    /// Mean of the univariate distribution, where finite.
    pub fn mean1(&self) -> f64 {
        match *self {
            Self::Normal { mean, .. } => mean,
            Self::ChiSquared { df } => df,
            Self::Exponential { rate } => rate.recip(),
            Self::Gamma { shape } => shape,
            Self::LogLaplace { loc, scale } => {
                if scale < 1.0 {
                    loc.exp() / (1.0 - scale * scale)
                } else {
                    f64::INFINITY
                }
            }
            Self::Mixture(ref parts) => parts.iter().map(|(w, c)| w * c.mean1()).sum(),
        }
    }

    /// One univariate draw. Parameters must already be validated.
    pub fn draw1<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match *self {
            Self::Normal { mean, var } => Normal::new(mean, var.sqrt()).expect("validated").sample(rng),
            Self::ChiSquared { df } => ChiSquared::new(df).expect("validated").sample(rng),
            Self::Exponential { rate } => Exp::new(rate).expect("validated").sample(rng),
            Self::Gamma { shape } => Gamma::new(shape, 1.0).expect("validated").sample(rng),
            Self::LogLaplace { loc, scale } => {
                // Inverse CDF of the Laplace distribution.
                let u: f64 = rng.random::<f64>() - 0.5;
                (loc - scale * u.signum() * (1.0 - 2.0 * u.abs()).ln()).exp()
            }
            Self::Mixture(ref parts) => {
                let u: f64 = rng.random();
                let mut acc = 0.0;
                for (w, c) in parts {
                    acc += w;
                    if u < acc {
                        return c.draw1(rng);
                    }
                }
                parts.last().expect("validated").1.draw1(rng)
            }
        }
    }
}

fn gamma_pdf(shape: f64, scale: f64, x: f64) -> f64 {
    if x < 0.0 {
        return 0.0;
    }
    if x == 0.0 {
        return match shape.partial_cmp(&1.0) {
            Some(std::cmp::Ordering::Less) => f64::INFINITY,
            Some(std::cmp::Ordering::Equal) => scale.recip(),
            _ => 0.0,
        };
    }
    ((shape - 1.0) * x.ln() - x / scale - ln_gamma(shape) - shape * scale.ln()).exp()
}

/// Product density `Π_j f(x_j)`.
pub fn pdf_eval(spec: &DistributionSpec, x: &[f64]) -> f64 {
    x.iter().map(|&v| spec.pdf1(v)).product()
}

fn row_rng(seed: u64, row: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(row);
    rng
}

fn draw_rows(spec: &DistributionSpec, rows: std::ops::Range<usize>, d: usize, seed: u64) -> Vec<f64> {
    let chunks: Vec<Vec<f64>> = rows
        .into_par_iter()
        .map(|i| {
            let mut rng = row_rng(seed, i as u64);
            (0..d).map(|_| spec.draw1(&mut rng)).collect()
        })
        .collect();
    chunks.concat()
}

/// `n` points in `d` dimensions, every coordinate i.i.d. from `spec`.
pub fn sample_product(spec: &DistributionSpec, n: usize, d: usize, seed: u64) -> Result<Sample> {
    spec.validate()?;
    if n == 0 || d == 0 {
        return Err(Error::InvalidParams(format!("need n >= 1 and d >= 1, got n={n}, d={d}")));
    }
    Sample::new(draw_rows(spec, 0..n, d, seed), d)
}

/// Points with inlier/outlier labels (`true` = outlier).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledSample {
    pub points: Sample,
    pub labels: Vec<bool>,
    pub inlier: DistributionSpec,
    pub outlier: DistributionSpec,
    pub seed: u64,
}

impl LabeledSample {
    pub fn n_outliers(&self) -> usize {
        self.labels.iter().filter(|&&l| l).count()
    }

    /// Outlier fraction `1 − c`.
    pub fn contamination(&self) -> f64 {
        self.n_outliers() as f64 / self.labels.len() as f64
    }
}

/// Exactly `n_in` inlier and `n_out` outlier points, order shuffled by seed.
pub fn sample_mixture(
    fin: &DistributionSpec,
    fout: &DistributionSpec,
    n_in: usize,
    n_out: usize,
    d: usize,
    seed: u64,
) -> Result<LabeledSample> {
    fin.validate()?;
    fout.validate()?;
    if n_in == 0 || n_out == 0 || d == 0 {
        return Err(Error::InvalidParams(format!(
            "need n_in, n_out, d >= 1, got {n_in}, {n_out}, {d}"
        )));
    }
    let n = n_in + n_out;
    let mut data = draw_rows(fin, 0..n_in, d, seed);
    data.extend(draw_rows(fout, n_in..n, d, seed));
    let mut order: Vec<usize> = (0..n).collect();
    rand::seq::SliceRandom::shuffle(order.as_mut_slice(), &mut row_rng(seed, u64::MAX));
    let raw = Sample::new(data, d)?;
    Ok(LabeledSample {
        points: raw.select(&order),
        labels: order.iter().map(|&i| i >= n_in).collect(),
        inlier: fin.clone(),
        outlier: fout.clone(),
        seed,
    })
}

/// Inlier/outlier recipe for a synthetic outlier benchmark.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutlierDataset {
    pub name: String,
    pub inlier: DistributionSpec,
    pub outlier: DistributionSpec,
    pub n_in: usize,
    pub n_out: usize,
}

impl OutlierDataset {
    /// 450 × N(4, 0.5) inliers, 50 × Log-Laplace(2, 1) outliers.
    pub fn dataset1() -> Self {
        Self {
            name: "dataset1".into(),
            inlier: DistributionSpec::normal(4.0, 0.5),
            outlier: DistributionSpec::LogLaplace { loc: 2.0, scale: 1.0 },
            n_in: 450,
            n_out: 50,
        }
    }

    /// 180 × Exp(1) inliers, 20 × N(5, 1) outliers.
    pub fn dataset2() -> Self {
        Self {
            name: "dataset2".into(),
            inlier: DistributionSpec::Exponential { rate: 1.0 },
            outlier: DistributionSpec::normal(5.0, 1.0),
            n_in: 180,
            n_out: 20,
        }
    }

    /// 950 × Gamma(2) inliers, 50 × Gamma(12) outliers.
    pub fn dataset3() -> Self {
        Self {
            name: "dataset3".into(),
            inlier: DistributionSpec::Gamma { shape: 2.0 },
            outlier: DistributionSpec::Gamma { shape: 12.0 },
            n_in: 950,
            n_out: 50,
        }
    }

    pub fn by_name(name: &str) -> Result<Self> {
        match name {
            "dataset1" => Ok(Self::dataset1()),
            "dataset2" => Ok(Self::dataset2()),
            "dataset3" => Ok(Self::dataset3()),
            _ => Err(Error::InvalidParams(format!("unknown dataset `{name}`"))),
        }
    }

    pub fn n(&self) -> usize {
        self.n_in + self.n_out
    }

    pub fn generate(&self, d: usize, seed: u64) -> Result<LabeledSample> {
        sample_mixture(&self.inlier, &self.outlier, self.n_in, self.n_out, d, seed)
    }
}

impl fmt::Display for DistributionSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Normal { mean, var } => write!(f, "normal:{mean},{var}"),
            Self::ChiSquared { df } => write!(f, "chisq:{df}"),
            Self::Exponential { rate } => write!(f, "exp:{rate}"),
            Self::Gamma { shape } => write!(f, "gamma:{shape}"),
            Self::LogLaplace { loc, scale } => write!(f, "loglaplace:{loc},{scale}"),
            Self::Mixture(parts) => {
                let equal = parts.windows(2).all(|w| w[0].0 == w[1].0);
                f.write_str("mix:")?;
                for (i, (w, c)) in parts.iter().enumerate() {
                    if i > 0 {
                        f.write_str("+")?;
                    }
                    if equal {
                        write!(f, "{c}")?;
                    } else {
                        write!(f, "{w}*{c}")?;
                    }
                }
                Ok(())
            }
        }
    }
}

fn parse_params(s: &str, expected: usize, family: &str) -> Result<Vec<f64>> {
    let values = s
        .split(',')
        .map(|p| p.trim().parse::<f64>())
        .collect::<std::result::Result<Vec<_>, _>>()
        .map_err(|e| Error::InvalidParams(format!("{family}: {e}")))?;
    if values.len() != expected {
        return Err(Error::InvalidParams(format!(
            "{family} takes {expected} parameter(s), got {}",
            values.len()
        )));
    }
    Ok(values)
}

impl FromStr for DistributionSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let (family, rest) = s
            .split_once(':')
            .ok_or_else(|| Error::InvalidParams(format!("distribution `{s}` needs `family:params`")))?;
        let spec = match family {
            "normal" => {
                let p = parse_params(rest, 2, family)?;
                Self::Normal { mean: p[0], var: p[1] }
            }
            "chisq" => Self::ChiSquared {
                df: parse_params(rest, 1, family)?[0],
            },
            "exp" | "exponential" => Self::Exponential {
                rate: parse_params(rest, 1, family)?[0],
            },
            "gamma" => Self::Gamma {
                shape: parse_params(rest, 1, family)?[0],
            },
            "loglaplace" => {
                let p = parse_params(rest, 2, family)?;
                Self::LogLaplace { loc: p[0], scale: p[1] }
            }
            "mix" => {
                let mut parts = Vec::new();
                let mut weighted = false;
                for item in rest.split('+') {
                    match item.split_once('*') {
                        Some((w, c)) => {
                            weighted = true;
                            let w = w
                                .trim()
                                .parse::<f64>()
                                .map_err(|e| Error::InvalidParams(format!("mixture weight: {e}")))?;
                            parts.push((w, c.parse()?));
                        }
                        None => parts.push((0.0, item.parse()?)),
                    }
                }
                if !weighted {
                    let w = 1.0 / parts.len() as f64;
                    parts.iter_mut().for_each(|p| p.0 = w);
                }
                Self::Mixture(parts)
            }
            _ => return Err(Error::InvalidParams(format!("unknown distribution family `{family}`"))),
        };
        spec.validate()?;
        Ok(spec)
    }
}

impl TryFrom<String> for DistributionSpec {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<DistributionSpec> for String {
    fn from(d: DistributionSpec) -> String {
        d.to_string()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn all_families() -> Vec<DistributionSpec> {
        ["normal:4,0.5", "chisq:5", "exp:1", "gamma:2", "gamma:12", "loglaplace:2,1", "mix:normal:0,2+normal:8,3"]
            .iter()
            .map(|s| s.parse().unwrap())
            .collect()
    }

    #[test]
    fn parse_and_display_round_trip() {
        for d in all_families() {
            assert_eq!(d.to_string().parse::<DistributionSpec>().unwrap(), d);
        }
        let w: DistributionSpec = "mix:0.25*normal:0,1+0.75*exp:2".parse().unwrap();
        assert_eq!(w.to_string(), "mix:0.25*normal:0,1+0.75*exp:2");
        assert!("normal:0".parse::<DistributionSpec>().is_err());
        assert!("normal:0,-1".parse::<DistributionSpec>().is_err());
        assert!("cauchy:0,1".parse::<DistributionSpec>().is_err());
        assert!("mix:0.2*normal:0,1+0.2*exp:1".parse::<DistributionSpec>().is_err());
    }

    #[test]
    fn pdf_point_values() {
        assert!((DistributionSpec::normal(0.0, 1.0).pdf1(0.0) - 0.398942).abs() < 1e-6);
        assert_eq!(DistributionSpec::Exponential { rate: 1.0 }.pdf1(-1.0), 0.0);
        // x^{3/2} e^{-x/2} / (2^{5/2} Γ(5/2)) at x = 3, Γ(5/2) = 3√π/4.
        let gamma_5_2 = 0.75 * std::f64::consts::PI.sqrt();
        let expected = 3f64.powf(1.5) * (-1.5f64).exp() / (2f64.powf(2.5) * gamma_5_2);
        let chi = DistributionSpec::ChiSquared { df: 5.0 }.pdf1(3.0);
        assert!((chi - expected).abs() < 1e-14);
        assert!((chi - 0.15418).abs() < 1e-5);
    }

    #[test]
    fn pdfs_integrate_to_one() {
        for d in all_families() {
            // Substitute x = e^t on (0, ∞) families to tame the log-laplace tail.
            let positive = !matches!(d, DistributionSpec::Normal { .. } | DistributionSpec::Mixture(_));
            let (a, b, n) = if positive { (-40.0, 40.0, 800_000) } else { (-40.0, 50.0, 400_000) };
            let h = (b - a) / n as f64;
            let mass: f64 = (0..n)
                .map(|i| {
                    let t = a + (i as f64 + 0.5) * h;
                    if positive {
                        d.pdf1(t.exp()) * t.exp() * h
                    } else {
                        d.pdf1(t) * h
                    }
                })
                .sum();
            assert!((mass - 1.0).abs() < 1e-6, "{d}: {mass}");
        }
    }

    #[test]
    fn product_density() {
        let d = DistributionSpec::ChiSquared { df: 5.0 };
        let x = [1.0, 2.5, 7.0];
        assert_eq!(pdf_eval(&d, &x), d.pdf1(1.0) * d.pdf1(2.5) * d.pdf1(7.0));
        assert_eq!(pdf_eval(&d, &[1.0, -1.0]), 0.0);
    }

    #[test]
    fn sample_means() {
        let chi = sample_product(&DistributionSpec::ChiSquared { df: 5.0 }, 100_000, 1, 1).unwrap();
        let m = chi.as_slice().iter().sum::<f64>() / 1e5;
        // sd of χ²(5) is √10.
        assert!((m - 5.0).abs() < 3.0 * 10f64.sqrt() / 1e5f64.sqrt(), "{m}");

        let mix: DistributionSpec = "mix:normal:0,2+normal:8,3".parse().unwrap();
        let s = sample_product(&mix, 100_000, 1, 2).unwrap();
        let m = s.as_slice().iter().sum::<f64>() / 1e5;
        // Var = E[var] + Var[means] = 2.5 + 16.
        assert!((m - 4.0).abs() < 3.0 * 18.5f64.sqrt() / 1e5f64.sqrt(), "{m}");
        assert_eq!(mix.mean1(), 4.0);
    }

    #[test]
    fn seeded_and_row_stable() {
        let d = DistributionSpec::Gamma { shape: 2.0 };
        let a = sample_product(&d, 50, 3, 9).unwrap();
        assert_eq!(a, sample_product(&d, 50, 3, 9).unwrap());
        let longer = sample_product(&d, 80, 3, 9).unwrap();
        assert_eq!(a.as_slice(), &longer.as_slice()[..150]);
        assert_ne!(a, sample_product(&d, 50, 3, 10).unwrap());
    }

    /// Kolmogorov–Smirnov statistic against the exact CDF.
    fn ks_statistic(d: &DistributionSpec, xs: &mut [f64]) -> f64 {
        xs.sort_by(f64::total_cmp);
        let n = xs.len() as f64;
        xs.iter()
            .enumerate()
            .map(|(i, &x)| {
                let f = d.cdf1(x);
                (f - i as f64 / n).abs().max(((i + 1) as f64 / n - f).abs())
            })
            .fold(0.0, f64::max)
    }

    #[test]
    fn generators_pass_ks() {
        let n = 10_000;
        // Asymptotic critical value at α = 0.001.
        let crit = (-(0.0005f64).ln() / 2.0).sqrt() / (n as f64).sqrt();
        for (seed, d) in all_families().into_iter().enumerate() {
            let mut xs = sample_product(&d, n, 1, seed as u64).unwrap().into_vec();
            let ks = ks_statistic(&d, &mut xs);
            assert!(ks < crit, "{d}: KS {ks} >= {crit}");
        }
    }

    #[test]
    fn labeled_mixture_counts() {
        let ds = OutlierDataset::dataset1();
        let s = ds.generate(2, 5).unwrap();
        assert_eq!(s.labels.len(), 500);
        assert_eq!(s.n_outliers(), 50);
        assert!((s.contamination() - 0.1).abs() < 1e-15);
        assert_eq!(s, ds.generate(2, 5).unwrap());
        // Shuffled: outliers are not all at the end.
        assert!(s.labels[..450].iter().any(|&l| l));
        let ds3 = OutlierDataset::dataset3();
        assert_eq!((ds3.n_in, ds3.n_out), (950, 50));
        assert!(sample_mixture(&ds.inlier, &ds.outlier, 0, 3, 1, 0).is_err());
    }

    #[test]
    fn serde_as_string() {
        let d: DistributionSpec = serde_json::from_str("\"gamma:12\"").unwrap();
        assert_eq!(d, DistributionSpec::Gamma { shape: 12.0 });
        assert_eq!(serde_json::to_string(&d).unwrap(), "\"gamma:12\"");
    }
}
