//! Whitening and boundary-bias remedies applied to samples before estimation.

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sample::{Provenance, Sample};

const EIGEN_FLOOR: f64 = 1e-12;

/// Affine map `y = T (x − μ)` with `T = Σ^{-1/2}`, the symmetric inverse
/// square root of the sample covariance (N − 1 denominator).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WhiteningTransform {
    pub mean: Vec<f64>,
    /// Row-major D×D.
    pub transform: Vec<f64>,
    /// Row-major D×D, `Σ^{1/2}`.
    pub inverse: Vec<f64>,
    /// Covariance eigenvalues, descending.
    pub eigenvalues: Vec<f64>,
}

impl WhiteningTransform {
    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let centered: Vec<f64> = x.iter().zip(&self.mean).map(|(a, m)| a - m).collect();
        mat_vec(&self.transform, &centered)
    }

    pub fn invert(&self, y: &[f64]) -> Vec<f64> {
        mat_vec(&self.inverse, y)
            .into_iter()
            .zip(&self.mean)
            .map(|(v, m)| v + m)
            .collect()
    }

    pub fn apply_sample(&self, sample: &Sample) -> Result<Sample> {
        if sample.dim() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: sample.dim(),
            });
        }
        let data = sample.rows().flat_map(|r| self.apply(r)).collect();
        Ok(Sample::new(data, self.dim())?.with_provenance(Provenance::Whitened))
    }

    /// `|det T|`: a density in raw coordinates is the whitened-space density
    /// times this factor.
    pub fn jacobian(&self) -> f64 {
        self.eigenvalues.iter().map(|l| l.sqrt().recip()).product()
    }
}

fn mat_vec(m: &[f64], v: &[f64]) -> Vec<f64> {
    let d = v.len();
    (0..d)
        .map(|i| m[i * d..(i + 1) * d].iter().zip(v).map(|(a, b)| a * b).sum())
        .collect()
}

/// Unbiased sample mean and covariance.
pub fn mean_and_covariance(sample: &Sample) -> (Vec<f64>, DMatrix<f64>) {
    let (n, d) = (sample.len(), sample.dim());
    let mut mean = vec![0.0; d];
    for r in sample.rows() {
        for (m, x) in mean.iter_mut().zip(r) {
            *m += x;
        }
    }
    mean.iter_mut().for_each(|m| *m /= n as f64);
    let mut cov = DMatrix::<f64>::zeros(d, d);
    for r in sample.rows() {
        for i in 0..d {
            let ci = r[i] - mean[i];
            for j in i..d {
                cov[(i, j)] += ci * (r[j] - mean[j]);
            }
        }
    }
    let denom = (n as f64 - 1.0).max(1.0);
    for i in 0..d {
        for j in i..d {
            cov[(i, j)] /= denom;
            cov[(j, i)] = cov[(i, j)];
        }
    }
    (mean, cov)
}

/// Maps the sample to zero mean and identity covariance.
pub fn whiten(sample: &Sample) -> Result<(Sample, WhiteningTransform)> {
    let (n, d) = (sample.len(), sample.dim());
    if n < 2 {
        return Err(Error::EmptySample {
            required: 2,
            found: n,
        });
    }
    if n <= d {
        return Err(Error::SingularCovariance { ratio: 0.0 });
    }
    let (mean, cov) = mean_and_covariance(sample);
    let eig = SymmetricEigen::new(cov);
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let largest = eig.eigenvalues[order[0]];
    let smallest = eig.eigenvalues[order[d - 1]];
    if !(largest > 0.0) || smallest < EIGEN_FLOOR * largest {
        return Err(Error::SingularCovariance {
            ratio: if largest > 0.0 { smallest / largest } else { 0.0 },
        });
    }

    let mut vectors = DMatrix::<f64>::zeros(d, d);
    let mut eigenvalues = Vec::with_capacity(d);
    for (col, &k) in order.iter().enumerate() {
        let mut v = eig.eigenvectors.column(k).clone_owned();
        let pivot = v.iter().copied().fold(0.0f64, |acc, x| if x.abs() > acc.abs() { x } else { acc });
        if pivot < 0.0 {
            v.neg_mut();
        }
        vectors.set_column(col, &v);
        eigenvalues.push(eig.eigenvalues[k]);
    }
    let scaled = |power: f64| {
        let diag = DMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
            d,
            eigenvalues.iter().map(|l| l.powf(power)),
        ));
        &vectors * diag * vectors.transpose()
    };
    let row_major = |m: DMatrix<f64>| -> Vec<f64> { m.transpose().as_slice().to_vec() };
    let t = WhiteningTransform {
        mean,
        transform: row_major(scaled(-0.5)),
        inverse: row_major(scaled(0.5)),
        eigenvalues,
    };
    let out = t.apply_sample(sample)?;
    Ok((out, t))
}

/// Doubles a one-dimensional sample by mirroring it across `boundary`.
pub fn reflect_boundary(sample: &Sample, boundary: f64) -> Result<Sample> {
    if sample.dim() != 1 {
        return Err(Error::DimensionMismatch {
            expected: 1,
            found: sample.dim(),
        });
    }
    let xs = sample.as_slice();
    if let Some(&value) = xs.iter().find(|&&x| x < boundary) {
        return Err(Error::PointBelowBoundary { value, boundary });
    }
    let mirrored = xs.iter().map(|x| 2.0 * boundary - x);
    Sample::new(xs.iter().copied().chain(mirrored).collect(), 1)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum VariableTransform {
    Log,
    Logit,
}

impl VariableTransform {
    pub fn name(self) -> &'static str {
        match self {
            VariableTransform::Log => "log",
            VariableTransform::Logit => "logit",
        }
    }

    pub fn forward(self, x: f64) -> Result<f64> {
        match self {
            VariableTransform::Log if x > 0.0 => Ok(x.ln()),
            VariableTransform::Logit if x > 0.0 && x < 1.0 => Ok((x / (1.0 - x)).ln()),
            _ => Err(Error::DomainViolation {
                value: x,
                transform: self.name(),
            }),
        }
    }

    pub fn inverse(self, y: f64) -> f64 {
        match self {
            VariableTransform::Log => y.exp(),
            VariableTransform::Logit => 1.0 / (1.0 + (-y).exp()),
        }
    }
}

impl std::str::FromStr for VariableTransform {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "log" => Ok(Self::Log),
            "logit" => Ok(Self::Logit),
            _ => Err(Error::InvalidParams(format!("unknown transform `{s}`"))),
        }
    }
}

/// Elementwise `log` or `logit` of a one-dimensional sample. Densities of the
/// transformed variable need the Jacobian back-transformation by the caller.
pub fn transform_variable(sample: &Sample, kind: VariableTransform) -> Result<Sample> {
    if sample.dim() != 1 {
        return Err(Error::DimensionMismatch {
            expected: 1,
            found: sample.dim(),
        });
    }
    let ys = sample
        .as_slice()
        .iter()
        .map(|&x| kind.forward(x))
        .collect::<Result<Vec<_>>>()?;
    Sample::new(ys, 1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn correlated(n: usize, seed: u64) -> Sample {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let rows: Vec<[f64; 3]> = (0..n)
            .map(|_| {
                let z: [f64; 3] = [rng.random(), rng.random(), rng.random()];
                [
                    2.0 * z[0] + 1.0,
                    z[0] - 0.5 * z[1] + 3.0,
                    0.3 * z[0] + 0.2 * z[1] + 0.1 * z[2] - 4.0,
                ]
            })
            .collect();
        Sample::from_rows(&rows).unwrap()
    }

    #[test]
    fn two_symmetric_points() {
        let (w, t) = whiten(&Sample::from_values(&[-1.0, 1.0]).unwrap()).unwrap();
        let r = std::f64::consts::FRAC_1_SQRT_2;
        assert!((w.as_slice()[0] + r).abs() < 1e-15);
        assert!((w.as_slice()[1] - r).abs() < 1e-15);
        assert_eq!(w.provenance(), Provenance::Whitened);
        assert!((t.jacobian() - r).abs() < 1e-15);
    }

    #[test]
    fn identity_covariance() {
        let (w, t) = whiten(&correlated(500, 7)).unwrap();
        let (mean, cov) = mean_and_covariance(&w);
        for i in 0..3 {
            assert!(mean[i].abs() < 1e-10);
            for j in 0..3 {
                let e = if i == j { 1.0 } else { 0.0 };
                assert!((cov[(i, j)] - e).abs() < 1e-8, "cov[{i},{j}] = {}", cov[(i, j)]);
            }
        }
        assert!(t.eigenvalues.windows(2).all(|p| p[0] >= p[1]));
    }

    #[test]
    fn inverse_round_trip_and_idempotence() {
        let s = correlated(200, 3);
        let (w, t) = whiten(&s).unwrap();
        for (raw, white) in s.rows().zip(w.rows()) {
            let back = t.invert(white);
            for (a, b) in back.iter().zip(raw) {
                assert!((a - b).abs() < 1e-10);
            }
        }
        let (again, _) = whiten(&w).unwrap();
        for (a, b) in again.as_slice().iter().zip(w.as_slice()) {
            assert!((a - b).abs() < 1e-8);
        }
    }

    #[test]
    fn singular_covariance_detected() {
        let s = Sample::from_rows(&[[0.0, 0.0], [1.0, 2.0], [2.0, 4.0], [3.0, 6.0]]).unwrap();
        assert!(matches!(whiten(&s), Err(Error::SingularCovariance { .. })));
        let tiny = Sample::from_rows(&[[0.0, 1.0], [1.0, 0.0]]).unwrap();
        assert!(matches!(whiten(&tiny), Err(Error::SingularCovariance { .. })));
    }

    #[test]
    fn reflection() {
        let s = Sample::from_values(&[1.0, 2.0]).unwrap();
        assert_eq!(reflect_boundary(&s, 0.0).unwrap().as_slice(), &[1.0, 2.0, -1.0, -2.0]);
        let at = Sample::from_values(&[0.0, 3.0]).unwrap();
        assert_eq!(reflect_boundary(&at, 0.0).unwrap().as_slice(), &[0.0, 3.0, 0.0, -3.0]);
        assert!(matches!(
            reflect_boundary(&s, 1.5),
            Err(Error::PointBelowBoundary { .. })
        ));
    }

    #[test]
    fn log_and_logit() {
        let s = Sample::from_values(&[1.0, std::f64::consts::E]).unwrap();
        let y = transform_variable(&s, VariableTransform::Log).unwrap();
        assert_eq!(y.as_slice()[0], 0.0);
        assert!((y.as_slice()[1] - 1.0).abs() < 1e-15);
        let half = transform_variable(&Sample::from_values(&[0.5]).unwrap(), VariableTransform::Logit).unwrap();
        assert_eq!(half.as_slice(), &[0.0]);
        for x in [1e-6, 0.1, 0.37, 0.5, 0.93] {
            let y = VariableTransform::Logit.forward(x).unwrap();
            assert!((VariableTransform::Logit.inverse(y) - x).abs() < 1e-12);
        }
        assert!(matches!(
            transform_variable(&Sample::from_values(&[1.0]).unwrap(), VariableTransform::Logit),
            Err(Error::DomainViolation { .. })
        ));
        assert!(transform_variable(&Sample::from_values(&[0.0]).unwrap(), VariableTransform::Log).is_err());
    }
}
