//! Extending sample-point values to the whole space.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sample::{squared_distance, Sample};

/// Axis-aligned box `Π [lo_j, hi_j]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DomainBox {
    lo: Vec<f64>,
    hi: Vec<f64>,
}

impl DomainBox {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>) -> Result<Self> {
        if lo.len() != hi.len() || lo.is_empty() {
            return Err(Error::DimensionMismatch {
                expected: lo.len(),
                found: hi.len(),
            });
        }
        if lo.iter().zip(&hi).any(|(l, h)| !(l <= h) || !l.is_finite() || !h.is_finite()) {
            return Err(Error::InvalidParams("box bounds need lo <= hi, finite".into()));
        }
        Ok(Self { lo, hi })
    }

    /// Bounding box of the sample; in one dimension this is `[x_(1), x_(N)]`.
    pub fn bounding(sample: &Sample) -> Self {
        let d = sample.dim();
        let mut lo = vec![f64::INFINITY; d];
        let mut hi = vec![f64::NEG_INFINITY; d];
        for r in sample.rows() {
            for j in 0..d {
                lo[j] = lo[j].min(r[j]);
                hi[j] = hi[j].max(r[j]);
            }
        }
        Self { lo, hi }
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn lo(&self) -> &[f64] {
        &self.lo
    }

    pub fn hi(&self) -> &[f64] {
        &self.hi
    }

    pub fn volume(&self) -> f64 {
        self.lo.iter().zip(&self.hi).map(|(l, h)| h - l).product()
    }

    /// Same box grown by `margin` on every side.
    pub fn expanded(&self, margin: f64) -> Self {
        Self {
            lo: self.lo.iter().map(|l| l - margin).collect(),
            hi: self.hi.iter().map(|h| h + margin).collect(),
        }
    }

    /// Membership with a relative slack so that points reproduced through a
    /// round trip of the whitening transform still count as inside.
    pub fn contains(&self, x: &[f64]) -> bool {
        x.iter().zip(self.lo.iter().zip(&self.hi)).all(|(v, (l, h))| {
            let tol = 1e-9 * (h - l).max(1.0);
            *v >= l - tol && *v <= h + tol
        })
    }

    /// Maps a point of the unit cube into the box.
    pub fn from_unit(&self, u: &[f64], out: &mut [f64]) {
        for (j, o) in out.iter_mut().enumerate() {
            *o = self.lo[j] + u[j] * (self.hi[j] - self.lo[j]);
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InterpolationMethod {
    /// Linear between consecutive order statistics. One dimension only.
    PiecewiseLinear1d,
    /// Value of the closest anchor, ties to the lowest index.
    NearestNeighbor,
}

impl InterpolationMethod {
    /// Exact linear interpolation in 1-D, nearest neighbor otherwise.
    pub fn default_for(dim: usize) -> Self {
        if dim == 1 {
            Self::PiecewiseLinear1d
        } else {
            Self::NearestNeighbor
        }
    }
}

/// How an interpolated value is assembled from anchor values. Depends only on
/// the query point and the anchor positions, so it can be reused for any
/// set of anchor values.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Stencil {
    Outside,
    Anchor(usize),
    /// `(1 − t) v[a] + t v[b]`.
    Segment { a: usize, b: usize, t: f64 },
}

impl Stencil {
    #[inline]
    pub fn apply(&self, values: &[f64]) -> f64 {
        match *self {
            Stencil::Outside => 0.0,
            Stencil::Anchor(i) => values[i],
            Stencil::Segment { a, b, t } => (1.0 - t) * values[a] + t * values[b],
        }
    }
}

/// Interpolating function anchored at the sample points. Zero outside its
/// domain box.
#[derive(Debug, Clone, PartialEq)]
pub struct Interpolant {
    method: InterpolationMethod,
    anchors: Sample,
    values: Vec<f64>,
    domain: DomainBox,
    /// Anchor indices sorted by coordinate (1-D linear only).
    order: Vec<usize>,
    sorted_x: Vec<f64>,
}

pub fn build_interpolant(sample: &Sample, values: &[f64], method: InterpolationMethod) -> Result<Interpolant> {
    if values.len() != sample.len() {
        return Err(Error::DimensionMismatch {
            expected: sample.len(),
            found: values.len(),
        });
    }
    if sample.is_empty() {
        return Err(Error::EmptySample {
            required: 1,
            found: 0,
        });
    }
    if let Some(v) = values.iter().find(|v| !v.is_finite()) {
        return Err(Error::InvalidParams(format!("non-finite anchor value {v}")));
    }
    let (order, sorted_x) = match method {
        InterpolationMethod::PiecewiseLinear1d => {
            if sample.dim() != 1 {
                return Err(Error::DimensionMismatch {
                    expected: 1,
                    found: sample.dim(),
                });
            }
            let mut order: Vec<usize> = (0..sample.len()).collect();
            let xs = sample.as_slice();
            order.sort_by(|&a, &b| xs[a].total_cmp(&xs[b]).then(a.cmp(&b)));
            let sorted_x = order.iter().map(|&i| xs[i]).collect();
            (order, sorted_x)
        }
        InterpolationMethod::NearestNeighbor => (Vec::new(), Vec::new()),
    };
    Ok(Interpolant {
        method,
        anchors: sample.clone(),
        values: values.to_vec(),
        domain: DomainBox::bounding(sample),
        order,
        sorted_x,
    })
}

impl Interpolant {
    pub fn method(&self) -> InterpolationMethod {
        self.method
    }

    pub fn domain(&self) -> &DomainBox {
        &self.domain
    }

    pub fn anchors(&self) -> &Sample {
        &self.anchors
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn evaluate(&self, x: &[f64]) -> f64 {
        self.stencil(x).apply(&self.values)
    }

    pub fn stencil(&self, x: &[f64]) -> Stencil {
        if !self.domain.contains(x) {
            return Stencil::Outside;
        }
        match self.method {
            InterpolationMethod::NearestNeighbor => Stencil::Anchor(self.nearest(x)),
            InterpolationMethod::PiecewiseLinear1d => self.segment(x[0]),
        }
    }

    fn nearest(&self, x: &[f64]) -> usize {
        let mut best = (f64::INFINITY, 0);
        for (i, r) in self.anchors.rows().enumerate() {
            let d = squared_distance(x, r);
            if d < best.0 {
                best = (d, i);
            }
        }
        best.1
    }

    fn segment(&self, x: f64) -> Stencil {
        let xs = &self.sorted_x;
        let n = xs.len();
        // First index with xs[p] > x.
        let p = xs.partition_point(|&a| a <= x);
        if p == 0 {
            return Stencil::Anchor(self.order[0]);
        }
        if p == n {
            return Stencil::Anchor(self.order[n - 1]);
        }
        let (a, b) = (xs[p - 1], xs[p]);
        let t = (x - a) / (b - a);
        if t == 0.0 {
            return Stencil::Anchor(self.order[p - 1]);
        }
        Stencil::Segment {
            a: self.order[p - 1],
            b: self.order[p],
            t,
        }
    }

    /// `∫ f_lin` over `[x_(1), x_(N)]` by the trapezoid rule on the order
    /// statistics, which is exact for piecewise-linear functions.
    pub fn trapezoid_integral(&self) -> Option<f64> {
        if self.method != InterpolationMethod::PiecewiseLinear1d {
            return None;
        }
        let v = |k: usize| self.values[self.order[k]];
        Some(
            self.sorted_x
                .windows(2)
                .enumerate()
                .map(|(k, w)| 0.5 * (w[1] - w[0]) * (v(k) + v(k + 1)))
                .sum(),
        )
    }
}
