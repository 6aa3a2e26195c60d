//! Sampled solution fields `g(0,0; x, t)` with optional kernel slices.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{CMat, C64};

/// Relative tolerance used when looking a coordinate up in a sample axis.
const AXIS_TOL: f64 = 1e-9;

/// Everything recorded at one `(x, t)` sample.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub center: CMat,
    /// `g(xi_i, 0)` over the quadrature nodes.
    pub y_slice: Option<Vec<CMat>>,
    /// `g(0, xi_j)` over the quadrature nodes.
    pub z_slice: Option<Vec<CMat>>,
    /// `g~(0, 0)` from the companion Fredholm solve.
    pub companion: Option<CMat>,
    pub det2: C64,
}

/// Values on the Cartesian product of two sorted axes; `None` marks samples
/// skipped by the patch monitor.
#[derive(Debug, Clone, PartialEq)]
pub struct SolutionField {
    xs: Vec<f64>,
    ts: Vec<f64>,
    rows: usize,
    cols: usize,
    quad_nodes: Vec<f64>,
    samples: Vec<Option<Sample>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Point {
    pub x: f64,
    pub t: f64,
}

pub(crate) fn find(axis: &[f64], v: f64) -> Option<usize> {
    let scale = axis.iter().fold(1.0_f64, |a, b| a.max(b.abs()));
    let i = axis.partition_point(|&a| a < v - AXIS_TOL * scale);
    (i < axis.len() && (axis[i] - v).abs() <= AXIS_TOL * scale).then_some(i)
}

/// Sorted, deduplicated copy of `values`.
pub fn axis(values: impl IntoIterator<Item = f64>) -> Vec<f64> {
    let mut v: Vec<f64> = values.into_iter().collect();
    v.sort_by(|a, b| a.partial_cmp(b).expect("finite coordinates"));
    v.dedup_by(|a, b| (*a - *b).abs() <= AXIS_TOL * a.abs().max(1.0));
    v
}

impl SolutionField {
    pub fn new(
        xs: Vec<f64>,
        ts: Vec<f64>,
        rows: usize,
        cols: usize,
        quad_nodes: Vec<f64>,
        samples: Vec<Option<Sample>>,
    ) -> Result<Self> {
        if samples.len() != xs.len() * ts.len() {
            return Err(Error::Field(format!(
                "{} samples for a {}x{} grid",
                samples.len(),
                xs.len(),
                ts.len()
            )));
        }
        for s in samples.iter().flatten() {
            if s.center.nrows() != rows || s.center.ncols() != cols {
                return Err(Error::Dimension("sample has wrong matrix shape".into()));
            }
            if !crate::linalg::is_finite(&s.center) {
                return Err(Error::Field("non-finite sample".into()));
            }
        }
        Ok(Self {
            xs,
            ts,
            rows,
            cols,
            quad_nodes,
            samples,
        })
    }

    /// Field with every sample given by `f`; useful for closed-form tests.
    pub fn from_fn(xs: Vec<f64>, ts: Vec<f64>, rows: usize, cols: usize, f: impl Fn(f64, f64) -> CMat) -> Result<Self> {
        let samples = ts
            .iter()
            .flat_map(|&t| xs.iter().map(move |&x| (x, t)))
            .map(|(x, t)| {
                Some(Sample {
                    center: f(x, t),
                    y_slice: None,
                    z_slice: None,
                    companion: None,
                    det2: C64::new(1.0, 0.0),
                })
            })
            .collect();
        Self::new(xs, ts, rows, cols, Vec::new(), samples)
    }

    pub fn xs(&self) -> &[f64] {
        &self.xs
    }

    pub fn ts(&self) -> &[f64] {
        &self.ts
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn quad_nodes(&self) -> &[f64] {
        &self.quad_nodes
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Samples in `t`-major order.
    pub fn samples(&self) -> &[Option<Sample>] {
        &self.samples
    }

    pub fn points(&self) -> impl Iterator<Item = Point> + '_ {
        self.ts
            .iter()
            .flat_map(move |&t| self.xs.iter().map(move |&x| Point { x, t }))
    }

    pub fn sample(&self, x: f64, t: f64) -> Option<&Sample> {
        let i = find(&self.xs, x)?;
        let j = find(&self.ts, t)?;
        self.samples[j * self.xs.len() + i].as_ref()
    }

    pub fn center(&self, x: f64, t: f64) -> Option<&CMat> {
        self.sample(x, t).map(|s| &s.center)
    }

    pub fn skipped(&self) -> usize {
        self.samples.iter().filter(|s| s.is_none()).count()
    }

    /// Whether every `x` (resp. `t`) coordinate has its negative on the axis.
    pub fn mirror_closed(&self, in_x: bool, in_t: bool) -> bool {
        let closed = |axis: &[f64]| axis.iter().all(|&v| find(axis, -v).is_some());
        (!in_x || closed(&self.xs)) && (!in_t || closed(&self.ts))
    }

    /// Replaces every center by `f(center)`, keeping the sample layout.
    pub fn map_centers(&self, f: impl Fn(&CMat) -> CMat) -> Self {
        let samples = self
            .samples
            .iter()
            .map(|s| {
                s.as_ref().map(|s| {
                    let c = f(&s.center);
                    Sample {
                        center: c,
                        y_slice: None,
                        z_slice: None,
                        companion: None,
                        det2: s.det2,
                    }
                })
            })
            .collect::<Vec<_>>();
        let (rows, cols) = samples
            .iter()
            .flatten()
            .next()
            .map(|s| (s.center.nrows(), s.center.ncols()))
            .unwrap_or((self.rows, self.cols));
        Self {
            samples,
            rows,
            cols,
            ..self.clone()
        }
    }

    /// Field of the companion values `g~(0,0)`, when recorded.
    pub fn companion_field(&self) -> Option<Self> {
        let mut rows_cols = None;
        let mut samples = Vec::with_capacity(self.samples.len());
        for s in &self.samples {
            match s {
                None => samples.push(None),
                Some(s) => {
                    let c = s.companion.clone()?;
                    rows_cols = Some((c.nrows(), c.ncols()));
                    samples.push(Some(Sample {
                        center: c,
                        y_slice: None,
                        z_slice: None,
                        companion: Some(s.center.clone()),
                        det2: s.det2,
                    }));
                }
            }
        }
        let (rows, cols) = rows_cols.unwrap_or((self.cols, self.rows));
        Some(Self {
            samples,
            rows,
            cols,
            ..self.clone()
        })
    }

    pub fn max_norm(&self) -> f64 {
        self.samples
            .iter()
            .flatten()
            .map(|s| crate::linalg::max_abs(&s.center))
            .fold(0.0, f64::max)
    }
}
