//! Matrix-valued profiles of one real variable on a uniform periodic master grid.
//!
//! A [`MatrixProfile`] holds the Hankel symbol `p(s; t)` sampled at the nodes
//! `s_i = -X + i h_x`. Every two-argument kernel built downstream evaluates
//! the profile at `y + z + x`, so all grids are kept commensurate with the
//! master spacing and evaluation is exact node lookup, never interpolation.
//!
//! Spectral coefficients use the forward kernel `e^{+2 pi i kappa s}` with
//! `kappa_k = k / (2X)`, `k` in `-M/2 .. M/2`, stored in centred order:
//!
//! ```text
//! c_k  = h_x * sum_i p(s_i) e^{+2 pi i kappa_k s_i}
//! p_i  = 1/(2X) * sum_k c_k e^{-2 pi i kappa_k s_i}
//! ```
//!
//! so that `sum |p_i|^2 h_x = 1/(2X) sum |c_k|^2`.

use std::sync::Arc;

use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{from_rows, CMat, C64};

/// Fraction of the domain (at each end) treated as the boundary layer by the decay check.
const BOUNDARY_FRACTION: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MasterGrid {
    half_width: f64,
    nodes: usize,
}

impl MasterGrid {
    pub fn new(half_width: f64, nodes: usize) -> Result<Self> {
        if !(half_width > 0.0) || !half_width.is_finite() {
            return Err(Error::InvalidGrid(format!(
                "half width must be positive, got {half_width}"
            )));
        }
        if nodes < 4 || !nodes.is_multiple_of(2) {
            return Err(Error::InvalidGrid(format!(
                "node count must be even and at least 4, got {nodes}"
            )));
        }
        Ok(Self { half_width, nodes })
    }

    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    pub fn len(&self) -> usize {
        self.nodes
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn spacing(&self) -> f64 {
        2.0 * self.half_width / self.nodes as f64
    }

    pub fn node(&self, i: usize) -> f64 {
        -self.half_width + i as f64 * self.spacing()
    }

    pub fn nodes(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.nodes).map(move |i| self.node(i))
    }

    /// Physical frequency of the coefficient stored at centred index `j`.
    pub fn frequency(&self, j: usize) -> f64 {
        (j as f64 - (self.nodes / 2) as f64) / (2.0 * self.half_width)
    }

    /// Index of the node at `s`, which must coincide with a node to within
    /// `1e-9` spacings.
    pub fn index_of(&self, s: f64) -> Result<usize> {
        let lo = -self.half_width;
        let hi = self.half_width;
        let h = self.spacing();
        let pos = (s - lo) / h;
        let nearest = pos.round();
        let offset = pos - nearest;
        if offset.abs() > 1e-9 {
            return Err(Error::OffGrid { s, offset });
        }
        if nearest < 0.0 || nearest >= self.nodes as f64 {
            return Err(Error::OutOfDomain { s, lo, hi });
        }
        Ok(nearest as usize)
    }

    /// Number of master spacings in `step`; errors unless `step` is an exact
    /// positive multiple.
    pub fn multiple_of_spacing(&self, step: f64) -> Result<usize> {
        let ratio = step / self.spacing();
        let k = ratio.round();
        if k < 1.0 || (ratio - k).abs() > 1e-9 * k.max(1.0) {
            return Err(Error::InvalidGrid(format!(
                "step {step} is not a positive integer multiple of the master spacing {}",
                self.spacing()
            )));
        }
        Ok(k as usize)
    }
}

/// Samples of an `rows x cols` complex matrix function at every master node.
#[derive(Debug, Clone, PartialEq)]
pub struct MatrixProfile {
    grid: MasterGrid,
    rows: usize,
    cols: usize,
    data: Vec<C64>,
    time: f64,
}

impl MatrixProfile {
    pub fn zeros(grid: MasterGrid, rows: usize, cols: usize) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::Dimension(format!(
                "matrix dimensions must be positive, got {rows}x{cols}"
            )));
        }
        Ok(Self {
            grid,
            rows,
            cols,
            data: vec![C64::new(0.0, 0.0); grid.len() * rows * cols],
            time: 0.0,
        })
    }

    /// Builds a profile by evaluating `f` at every node.
    pub fn from_fn(grid: MasterGrid, rows: usize, cols: usize, mut f: impl FnMut(f64) -> CMat) -> Result<Self> {
        let mut p = Self::zeros(grid, rows, cols)?;
        for i in 0..grid.len() {
            let m = f(grid.node(i));
            if m.nrows() != rows || m.ncols() != cols {
                return Err(Error::Dimension(format!(
                    "sample at node {i} is {}x{}, expected {rows}x{cols}",
                    m.nrows(),
                    m.ncols()
                )));
            }
            p.set_sample(i, &m);
        }
        Ok(p)
    }

    pub fn grid(&self) -> &MasterGrid {
        &self.grid
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn with_time(mut self, t: f64) -> Self {
        self.time = t;
        self
    }

    pub fn raw(&self) -> &[C64] {
        &self.data
    }

    #[inline]
    pub fn entry(&self, node: usize, r: usize, c: usize) -> C64 {
        self.data[(node * self.rows + r) * self.cols + c]
    }

    pub fn sample(&self, node: usize) -> CMat {
        CMat::from_fn(self.rows, self.cols, |r, c| self.entry(node, r, c))
    }

    pub fn set_sample(&mut self, node: usize, m: &CMat) {
        for r in 0..self.rows {
            for c in 0..self.cols {
                self.data[(node * self.rows + r) * self.cols + c] = m[(r, c)];
            }
        }
    }

    /// Stored sample at node `s`. Off-node or out-of-domain arguments are
    /// configuration errors.
    pub fn eval_at(&self, s: f64) -> Result<CMat> {
        Ok(self.sample(self.grid.index_of(s)?))
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    pub fn max_norm(&self) -> f64 {
        crate::linalg::max_abs_slice(&self.data)
    }

    /// `sum_i |p(s_i)|_F^2 h_x`.
    pub fn l2_norm_sq(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>() * self.grid.spacing()
    }

    /// Ratio of the largest sample over the outer 5% of the domain to the
    /// largest sample overall; zero for the zero profile.
    pub fn boundary_ratio(&self) -> f64 {
        let total = self.max_norm();
        if total == 0.0 {
            return 0.0;
        }
        let m = self.grid.len();
        let layer = ((m as f64 * BOUNDARY_FRACTION).ceil() as usize).max(1);
        let stride = self.rows * self.cols;
        let edge = (0..layer)
            .chain(m - layer..m)
            .flat_map(|i| self.data[i * stride..(i + 1) * stride].iter())
            .fold(0.0_f64, |acc, z| acc.max(z.norm()));
        edge / total
    }

    pub fn decays(&self, decay_tol: f64) -> bool {
        self.boundary_ratio() <= decay_tol
    }

    /// Applies `f` to every sample matrix, producing a profile of possibly
    /// different dimensions.
    pub fn map_samples(&self, rows: usize, cols: usize, f: impl Fn(&CMat) -> CMat) -> Self {
        let mut out = Self::zeros(self.grid, rows, cols).expect("positive dimensions");
        for i in 0..self.grid.len() {
            out.set_sample(i, &f(&self.sample(i)));
        }
        out.time = self.time;
        out
    }

    /// Profile with argument reflected, `s -> -s`. The extreme node `-X` maps
    /// to itself through the periodic wrap.
    pub fn reflected(&self) -> Self {
        let m = self.grid.len();
        let stride = self.rows * self.cols;
        let mut data = vec![C64::new(0.0, 0.0); self.data.len()];
        for i in 0..m {
            let j = (m - i) % m;
            data[i * stride..(i + 1) * stride].copy_from_slice(&self.data[j * stride..(j + 1) * stride]);
        }
        Self { data, ..self.clone() }
    }

    pub fn scaled(&self, factor: C64) -> Self {
        Self {
            data: self.data.iter().map(|z| z * factor).collect(),
            ..self.clone()
        }
    }
}

/// Fourier coefficients of a [`MatrixProfile`], centred frequency order.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralProfile {
    grid: MasterGrid,
    rows: usize,
    cols: usize,
    coeffs: Vec<C64>,
    time: f64,
}

impl SpectralProfile {
    pub fn grid(&self) -> &MasterGrid {
        &self.grid
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn coeff(&self, j: usize, r: usize, c: usize) -> C64 {
        self.coeffs[(j * self.rows + r) * self.cols + c]
    }

    pub fn coefficient(&self, j: usize) -> CMat {
        CMat::from_fn(self.rows, self.cols, |r, c| self.coeff(j, r, c))
    }

    pub fn raw(&self) -> &[C64] {
        &self.coeffs
    }

    pub(crate) fn raw_mut(&mut self) -> &mut [C64] {
        &mut self.coeffs
    }

    pub(crate) fn set_time(&mut self, t: f64) {
        self.time = t;
    }

    /// Integer frequency `k` of centred index `j`.
    pub fn wavenumber(&self, j: usize) -> i64 {
        j as i64 - (self.grid.len() / 2) as i64
    }

    /// `1/(2X) * sum_k |c_k|_F^2`.
    pub fn l2_norm_sq(&self) -> f64 {
        self.coeffs.iter().map(|z| z.norm_sqr()).sum::<f64>() / (2.0 * self.grid.half_width())
    }

    /// Zeroes every coefficient whose Frobenius norm is below `rel_tol`
    /// times the largest. Used to band-limit data before anti-diffusive flows.
    pub fn band_limit(&mut self, rel_tol: f64) {
        let stride = self.rows * self.cols;
        let norms: Vec<f64> = self
            .coeffs
            .chunks(stride)
            .map(|blk| blk.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt())
            .collect();
        let top = norms.iter().cloned().fold(0.0, f64::max);
        for (blk, n) in self.coeffs.chunks_mut(stride).zip(norms) {
            if n < rel_tol * top {
                blk.iter_mut().for_each(|z| *z = C64::new(0.0, 0.0));
            }
        }
    }

    /// Whether the coefficient block at centred index `j` is identically zero.
    pub fn is_zero_mode(&self, j: usize) -> bool {
        let stride = self.rows * self.cols;
        self.coeffs[j * stride..(j + 1) * stride]
            .iter()
            .all(|z| z.re == 0.0 && z.im == 0.0)
    }
}

fn alternating(k: i64) -> f64 {
    if k.rem_euclid(2) == 0 {
        1.0
    } else {
        -1.0
    }
}

/// Entrywise transform of every matrix component with the `e^{+2 pi i kappa s}` kernel.
pub fn to_spectral(p: &MatrixProfile) -> SpectralProfile {
    let grid = p.grid;
    let m = grid.len();
    let half = (m / 2) as i64;
    let stride = p.rows * p.cols;
    let hx = grid.spacing();
    let fft = FftPlanner::<f64>::new().plan_fft_inverse(m);
    let mut coeffs = vec![C64::new(0.0, 0.0); p.data.len()];
    let mut buf = vec![C64::new(0.0, 0.0); m];
    for comp in 0..stride {
        for (i, b) in buf.iter_mut().enumerate() {
            *b = p.data[i * stride + comp];
        }
        // unnormalised inverse FFT: sum_i x_i e^{+2 pi i k i / M}
        fft.process(&mut buf);
        for j in 0..m {
            let k = j as i64 - half;
            let slot = k.rem_euclid(m as i64) as usize;
            coeffs[j * stride + comp] = buf[slot] * (hx * alternating(k));
        }
    }
    SpectralProfile {
        grid,
        rows: p.rows,
        cols: p.cols,
        coeffs,
        time: p.time,
    }
}

pub fn from_spectral(sp: &SpectralProfile) -> MatrixProfile {
    let grid = sp.grid;
    let m = grid.len();
    let half = (m / 2) as i64;
    let stride = sp.rows * sp.cols;
    let scale = 1.0 / (2.0 * grid.half_width());
    let fft = FftPlanner::<f64>::new().plan_fft_forward(m);
    let mut data = vec![C64::new(0.0, 0.0); sp.coeffs.len()];
    let mut buf = vec![C64::new(0.0, 0.0); m];
    for comp in 0..stride {
        for j in 0..m {
            let k = j as i64 - half;
            let slot = k.rem_euclid(m as i64) as usize;
            buf[slot] = sp.coeffs[j * stride + comp] * alternating(k);
        }
        fft.process(&mut buf);
        for (i, b) in buf.iter().enumerate() {
            data[i * stride + comp] = b * scale;
        }
    }
    MatrixProfile {
        grid,
        rows: sp.rows,
        cols: sp.cols,
        data,
        time: sp.time,
    }
}

/// Builds a spectral profile directly from coefficients (centred order).
pub fn spectral_from_raw(grid: MasterGrid, rows: usize, cols: usize, coeffs: Vec<C64>, time: f64) -> SpectralProfile {
    debug_assert_eq!(coeffs.len(), grid.len() * rows * cols);
    SpectralProfile {
        grid,
        rows,
        cols,
        coeffs,
        time,
    }
}

/// Initial Hankel symbol `p_0`. Amplitudes are row-major real parts with an
/// optional imaginary part.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialDataSpec {
    /// `A exp(-(s - c)^2 / (2 sigma^2))`.
    Gaussian {
        amplitude: Vec<Vec<f64>>,
        #[serde(default)]
        amplitude_im: Option<Vec<Vec<f64>>>,
        width: f64,
        #[serde(default)]
        center: f64,
    },
    /// `A e^{a s}` for `s <= cutoff` (default 0), zero beyond.
    ExponentialStep {
        amplitude: Vec<Vec<f64>>,
        #[serde(default)]
        amplitude_im: Option<Vec<Vec<f64>>>,
        rate: f64,
        #[serde(default)]
        cutoff: Option<f64>,
    },
    /// Pure exponential mode `A e^{a s}` on the whole master domain. It is an
    /// eigenfunction of every constant-coefficient flow and is evolved in
    /// closed form rather than spectrally.
    Exponential {
        amplitude: Vec<Vec<f64>>,
        #[serde(default)]
        amplitude_im: Option<Vec<Vec<f64>>>,
        rate: f64,
    },
    /// Pointwise sum of other initial data, e.g. Gaussians with
    /// non-commuting amplitudes.
    Sum { terms: Vec<InitialDataSpec> },
    /// Explicit samples at every master node, `[node][row][col]`.
    Tabulated {
        values: Vec<Vec<Vec<f64>>>,
        #[serde(default)]
        values_im: Option<Vec<Vec<Vec<f64>>>>,
    },
}

impl InitialDataSpec {
    pub fn name(&self) -> &'static str {
        match self {
            InitialDataSpec::Gaussian { .. } => "gaussian",
            InitialDataSpec::ExponentialStep { .. } => "exponential_step",
            InitialDataSpec::Exponential { .. } => "exponential",
            InitialDataSpec::Sum { .. } => "sum",
            InitialDataSpec::Tabulated { .. } => "tabulated",
        }
    }

    /// Convenience constructor for real amplitudes.
    pub fn gaussian(amplitude: &[&[f64]], width: f64, center: f64) -> Self {
        InitialDataSpec::Gaussian {
            amplitude: amplitude.iter().map(|r| r.to_vec()).collect(),
            amplitude_im: None,
            width,
            center,
        }
    }

    pub fn exponential(amplitude: &[&[f64]], rate: f64) -> Self {
        InitialDataSpec::Exponential {
            amplitude: amplitude.iter().map(|r| r.to_vec()).collect(),
            amplitude_im: None,
            rate,
        }
    }

    pub fn exponential_step(amplitude: &[&[f64]], rate: f64) -> Self {
        InitialDataSpec::ExponentialStep {
            amplitude: amplitude.iter().map(|r| r.to_vec()).collect(),
            amplitude_im: None,
            rate,
            cutoff: None,
        }
    }

    /// Rate `a` and amplitude of an exponential mode, if this is one.
    pub fn exponential_mode(&self) -> Option<(f64, CMat)> {
        match self {
            InitialDataSpec::Exponential {
                amplitude,
                amplitude_im,
                rate,
            } => from_rows(amplitude, amplitude_im.as_deref()).map(|a| (*rate, a)),
            _ => None,
        }
    }
}

fn amplitude_matrix(re: &[Vec<f64>], im: Option<&[Vec<f64>]>, rows: usize, cols: usize) -> Result<CMat> {
    let a = from_rows(re, im)
        .ok_or_else(|| Error::InvalidData("amplitude must be a non-empty rectangular matrix".into()))?;
    if a.nrows() != rows || a.ncols() != cols {
        return Err(Error::Dimension(format!(
            "amplitude is {}x{}, scenario dimensions are {rows}x{cols}",
            a.nrows(),
            a.ncols()
        )));
    }
    Ok(a)
}

/// Samples `spec` at every node of `grid`; the result carries time stamp 0.
pub fn sample_profile(spec: &InitialDataSpec, grid: MasterGrid, rows: usize, cols: usize) -> Result<MatrixProfile> {
    match spec {
        InitialDataSpec::Gaussian {
            amplitude,
            amplitude_im,
            width,
            center,
        } => {
            if !(*width > 0.0) {
                return Err(Error::InvalidData(format!(
                    "gaussian width must be positive, got {width}"
                )));
            }
            let a = amplitude_matrix(amplitude, amplitude_im.as_deref(), rows, cols)?;
            MatrixProfile::from_fn(grid, rows, cols, |s| {
                let u = (s - center) / width;
                &a * C64::new((-0.5 * u * u).exp(), 0.0)
            })
        }
        InitialDataSpec::ExponentialStep {
            amplitude,
            amplitude_im,
            rate,
            cutoff,
        } => {
            if !(*rate > 0.0) {
                return Err(Error::InvalidData(format!(
                    "exponential rate must be positive, got {rate}"
                )));
            }
            let a = amplitude_matrix(amplitude, amplitude_im.as_deref(), rows, cols)?;
            let cut = cutoff.unwrap_or(0.0);
            MatrixProfile::from_fn(grid, rows, cols, |s| {
                if s <= cut {
                    &a * C64::new((rate * s).exp(), 0.0)
                } else {
                    CMat::zeros(rows, cols)
                }
            })
        }
        InitialDataSpec::Exponential {
            amplitude,
            amplitude_im,
            rate,
        } => {
            if !(*rate > 0.0) {
                return Err(Error::InvalidData(format!(
                    "exponential rate must be positive, got {rate}"
                )));
            }
            let a = amplitude_matrix(amplitude, amplitude_im.as_deref(), rows, cols)?;
            MatrixProfile::from_fn(grid, rows, cols, |s| &a * C64::new((rate * s).exp(), 0.0))
        }
        InitialDataSpec::Sum { terms } => {
            let mut parts = terms.iter().map(|t| sample_profile(t, grid, rows, cols));
            let mut acc = parts
                .next()
                .ok_or_else(|| Error::InvalidData("sum needs at least one term".into()))??;
            for part in parts {
                let part = part?;
                for (a, b) in acc.data.iter_mut().zip(&part.data) {
                    *a += b;
                }
            }
            Ok(acc)
        }
        InitialDataSpec::Tabulated { values, values_im } => {
            if values.len() != grid.len() {
                return Err(Error::Dimension(format!(
                    "tabulated data has {} samples, master grid has {} nodes",
                    values.len(),
                    grid.len()
                )));
            }
            if let Some(im) = values_im {
                if im.len() != values.len() {
                    return Err(Error::Dimension(
                        "tabulated imaginary part length differs from real part".into(),
                    ));
                }
            }
            let mut p = MatrixProfile::zeros(grid, rows, cols)?;
            for (i, re) in values.iter().enumerate() {
                let im = values_im.as_ref().map(|v| v[i].as_slice());
                let m = amplitude_matrix(re, im, rows, cols)?;
                if !crate::linalg::is_finite(&m) {
                    return Err(Error::InvalidData(format!("tabulated sample {i} is not finite")));
                }
                p.set_sample(i, &m);
            }
            Ok(p)
        }
    }
}

/// Shared handle used when many evaluations read the same profile.
pub type SharedProfile = Arc<MatrixProfile>;
