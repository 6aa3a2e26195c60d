//! Exact time evolution of Hankel symbols under `p_t = mu1 p_ss + mu2 p_sss`.
//!
//! No time stepping: each Fourier coefficient is multiplied by the exponential
//! of the flow's symbol. With the `e^{+2 pi i kappa s}` forward kernel the
//! mode carried by coefficient `c_k` is `e^{-2 pi i kappa_k s}`, so the
//! multiplier for `c_k` is `exp(t * symbol(-kappa_k))`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gridkernel::{
    from_spectral, sample_profile, spectral_from_raw, to_spectral, InitialDataSpec, MasterGrid, MatrixProfile,
    SpectralProfile,
};
use crate::linalg::C64;

/// Largest admissible growth exponent `Re(t * symbol)` (natural-log scale).
pub const GROWTH_LIMIT: f64 = 700.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DispersionParams {
    pub mu1: C64,
    pub mu2: C64,
}

impl DispersionParams {
    pub fn new(mu1: C64, mu2: C64) -> Self {
        Self { mu1, mu2 }
    }

    pub fn is_trivial(&self) -> bool {
        self.mu1 == C64::new(0.0, 0.0) && self.mu2 == C64::new(0.0, 0.0)
    }

    /// `d(z) = mu1 z^2 + mu2 z^3` for a derivative eigenvalue `z`.
    pub fn polynomial(&self, z: C64) -> C64 {
        self.mu1 * z * z + self.mu2 * z * z * z
    }

    /// Whether the symbol is purely imaginary on the real frequency axis,
    /// i.e. the flow is unitary (mu1 imaginary, mu2 real).
    pub fn is_dispersive(&self) -> bool {
        self.mu1.re == 0.0 && self.mu2.im == 0.0
    }
}

/// `mu1 (2 pi i k)^2 + mu2 (2 pi i k)^3`.
pub fn symbol(params: &DispersionParams, k: f64) -> C64 {
    params.polynomial(C64::new(0.0, 2.0 * PI * k))
}

/// Multiplier exponent applied to the coefficient stored at centred index `j`.
fn mode_exponent(params: &DispersionParams, grid: &MasterGrid, j: usize, t: f64) -> C64 {
    symbol(params, -grid.frequency(j)) * t
}

/// Evolves the coefficients in place by `t`.
fn evolve_spectral_in_place(sp: &mut SpectralProfile, params: &DispersionParams, t: f64) -> Result<()> {
    let grid = *sp.grid();
    let stride = sp.rows() * sp.cols();
    let m = grid.len();
    let mut worst = f64::NEG_INFINITY;
    for j in 0..m {
        if sp.is_zero_mode(j) {
            continue;
        }
        worst = worst.max(mode_exponent(params, &grid, j, t).re);
    }
    if worst > GROWTH_LIMIT {
        return Err(Error::Growth {
            exponent: worst,
            limit: GROWTH_LIMIT,
            t,
        });
    }
    let time = sp.time() + t;
    let raw = sp.raw_mut();
    for j in 0..m {
        let factor = mode_exponent(params, &grid, j, t).exp();
        for z in &mut raw[j * stride..(j + 1) * stride] {
            *z *= factor;
        }
    }
    sp.set_time(time);
    Ok(())
}

/// Profile advanced by `t` (either sign). `t == 0` returns the input unchanged.
///
/// Fails with [`Error::Growth`] when some present mode would be amplified by
/// more than `e^700`, which only happens for anti-diffusive flows.
pub fn evolve(p0: &MatrixProfile, params: &DispersionParams, t: f64) -> Result<MatrixProfile> {
    if t == 0.0 {
        return Ok(p0.clone());
    }
    let mut sp = to_spectral(p0);
    evolve_spectral_in_place(&mut sp, params, t)?;
    Ok(from_spectral(&sp))
}

/// `d^order p / ds^order` computed spectrally. The Nyquist mode is dropped
/// for odd orders.
pub fn spectral_derivative(p: &MatrixProfile, order: u32) -> MatrixProfile {
    if order == 0 {
        return p.clone();
    }
    let sp = to_spectral(p);
    let grid = *sp.grid();
    let stride = sp.rows() * sp.cols();
    let mut coeffs = sp.raw().to_vec();
    for j in 0..grid.len() {
        let factor = if j == 0 && order % 2 == 1 {
            C64::new(0.0, 0.0)
        } else {
            C64::new(0.0, -2.0 * PI * grid.frequency(j)).powu(order)
        };
        for z in &mut coeffs[j * stride..(j + 1) * stride] {
            *z *= factor;
        }
    }
    from_spectral(&spectral_from_raw(grid, sp.rows(), sp.cols(), coeffs, sp.time()))
}

/// Max norm of `p_t - mu1 p_ss - mu2 p_sss` over the interior snapshots,
/// with centred differences in `t` and exact spectral `s`-derivatives.
pub fn dispersion_residual(snapshots: &[MatrixProfile], params: &DispersionParams) -> Result<f64> {
    if snapshots.len() < 3 {
        return Err(Error::TooFewSnapshots {
            needed: 3,
            got: snapshots.len(),
        });
    }
    let dt = uniform_step(snapshots.iter().map(|p| p.time()))?;
    let mut worst = 0.0_f64;
    for k in 1..snapshots.len() - 1 {
        let p = &snapshots[k];
        let d2 = spectral_derivative(p, 2);
        let d3 = spectral_derivative(p, 3);
        let (prev, next) = (&snapshots[k - 1], &snapshots[k + 1]);
        for idx in 0..p.raw().len() {
            let dt_term = (next.raw()[idx] - prev.raw()[idx]) / (2.0 * dt);
            let r = dt_term - params.mu1 * d2.raw()[idx] - params.mu2 * d3.raw()[idx];
            worst = worst.max(r.norm());
        }
    }
    Ok(worst)
}

pub(crate) fn uniform_step(times: impl Iterator<Item = f64>) -> Result<f64> {
    let ts: Vec<f64> = times.collect();
    let dt = ts[1] - ts[0];
    if dt == 0.0 {
        return Err(Error::Field("snapshot times must be distinct".into()));
    }
    for w in ts.windows(2) {
        if ((w[1] - w[0]) - dt).abs() > 1e-9 * dt.abs() {
            return Err(Error::Field("snapshot times are not uniformly spaced".into()));
        }
    }
    Ok(dt)
}

/// Exact solution operator of the linear flow for a fixed initial symbol.
pub trait LinearFlow: Send + Sync {
    fn name(&self) -> &'static str;
    fn params(&self) -> DispersionParams;
    fn initial(&self) -> &MatrixProfile;
    /// `p(.; t)` for any real `t`.
    fn profile_at(&self, t: f64) -> Result<MatrixProfile>;
}

/// Fourier-multiplier evolution of arbitrary periodic data.
pub struct SpectralFlow {
    initial: MatrixProfile,
    spectrum: SpectralProfile,
    params: DispersionParams,
}

impl SpectralFlow {
    pub fn new(initial: MatrixProfile, params: DispersionParams) -> Self {
        let spectrum = to_spectral(&initial);
        Self {
            initial,
            spectrum,
            params,
        }
    }

    /// Zeroes coefficients below `rel_tol` of the largest before evolving.
    /// The band-limited data then replaces the initial profile.
    pub fn band_limited(initial: MatrixProfile, params: DispersionParams, rel_tol: f64) -> Self {
        let mut spectrum = to_spectral(&initial);
        spectrum.band_limit(rel_tol);
        let initial = from_spectral(&spectrum);
        Self {
            initial,
            spectrum,
            params,
        }
    }
}

impl LinearFlow for SpectralFlow {
    fn name(&self) -> &'static str {
        "spectral"
    }

    fn params(&self) -> DispersionParams {
        self.params
    }

    fn initial(&self) -> &MatrixProfile {
        &self.initial
    }

    fn profile_at(&self, t: f64) -> Result<MatrixProfile> {
        if t == self.initial.time() {
            return Ok(self.initial.clone());
        }
        let mut sp = self.spectrum.clone();
        evolve_spectral_in_place(&mut sp, &self.params, t - self.initial.time())?;
        Ok(from_spectral(&sp))
    }
}

/// Closed-form evolution of an exponential mode `A e^{a s}`: every
/// constant-coefficient flow multiplies it by `e^{t d(a)}`.
pub struct ExponentialModeFlow {
    initial: MatrixProfile,
    rate: f64,
    params: DispersionParams,
}

impl ExponentialModeFlow {
    pub fn new(initial: MatrixProfile, rate: f64, params: DispersionParams) -> Self {
        Self { initial, rate, params }
    }
}

impl LinearFlow for ExponentialModeFlow {
    fn name(&self) -> &'static str {
        "exponential_mode"
    }

    fn params(&self) -> DispersionParams {
        self.params
    }

    fn initial(&self) -> &MatrixProfile {
        &self.initial
    }

    fn profile_at(&self, t: f64) -> Result<MatrixProfile> {
        let dt = t - self.initial.time();
        let exponent = self.params.polynomial(C64::new(self.rate, 0.0)) * dt;
        if exponent.re > GROWTH_LIMIT {
            return Err(Error::Growth {
                exponent: exponent.re,
                limit: GROWTH_LIMIT,
                t,
            });
        }
        Ok(self.initial.scaled(exponent.exp()).with_time(t))
    }
}

/// Picks the evolution strategy for `spec`: closed form for exponential
/// modes, Fourier multiplier otherwise.
pub fn flow_for(
    spec: &InitialDataSpec,
    grid: MasterGrid,
    rows: usize,
    cols: usize,
    params: DispersionParams,
    band_limit: Option<f64>,
) -> Result<Box<dyn LinearFlow>> {
    let p0 = sample_profile(spec, grid, rows, cols)?;
    if let Some((rate, _)) = spec.exponential_mode() {
        return Ok(Box::new(ExponentialModeFlow::new(p0, rate, params)));
    }
    Ok(match band_limit {
        Some(tol) => Box::new(SpectralFlow::band_limited(p0, params, tol)),
        None => Box::new(SpectralFlow::new(p0, params)),
    })
}

/// Sample-wise max norm of the difference of two profiles.
pub fn max_difference(a: &MatrixProfile, b: &MatrixProfile) -> f64 {
    a.raw()
        .iter()
        .zip(b.raw())
        .fold(0.0_f64, |acc, (x, y)| acc.max((x - y).norm()))
}
