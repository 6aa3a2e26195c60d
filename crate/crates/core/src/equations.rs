//! Finite-difference certification of computed fields against the nonlinear
//! equations each parameter/companion choice produces.
//!
//! Every second- and third-order family is an instance of
//!
//! ```text
//! (d_t - mu1 d_x^2 - mu2 d_x^3) g = 2 mu1 g c g + 3 mu2 (g c g_x + g_x c g)
//! ```
//!
//! where `c = g~(0,0; x, t)` is the companion observable. The families differ
//! only in how `c` is obtained from `g`. Primitive KdV is the exception:
//! `g_t + g_xxx = 3 g_x g_x`.

use std::fmt;

use serde::Serialize;

use crate::companion::{CompanionKind, ObservableRelation};
use crate::dispersion::DispersionParams;
use crate::error::{Error, Result};
use crate::linalg::{CMat, C64, I};

pub use crate::field::{Sample, SolutionField};
pub use crate::identities::{
    miura_check, product_rule_check, u_derivative_check, u_identity_check, MiuraReport, ProductRuleReport, SmoothKernel,
};

/// Max and root-mean-square of a residual over the interior points.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Residual {
    pub label: String,
    pub max: f64,
    pub rms: f64,
    pub points: usize,
}

impl Residual {
    fn from_values(label: impl Into<String>, values: &[f64]) -> Result<Self> {
        let label = label.into();
        if values.is_empty() {
            return Err(Error::Field(format!(
                "{label}: no interior sample has the full stencil (need 2 x-neighbours and 1 t-neighbour on each side)"
            )));
        }
        let max = values.iter().cloned().fold(0.0, f64::max);
        let rms = (values.iter().map(|v| v * v).sum::<f64>() / values.len() as f64).sqrt();
        Ok(Self {
            label,
            max,
            rms,
            points: values.len(),
        })
    }
}

/// Centred differences of a matrix-valued quantity around one sample.
struct Stencil {
    g: CMat,
    gt: CMat,
    gx: CMat,
    gxx: CMat,
    gxxx: CMat,
}

fn uniform(axis: &[f64], i: usize, reach: usize) -> Option<f64> {
    if i < reach || i + reach >= axis.len() {
        return None;
    }
    let d = axis[i + 1] - axis[i];
    for k in i - reach..i + reach {
        if ((axis[k + 1] - axis[k]) - d).abs() > 1e-9 * d.abs() {
            return None;
        }
    }
    Some(d)
}

/// Index pairs `(ix, it)` whose stencil lies on uniformly spaced axes.
/// Samples on each side that the residual stencils need in `x`.
pub const HALO_X: usize = 2;
/// Samples on each side that the residual stencils need in `t`.
pub const HALO_T: usize = 1;

fn interior(field: &SolutionField) -> Vec<(usize, usize, f64, f64)> {
    let mut out = Vec::new();
    for it in 0..field.ts().len() {
        let Some(dt) = uniform(field.ts(), it, HALO_T) else {
            continue;
        };
        for ix in 0..field.xs().len() {
            if let Some(dx) = uniform(field.xs(), ix, HALO_X) {
                out.push((ix, it, dx, dt));
            }
        }
    }
    out
}

fn stencil(value: impl Fn(usize, usize) -> Option<CMat>, ix: usize, it: usize, dx: f64, dt: f64) -> Option<Stencil> {
    let g = value(ix, it)?;
    let gp = value(ix + 1, it)?;
    let gm = value(ix - 1, it)?;
    let gpp = value(ix + 2, it)?;
    let gmm = value(ix - 2, it)?;
    let tp = value(ix, it + 1)?;
    let tm = value(ix, it - 1)?;
    let gt = (tp - tm) / C64::new(2.0 * dt, 0.0);
    let gx = (&gp - &gm) / C64::new(2.0 * dx, 0.0);
    let gxx = (&gp - &g * C64::new(2.0, 0.0) + &gm) / C64::new(dx * dx, 0.0);
    let gxxx = (gpp - gp * C64::new(2.0, 0.0) + gm * C64::new(2.0, 0.0) - gmm) / C64::new(2.0 * dx * dx * dx, 0.0);
    Some(Stencil { g, gt, gx, gxx, gxxx })
}

fn center_value(field: &SolutionField) -> impl Fn(usize, usize) -> Option<CMat> + '_ {
    let nx = field.xs().len();
    move |ix, it| field.samples()[it * nx + ix].as_ref().map(|s| s.center.clone())
}

fn max_entry(m: &CMat) -> f64 {
    crate::linalg::max_abs(m)
}

/// Pointwise cubic residual given the stencil of `g` and the companion value `c`.
fn cubic(params: &DispersionParams, s: &Stencil, c: &CMat) -> CMat {
    let (mu1, mu2) = (params.mu1, params.mu2);
    let lin = &s.gt - &s.gxx * mu1 - &s.gxxx * mu2;
    let gc = &s.g * c;
    let quad = &gc * &s.g * (mu1 * 2.0);
    let third = (&gc * &s.gx + &s.gx * c * &s.g) * (mu2 * 3.0);
    lin - quad - third
}

/// Residual of the cubic equation with `c = companion(x, t)`.
pub fn cubic_residual(
    field: &SolutionField,
    params: &DispersionParams,
    label: &str,
    companion: impl Fn(f64, f64) -> Option<CMat>,
) -> Result<Residual> {
    let value = center_value(field);
    let mut vals = Vec::new();
    for (ix, it, dx, dt) in interior(field) {
        let (x, t) = (field.xs()[ix], field.ts()[it]);
        let (Some(s), Some(c)) = (stencil(&value, ix, it, dx, dt), companion(x, t)) else {
            continue;
        };
        vals.push(max_entry(&cubic(params, &s, &c)));
    }
    Residual::from_values(label, &vals)
}

/// Residual of the local equation where `g~(0,0)` is the symmetry image of
/// `g(0,0)` prescribed by `relation` (possibly at reflected `x` and `t`).
pub fn residual_local(
    field: &SolutionField,
    params: &DispersionParams,
    relation: &ObservableRelation,
    label: &str,
) -> Result<Residual> {
    if !field.mirror_closed(relation.reflect_x, relation.reflect_t) {
        return Err(Error::Field(format!(
            "{label}: sample grid must be symmetric under{}{} to evaluate the nonlocal term",
            if relation.reflect_x { " x -> -x" } else { "" },
            if relation.reflect_t { " t -> -t" } else { "" },
        )));
    }
    cubic_residual(field, params, label, |x, t| {
        let (xs, ts) = relation.source(x, t);
        field.center(xs, ts).map(|g| relation.apply(g))
    })
}

/// Residual of the cubic equation with `c` taken from the companion Fredholm
/// solve recorded in the field.
pub fn residual_with_companion(field: &SolutionField, params: &DispersionParams, label: &str) -> Result<Residual> {
    if field.samples().iter().flatten().any(|s| s.companion.is_none()) {
        return Err(Error::Field(format!("{label}: field has no companion values")));
    }
    cubic_residual(field, params, label, |x, t| {
        field.sample(x, t).and_then(|s| s.companion.clone())
    })
}

/// `g_t + g_xxx - 3 g_x g_x`.
pub fn residual_kdv(field: &SolutionField, label: &str) -> Result<Residual> {
    if field.rows() != field.cols() {
        return Err(Error::Dimension(format!(
            "{label}: KdV needs square samples, got {}x{}",
            field.rows(),
            field.cols()
        )));
    }
    let value = center_value(field);
    let mut vals = Vec::new();
    for (ix, it, dx, dt) in interior(field) {
        if let Some(s) = stencil(&value, ix, it, dx, dt) {
            let r = &s.gt + &s.gxxx - &s.gx * &s.gx * C64::new(3.0, 0.0);
            vals.push(max_entry(&r));
        }
    }
    Residual::from_values(label, &vals)
}

/// Residual of the kernel equation along both recorded slices,
///
/// ```text
/// D g(y,z) = 2 mu1 g(y,0) c g(0,z) + 3 mu2 (g(y,0) c d_x g(0,z) + d_x g(y,0) c g(0,z))
/// ```
///
/// at `(y, 0)` and `(0, z)` for every quadrature node.
pub fn residual_kernel(
    field: &SolutionField,
    params: &DispersionParams,
    relation: &ObservableRelation,
    label: &str,
) -> Result<Residual> {
    if field.quad_nodes().is_empty()
        || field
            .samples()
            .iter()
            .flatten()
            .any(|s| s.y_slice.is_none() || s.z_slice.is_none())
    {
        return Err(Error::Field(format!("{label}: kernel slices were not recorded")));
    }
    let nx = field.xs().len();
    let nodes = field.quad_nodes().len();
    let center = center_value(field);
    let (mu1, mu2) = (params.mu1, params.mu2);
    let mut vals = Vec::new();
    for (ix, it, dx, dt) in interior(field) {
        let (x, t) = (field.xs()[ix], field.ts()[it]);
        let (xs, ts) = relation.source(x, t);
        let Some(c) = field.center(xs, ts).map(|g| relation.apply(g)) else {
            continue;
        };
        let Some(g00) = stencil(&center, ix, it, dx, dt) else {
            continue;
        };
        let mut worst = 0.0_f64;
        let mut complete = true;
        for a in 0..nodes {
            let y_val = |i: usize, j: usize| {
                field.samples()[j * nx + i]
                    .as_ref()
                    .and_then(|s| s.y_slice.as_ref().map(|v| v[a].clone()))
            };
            let z_val = |i: usize, j: usize| {
                field.samples()[j * nx + i]
                    .as_ref()
                    .and_then(|s| s.z_slice.as_ref().map(|v| v[a].clone()))
            };
            let (Some(ys), Some(zs)) = (stencil(y_val, ix, it, dx, dt), stencil(z_val, ix, it, dx, dt)) else {
                complete = false;
                break;
            };
            // (y, 0): left factor is the y-slice, right factor the centre
            let r_y = &ys.gt
                - &ys.gxx * mu1
                - &ys.gxxx * mu2
                - &ys.g * &c * &g00.g * (mu1 * 2.0)
                - (&ys.g * &c * &g00.gx + &ys.gx * &c * &g00.g) * (mu2 * 3.0);
            // (0, z): left factor the centre, right factor the z-slice
            let r_z = &zs.gt
                - &zs.gxx * mu1
                - &zs.gxxx * mu2
                - &g00.g * &c * &zs.g * (mu1 * 2.0)
                - (&g00.g * &c * &zs.gx + &g00.gx * &c * &zs.g) * (mu2 * 3.0);
            worst = worst.max(max_entry(&r_y)).max(max_entry(&r_z));
        }
        if complete {
            vals.push(worst);
        }
    }
    Residual::from_values(label, &vals)
}

/// Both equations of the coupled diffusion/anti-diffusion system:
/// `G_t = G_xx + 2 G G~ G` and `G~_t = -G~_xx - 2 G~ G G~`.
pub fn residual_coupled(field: &SolutionField, params: &DispersionParams) -> Result<[Residual; 2]> {
    let partner = field
        .companion_field()
        .ok_or_else(|| Error::Field("coupled system: companion values were not recorded".into()))?;
    let first = cubic_residual(field, params, "coupled_diffusion:G", |x, t| {
        partner.center(x, t).cloned()
    })?;
    let flipped = DispersionParams::new(-params.mu1, params.mu2);
    let second = cubic_residual(&partner, &flipped, "coupled_diffusion:G~", |x, t| {
        field.center(x, t).cloned()
    })?;
    Ok([first, second])
}

/// What a model needs recorded in the field.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct Requirements {
    pub slices: bool,
    pub companion_field: bool,
    pub mirror_x: bool,
    pub mirror_t: bool,
}

/// One nonlinear equation family: pins parameters and companion, and
/// certifies fields.
pub trait EquationModel: Send + Sync + fmt::Debug {
    fn name(&self) -> &'static str;
    /// Variant tag for reporting, e.g. `+`, `-`, `real`, `complex`.
    fn variant(&self) -> Option<&'static str> {
        None
    }
    fn companion(&self) -> CompanionKind;
    /// Parameters fixed by the family; `None` when free.
    fn pinned_params(&self) -> Option<DispersionParams>;
    fn requirements(&self) -> Requirements;
    fn residuals(&self, field: &SolutionField, params: &DispersionParams) -> Result<Vec<Residual>>;

    fn label(&self) -> String {
        match self.variant() {
            Some(v) => format!("{}({v})", self.name()),
            None => self.name().to_string(),
        }
    }

    /// Rejects parameters and dimensions the family does not allow.
    fn check(&self, params: &DispersionParams, rows: usize, cols: usize) -> Result<()> {
        if let Some(p) = self.pinned_params() {
            if (p.mu1 - params.mu1).norm() > 0.0 || (p.mu2 - params.mu2).norm() > 0.0 {
                return Err(Error::Scenario(format!(
                    "{} requires mu1 = {}, mu2 = {}, got mu1 = {}, mu2 = {}",
                    self.name(),
                    p.mu1,
                    p.mu2,
                    params.mu1,
                    params.mu2
                )));
            }
        }
        if self.companion().is_identity() && rows != cols {
            return Err(Error::Dimension(format!(
                "{} needs square matrices, got {rows}x{cols}",
                self.name()
            )));
        }
        self.companion().check_parameters(params)
    }
}

const ZERO: C64 = C64::new(0.0, 0.0);

fn nls_params() -> DispersionParams {
    DispersionParams::new(-I, ZERO)
}

fn mkdv_params() -> DispersionParams {
    DispersionParams::new(ZERO, C64::new(-1.0, 0.0))
}

/// Local cubic equation with the companion observable given by symmetry.
/// Reversed-space kinds also report the residual with `g~` from its own
/// Fredholm solve.
#[derive(Debug, Clone)]
pub struct LocalCubic {
    name: &'static str,
    variant: Option<&'static str>,
    companion: CompanionKind,
    pinned: Option<DispersionParams>,
}

impl EquationModel for LocalCubic {
    fn name(&self) -> &'static str {
        self.name
    }

    fn variant(&self) -> Option<&'static str> {
        self.variant
    }

    fn companion(&self) -> CompanionKind {
        self.companion
    }

    fn pinned_params(&self) -> Option<DispersionParams> {
        self.pinned
    }

    fn requirements(&self) -> Requirements {
        Requirements {
            slices: false,
            companion_field: self.companion.reverses_space(),
            mirror_x: self.companion.reverses_space(),
            mirror_t: self.companion.reverses_time(),
        }
    }

    fn residuals(&self, field: &SolutionField, params: &DispersionParams) -> Result<Vec<Residual>> {
        let relation = self.companion.observable_relation().expect("profile companion");
        let label = self.label();
        let mut out = vec![residual_local(field, params, &relation, &label)?];
        if self.companion.reverses_space() {
            out.push(residual_with_companion(
                field,
                params,
                &format!("{label}:companion_solve"),
            )?);
        }
        Ok(out)
    }
}

/// Kernel equation along the recorded slices, plus the local residual.
#[derive(Debug, Clone)]
pub struct KernelCubic {
    name: &'static str,
    variant: Option<&'static str>,
    companion: CompanionKind,
    pinned: DispersionParams,
}

impl EquationModel for KernelCubic {
    fn name(&self) -> &'static str {
        self.name
    }

    fn variant(&self) -> Option<&'static str> {
        self.variant
    }

    fn companion(&self) -> CompanionKind {
        self.companion
    }

    fn pinned_params(&self) -> Option<DispersionParams> {
        Some(self.pinned)
    }

    fn requirements(&self) -> Requirements {
        Requirements {
            slices: true,
            ..Requirements::default()
        }
    }

    fn residuals(&self, field: &SolutionField, params: &DispersionParams) -> Result<Vec<Residual>> {
        let relation = self.companion.observable_relation().expect("profile companion");
        let label = self.label();
        Ok(vec![
            residual_kernel(field, params, &relation, &format!("{label}:kernel"))?,
            residual_local(field, params, &relation, &format!("{label}:local"))?,
        ])
    }
}

#[derive(Debug, Clone, Copy)]
pub struct PrimitiveKdv;

impl EquationModel for PrimitiveKdv {
    fn name(&self) -> &'static str {
        "kdv_primitive"
    }

    fn companion(&self) -> CompanionKind {
        CompanionKind::NegIdentity
    }

    fn pinned_params(&self) -> Option<DispersionParams> {
        Some(mkdv_params())
    }

    fn requirements(&self) -> Requirements {
        Requirements::default()
    }

    fn residuals(&self, field: &SolutionField, _params: &DispersionParams) -> Result<Vec<Residual>> {
        Ok(vec![residual_kdv(field, self.name())?])
    }
}

#[derive(Debug, Clone, Copy)]
pub struct CoupledSystem;

impl EquationModel for CoupledSystem {
    fn name(&self) -> &'static str {
        "coupled_diffusion"
    }

    fn companion(&self) -> CompanionKind {
        CompanionKind::TransposeRevTime
    }

    fn pinned_params(&self) -> Option<DispersionParams> {
        Some(DispersionParams::new(C64::new(1.0, 0.0), ZERO))
    }

    fn requirements(&self) -> Requirements {
        Requirements {
            companion_field: true,
            ..Requirements::default()
        }
    }

    fn residuals(&self, field: &SolutionField, params: &DispersionParams) -> Result<Vec<Residual>> {
        Ok(residual_coupled(field, params)?.to_vec())
    }
}

type Factory = fn(Option<CompanionKind>) -> Result<Box<dyn EquationModel>>;

fn pick(
    kind: &str,
    requested: Option<CompanionKind>,
    options: &[(CompanionKind, &'static str)],
) -> Result<(CompanionKind, &'static str)> {
    match requested {
        None => Ok(options[0]),
        Some(c) => options.iter().copied().find(|(k, _)| *k == c).ok_or_else(|| {
            Error::Scenario(format!(
                "{kind} does not admit companion {c} (allowed: {})",
                options.iter().map(|(k, _)| k.name()).collect::<Vec<_>>().join(", ")
            ))
        }),
    }
}

fn local(
    name: &'static str,
    requested: Option<CompanionKind>,
    options: &[(CompanionKind, &'static str)],
    pinned: Option<DispersionParams>,
) -> Result<Box<dyn EquationModel>> {
    let (companion, v) = pick(name, requested, options)?;
    Ok(Box::new(LocalCubic {
        name,
        variant: (!v.is_empty()).then_some(v),
        companion,
        pinned,
    }))
}

fn kernel(
    name: &'static str,
    requested: Option<CompanionKind>,
    options: &[(CompanionKind, &'static str)],
    pinned: DispersionParams,
) -> Result<Box<dyn EquationModel>> {
    let (companion, v) = pick(name, requested, options)?;
    Ok(Box::new(KernelCubic {
        name,
        variant: Some(v),
        companion,
        pinned,
    }))
}

const NLS_SIGNS: &[(CompanionKind, &str)] = &[(CompanionKind::Adjoint, "+"), (CompanionKind::NegAdjoint, "-")];
const MKDV_FIELDS: &[(CompanionKind, &str)] = &[
    (CompanionKind::NegTranspose, "real"),
    (CompanionKind::NegAdjoint, "complex"),
];
const REV_MKDV_FIELDS: &[(CompanionKind, &str)] = &[
    (CompanionKind::NegTransposeRevSpacetime, "real"),
    (CompanionKind::NegAdjointRevSpacetime, "complex"),
];

const REGISTRY: &[(&str, Factory)] = &[
    ("kernel_nls", |c| kernel("kernel_nls", c, NLS_SIGNS, nls_params())),
    ("local_nls", |c| local("local_nls", c, NLS_SIGNS, Some(nls_params()))),
    ("rev_spacetime_nls", |c| {
        local(
            "rev_spacetime_nls",
            c,
            &[(CompanionKind::TransposeRevSpacetime, "")],
            Some(nls_params()),
        )
    }),
    ("rev_time_nls", |c| {
        local(
            "rev_time_nls",
            c,
            &[(CompanionKind::TransposeRevTime, "")],
            Some(nls_params()),
        )
    }),
    ("coupled_diffusion", |c| {
        pick("coupled_diffusion", c, &[(CompanionKind::TransposeRevTime, "")])?;
        Ok(Box::new(CoupledSystem))
    }),
    ("kernel_mkdv", |c| kernel("kernel_mkdv", c, MKDV_FIELDS, mkdv_params())),
    ("local_mkdv", |c| {
        local("local_mkdv", c, MKDV_FIELDS, Some(mkdv_params()))
    }),
    ("rev_spacetime_mkdv", |c| {
        local("rev_spacetime_mkdv", c, REV_MKDV_FIELDS, Some(mkdv_params()))
    }),
    ("kdv_primitive", |c| {
        pick("kdv_primitive", c, &[(CompanionKind::NegIdentity, "")])?;
        Ok(Box::new(PrimitiveKdv))
    }),
    ("combined_degree3", |c| {
        local("combined_degree3", c, &[(CompanionKind::NegAdjoint, "")], None)
    }),
];

pub fn equation_names() -> impl Iterator<Item = &'static str> {
    REGISTRY.iter().map(|(n, _)| *n)
}

/// Builds the model registered as `name`. `companion` selects the variant
/// where a family has several (sign of NLS, real or complex mKdV); `None`
/// picks the first listed.
pub fn equation_by_name(name: &str, companion: Option<CompanionKind>) -> Result<Box<dyn EquationModel>> {
    let (_, factory) = REGISTRY.iter().find(|(n, _)| *n == name).ok_or_else(|| {
        Error::Scenario(format!(
            "unknown equation kind '{name}' (known: {})",
            equation_names().collect::<Vec<_>>().join(", ")
        ))
    })?;
    factory(companion)
}

/// Least-squares slope of `log2(error)` against level, negated: the
/// convergence order when the step halves per level.
pub fn fitted_order(errors: &[f64]) -> Option<f64> {
    if errors.len() < 2 || errors.iter().any(|e| !(*e > 0.0) || !e.is_finite()) {
        return None;
    }
    let n = errors.len() as f64;
    let ys: Vec<f64> = errors.iter().map(|e| e.log2()).collect();
    let xbar = (n - 1.0) / 2.0;
    let ybar = ys.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for (k, y) in ys.iter().enumerate() {
        let dx = k as f64 - xbar;
        sxy += dx * (y - ybar);
        sxx += dx * dx;
    }
    Some(-sxy / sxx)
}

/// Successive error ratios `e_k / e_{k+1}`.
pub fn ratios(errors: &[f64]) -> Vec<f64> {
    errors.windows(2).map(|w| w[0] / w[1]).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(c: f64, step: f64, half: usize) -> Vec<f64> {
        (0..=2 * half).map(|k| c + (k as f64 - half as f64) * step).collect()
    }

    #[test]
    fn zero_field_has_zero_residual() {
        let xs = grid(0.0, 0.1, 3);
        let ts = grid(0.0, 0.05, 2);
        let f = SolutionField::from_fn(xs, ts, 2, 2, |_, _| CMat::zeros(2, 2)).unwrap();
        for name in equation_names() {
            let model = equation_by_name(name, None).unwrap();
            let params = model
                .pinned_params()
                .unwrap_or(DispersionParams::new(-I, C64::new(-1.0, 0.0)));
            let relation = model.companion().observable_relation();
            if let Some(rel) = relation {
                let r = residual_local(&f, &params, &rel, name).unwrap();
                assert_eq!(r.max, 0.0, "{name}");
            }
        }
        assert_eq!(residual_kdv(&f, "kdv").unwrap().max, 0.0);
    }

    #[test]
    fn plane_wave_solves_local_nls() {
        // i g_t = g_xx + 2 |g|^2 g with g = A e^{i(kx - wt)}, w = 2A^2 - k^2
        let (a, k) = (0.7, 1.3);
        let w = 2.0 * a * a - k * k;
        let r = |d: f64| {
            let f = SolutionField::from_fn(grid(0.0, d, 2), grid(0.0, d, 1), 1, 1, |x, t| {
                CMat::from_element(1, 1, C64::from_polar(a, k * x - w * t))
            })
            .unwrap();
            let rel = CompanionKind::Adjoint.observable_relation().unwrap();
            residual_local(&f, &nls_params(), &rel, "nls").unwrap().max
        };
        let (r1, r2) = (r(0.02), r(0.01));
        assert!(r1 < 1e-3);
        assert!((3.0..5.0).contains(&(r1 / r2)), "ratio {}", r1 / r2);
    }

    #[test]
    fn kdv_closed_form_converges() {
        let g = |x: f64, t: f64| {
            let th = (x - t).exp();
            CMat::from_element(1, 1, C64::new(-2.0 * th / (2.0 + th), 0.0))
        };
        let r = |d: f64| {
            let f = SolutionField::from_fn(grid(0.3, d, 2), grid(0.1, d, 1), 1, 1, g).unwrap();
            residual_kdv(&f, "kdv").unwrap().max
        };
        let (a, b) = (r(0.02), r(0.01));
        assert!((3.0..5.0).contains(&(a / b)), "ratio {}", a / b);
    }

    #[test]
    fn nonlocal_needs_mirrored_grid() {
        let f = SolutionField::from_fn(grid(0.5, 0.1, 2), grid(0.5, 0.1, 1), 1, 1, |_, _| CMat::zeros(1, 1)).unwrap();
        let rel = CompanionKind::TransposeRevSpacetime.observable_relation().unwrap();
        assert!(residual_local(&f, &nls_params(), &rel, "rst").is_err());
    }

    #[test]
    fn registry_rejects_wrong_pairings() {
        assert!(equation_by_name("local_nls", Some(CompanionKind::Adjoint)).is_ok());
        assert!(equation_by_name("local_nls", Some(CompanionKind::NegTranspose)).is_err());
        assert!(equation_by_name("heat", None).is_err());
        let m = equation_by_name("local_mkdv", None).unwrap();
        let bad = DispersionParams::new(ZERO, C64::new(1.0, 0.0));
        assert!(m.check(&bad, 1, 1).is_err());
        assert!(m.check(&mkdv_params(), 1, 1).is_ok());
        let k = equation_by_name("kdv_primitive", None).unwrap();
        assert!(k.check(&mkdv_params(), 1, 2).is_err());
        let c = equation_by_name("combined_degree3", None).unwrap();
        assert!(c
            .check(&DispersionParams::new(C64::new(0.0, 0.5), C64::new(-1.0, 0.0)), 2, 2)
            .is_ok());
        assert!(c
            .check(&DispersionParams::new(C64::new(0.5, 0.0), C64::new(-1.0, 0.0)), 2, 2)
            .is_err());
    }

    #[test]
    fn order_fit() {
        let e = [1.0, 0.25, 0.0625];
        assert!((fitted_order(&e).unwrap() - 2.0).abs() < 1e-12);
        assert_eq!(ratios(&e), vec![4.0, 4.0]);
        assert!(fitted_order(&[1.0]).is_none());
        assert!(fitted_order(&[1.0, 0.0]).is_none());
    }
}
