//! Scenario files: parsing, validation and tolerance overrides.
//!
//! ```toml
//! kind = "local_nls"
//! companion = "adjoint"          # optional, selects the variant
//! dims = [1, 1]
//!
//! [params]                       # optional where the kind pins them
//! mu1 = [0.0, -1.0]              # [re, im]
//! mu2 = [0.0, 0.0]
//!
//! [initial]
//! type = "gaussian"
//! amplitude = [[0.5]]
//! width = 0.8
//! center = -1.0
//!
//! [grid]
//! half_width = 16.0
//! nodes = 320
//!
//! [quadrature]
//! length = 6.0
//! intervals = 60
//! rule = "trapezoid"
//!
//! [samples]
//! x = { center = 0.0, step = 0.1, half_count = 4 }
//! t = { center = 0.1, step = 0.05, half_count = 1 }
//! ```

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::companion::CompanionKind;
use crate::dispersion::{flow_for, DispersionParams, LinearFlow};
use crate::equations::{equation_by_name, EquationModel, HALO_T, HALO_X};
use crate::error::{Error, Result};
use crate::field::axis;
use crate::fredholm::{Problem, SolveOptions, DEFAULT_PATCH_THRESHOLD, DEFAULT_SOLVER_TOL};
use crate::gridkernel::{sample_profile, InitialDataSpec, MasterGrid};
use crate::linalg::C64;
use crate::quadrature::{make_quadrature_with, rule_by_name, QuadratureGrid};

/// Prefix of every environment variable that overrides a tolerance.
pub const ENV_PREFIX: &str = "HANKEL_";

pub const DEFAULT_DECAY_TOL: f64 = 1e-10;
pub const DEFAULT_MAX_SYSTEM: usize = 4096;
pub const DEFAULT_IDENTITY_TOL: f64 = 1e-10;
/// Smallest interval count a scenario may request.
pub const MIN_SCENARIO_INTERVALS: usize = 8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamsSpec {
    #[serde(default)]
    pub mu1: [f64; 2],
    #[serde(default)]
    pub mu2: [f64; 2],
}

impl ParamsSpec {
    pub fn to_params(&self) -> DispersionParams {
        DispersionParams::new(C64::new(self.mu1[0], self.mu1[1]), C64::new(self.mu2[0], self.mu2[1]))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub half_width: f64,
    pub nodes: usize,
}

fn default_rule() -> String {
    "trapezoid".into()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuadSpec {
    pub length: f64,
    pub intervals: usize,
    #[serde(default = "default_rule")]
    pub rule: String,
}

/// Sample coordinates: an explicit list, or `center + k * step` for
/// `|k| <= half_count`. `mirror` adds the negative of every coordinate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AxisSpec {
    #[serde(default)]
    pub values: Option<Vec<f64>>,
    #[serde(default)]
    pub center: f64,
    #[serde(default)]
    pub step: Option<f64>,
    #[serde(default)]
    pub half_count: usize,
    #[serde(default)]
    pub mirror: bool,
}

impl AxisSpec {
    pub fn single(v: f64) -> Self {
        Self {
            values: Some(vec![v]),
            center: 0.0,
            step: None,
            half_count: 0,
            mirror: false,
        }
    }

    pub fn stencil(center: f64, step: f64, half_count: usize, mirror: bool) -> Self {
        Self {
            values: None,
            center,
            step: Some(step),
            half_count,
            mirror,
        }
    }

    /// Sorted coordinates.
    pub fn coordinates(&self) -> Result<Vec<f64>> {
        let base: Vec<f64> = match (&self.values, self.step) {
            (Some(v), _) => v.clone(),
            (None, Some(step)) => {
                if !(step > 0.0) {
                    return Err(Error::Scenario(format!("sample step must be positive, got {step}")));
                }
                let k = self.half_count as i64;
                (-k..=k).map(|j| self.center + j as f64 * step).collect()
            }
            (None, None) if self.half_count == 0 => vec![self.center],
            (None, None) => return Err(Error::Scenario("sample axis needs a step".into())),
        };
        if base.is_empty() || base.iter().any(|v| !v.is_finite()) {
            return Err(Error::Scenario("sample axis must hold finite coordinates".into()));
        }
        let mirrored = if self.mirror {
            base.iter().flat_map(|&v| [v, -v]).collect()
        } else {
            base
        };
        Ok(axis(mirrored))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SampleSpec {
    pub x: AxisSpec,
    pub t: AxisSpec,
}

fn yes() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    #[serde(default = "yes")]
    pub center: bool,
    #[serde(default)]
    pub slices: bool,
    #[serde(default = "yes")]
    pub det2: bool,
    #[serde(default = "yes")]
    pub residuals: bool,
}

impl Default for OutputSpec {
    fn default() -> Self {
        Self {
            center: true,
            slices: false,
            det2: true,
            residuals: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tolerances {
    #[serde(default = "default_decay")]
    pub decay_tol: f64,
    #[serde(default = "default_patch")]
    pub patch_threshold: f64,
    #[serde(default = "default_solver")]
    pub solver_tol: f64,
    #[serde(default = "default_identity")]
    pub identity_tol: f64,
    /// Relative cut-off for spectral band-limiting of the initial data.
    #[serde(default)]
    pub band_limit: Option<f64>,
    /// Optional bound on every residual, checked by `verify`.
    #[serde(default)]
    pub residual: Option<f64>,
    /// Largest admissible `N * block` of the dense solve.
    #[serde(default = "default_max_system")]
    pub max_system: usize,
}

fn default_decay() -> f64 {
    DEFAULT_DECAY_TOL
}
fn default_patch() -> f64 {
    DEFAULT_PATCH_THRESHOLD
}
fn default_solver() -> f64 {
    DEFAULT_SOLVER_TOL
}
fn default_identity() -> f64 {
    DEFAULT_IDENTITY_TOL
}
fn default_max_system() -> usize {
    DEFAULT_MAX_SYSTEM
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            decay_tol: DEFAULT_DECAY_TOL,
            patch_threshold: DEFAULT_PATCH_THRESHOLD,
            solver_tol: DEFAULT_SOLVER_TOL,
            identity_tol: DEFAULT_IDENTITY_TOL,
            band_limit: None,
            residual: None,
            max_system: DEFAULT_MAX_SYSTEM,
        }
    }
}

fn env_value<T: std::str::FromStr>(lookup: &dyn Fn(&str) -> Option<String>, name: &str) -> Result<Option<T>> {
    let key = format!("{ENV_PREFIX}{name}");
    match lookup(&key) {
        None => Ok(None),
        Some(v) => v
            .trim()
            .parse()
            .map(Some)
            .map_err(|_| Error::Scenario(format!("cannot parse {key}={v}"))),
    }
}

impl Tolerances {
    /// Applies `HANKEL_DECAY_TOL`, `HANKEL_PATCH_THRESHOLD`,
    /// `HANKEL_SOLVER_TOL`, `HANKEL_IDENTITY_TOL`, `HANKEL_BAND_LIMIT`,
    /// `HANKEL_RESIDUAL_TOL` and `HANKEL_MAX_SYSTEM` on top of the file values.
    pub fn apply_env(&mut self) -> Result<Vec<String>> {
        self.apply_overrides(&|k| std::env::var(k).ok())
    }

    pub fn apply_overrides(&mut self, lookup: &dyn Fn(&str) -> Option<String>) -> Result<Vec<String>> {
        let mut applied = Vec::new();
        macro_rules! take {
            ($name:literal, $field:expr) => {
                if let Some(v) = env_value(lookup, $name)? {
                    $field = v;
                    applied.push(format!("{ENV_PREFIX}{}", $name));
                }
            };
        }
        take!("DECAY_TOL", self.decay_tol);
        take!("PATCH_THRESHOLD", self.patch_threshold);
        take!("SOLVER_TOL", self.solver_tol);
        take!("IDENTITY_TOL", self.identity_tol);
        take!("MAX_SYSTEM", self.max_system);
        if let Some(v) = env_value::<f64>(lookup, "BAND_LIMIT")? {
            self.band_limit = Some(v);
            applied.push(format!("{ENV_PREFIX}BAND_LIMIT"));
        }
        if let Some(v) = env_value::<f64>(lookup, "RESIDUAL_TOL")? {
            self.residual = Some(v);
            applied.push(format!("{ENV_PREFIX}RESIDUAL_TOL"));
        }
        Ok(applied)
    }

    fn validate(&self) -> Result<()> {
        let positive = [
            ("decay_tol", self.decay_tol),
            ("patch_threshold", self.patch_threshold),
            ("solver_tol", self.solver_tol),
            ("identity_tol", self.identity_tol),
        ];
        for (name, v) in positive {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::Scenario(format!("{name} must be positive, got {v}")));
            }
        }
        if let Some(b) = self.band_limit {
            if !(b > 0.0 && b < 1.0) {
                return Err(Error::Scenario(format!("band_limit must lie in (0, 1), got {b}")));
            }
        }
        if self.max_system == 0 {
            return Err(Error::Scenario("max_system must be positive".into()));
        }
        Ok(())
    }
}

/// What a convergence study measures.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum StudyTarget {
    /// Residuals of the scenario's equation.
    #[default]
    Residual,
    /// Error against the rank-one closed form (scalar exponential data).
    ClosedForm,
    /// Product rule discrepancy with the scenario data as Hankel factors.
    ProductRule,
    /// Miura identity between the mKdV and KdV solutions of the data.
    Miura,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct StudySpec {
    #[serde(default)]
    pub target: StudyTarget,
}

/// File contents as written, before validation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub kind: String,
    #[serde(default)]
    pub companion: Option<CompanionKind>,
    pub dims: [usize; 2],
    #[serde(default)]
    pub params: Option<ParamsSpec>,
    pub initial: InitialDataSpec,
    pub grid: GridSpec,
    pub quadrature: QuadSpec,
    pub samples: SampleSpec,
    #[serde(default)]
    pub outputs: OutputSpec,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub study: StudySpec,
}

/// Validated scenario with every derived object built.
#[derive(Debug)]
pub struct Scenario {
    pub file: ScenarioFile,
    pub model: Box<dyn EquationModel>,
    pub params: DispersionParams,
    pub grid: MasterGrid,
    pub quad: QuadratureGrid,
    pub xs: Vec<f64>,
    pub ts: Vec<f64>,
    pub tolerances: Tolerances,
    pub env_overrides: Vec<String>,
    pub warnings: Vec<String>,
    /// Refinement level relative to the file (0 for the file itself).
    pub level: u32,
}

impl ScenarioFile {
    pub fn from_toml(text: &str) -> Result<Self> {
        Ok(toml::from_str(text)?)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("scenario serialises")
    }

    /// Grids refined `level` times: master and quadrature spacing and both
    /// sample steps halved per level. The part of each sample window where
    /// the residual stencils fit keeps its extent; explicit sample lists
    /// stay as they are.
    pub fn refined(&self, level: u32) -> Self {
        let f = 1usize << level;
        let mut out = self.clone();
        out.grid.nodes = self.grid.nodes * f;
        out.quadrature.intervals = self.quadrature.intervals * f;
        for (ax, halo) in [(&mut out.samples.x, HALO_X), (&mut out.samples.t, HALO_T)] {
            if let Some(s) = ax.step.as_mut() {
                *s /= f as f64;
                ax.half_count = match ax.half_count.checked_sub(halo) {
                    Some(inner) => inner * f + halo,
                    None => ax.half_count * f,
                };
            }
        }
        out
    }
}

/// Reads and validates a scenario file, applying environment overrides.
pub fn parse_scenario(path: &Path) -> Result<Scenario> {
    let text = std::fs::read_to_string(path)?;
    let file = ScenarioFile::from_toml(&text)?;
    Scenario::from_file(file, true)
}

impl Scenario {
    pub fn from_toml(text: &str) -> Result<Self> {
        Self::from_file(ScenarioFile::from_toml(text)?, false)
    }

    /// Validates `file`. With `use_env`, tolerance overrides from the
    /// environment are applied first.
    pub fn from_file(file: ScenarioFile, use_env: bool) -> Result<Self> {
        Self::build(file, use_env, 0)
    }

    fn build(file: ScenarioFile, use_env: bool, level: u32) -> Result<Self> {
        let mut tolerances = file.tolerances.clone();
        let env_overrides = if use_env { tolerances.apply_env()? } else { Vec::new() };
        tolerances.validate()?;

        let model = equation_by_name(&file.kind, file.companion)?;
        let params = match (&file.params, model.pinned_params()) {
            (Some(p), _) => p.to_params(),
            (None, Some(p)) => p,
            (None, None) => {
                return Err(Error::Scenario(format!(
                    "{} needs an explicit [params] section",
                    file.kind
                )))
            }
        };
        let [rows, cols] = file.dims;
        if rows == 0 || cols == 0 {
            return Err(Error::Dimension(format!("dims must be positive, got {rows}x{cols}")));
        }
        model.check(&params, rows, cols)?;

        let grid = MasterGrid::new(file.grid.half_width, file.grid.nodes)?;
        if file.quadrature.intervals < MIN_SCENARIO_INTERVALS {
            return Err(Error::InvalidGrid(format!(
                "quadrature needs at least {MIN_SCENARIO_INTERVALS} intervals, got {}",
                file.quadrature.intervals
            )));
        }
        let rule = rule_by_name(&file.quadrature.rule)?;
        let quad = make_quadrature_with(
            file.quadrature.length,
            file.quadrature.intervals,
            grid.spacing(),
            rule.as_ref(),
        )?;

        let block = if model.companion().is_identity() { rows } else { cols };
        let size = quad.intervals() * block;
        if size > tolerances.max_system {
            return Err(Error::Resource(format!(
                "dense system N*m = {size} exceeds the limit {} (set {ENV_PREFIX}MAX_SYSTEM to raise it)",
                tolerances.max_system
            )));
        }

        let xs = file.samples.x.coordinates()?;
        let ts = file.samples.t.coordinates()?;
        for &x in &xs {
            grid.index_of(x).map_err(|e| match e {
                Error::OffGrid { .. } => Error::InvalidGrid(format!(
                    "sample x = {x} is not a master-grid node (spacing {})",
                    grid.spacing()
                )),
                other => other,
            })?;
        }
        let (xmin, xmax) = (xs[0], xs[xs.len() - 1]);
        if xmin - 2.0 * quad.length() < -grid.half_width() - 1e-9 * grid.spacing() {
            return Err(Error::InvalidGrid(format!(
                "x = {xmin} needs arguments down to {}, below the master domain start {}",
                xmin - 2.0 * quad.length(),
                -grid.half_width()
            )));
        }
        if xmax >= grid.half_width() {
            return Err(Error::InvalidGrid(format!("x = {xmax} is outside the master domain")));
        }

        let req = model.requirements();
        let closed = |axis: &[f64]| axis.iter().all(|&v| crate::field::find(axis, -v).is_some());
        if req.mirror_x && !closed(&xs) {
            return Err(Error::Scenario(format!(
                "{} needs x samples symmetric about 0; set mirror = true on samples.x",
                file.kind
            )));
        }
        if req.mirror_t && !closed(&ts) {
            return Err(Error::Scenario(format!(
                "{} needs t samples symmetric about 0; set mirror = true on samples.t",
                file.kind
            )));
        }

        let p0 = sample_profile(&file.initial, grid, rows, cols)?;
        let mut warnings = Vec::new();
        if file.initial.exponential_mode().is_none() {
            let ratio = p0.boundary_ratio();
            if ratio > tolerances.decay_tol {
                warnings.push(format!(
                    "initial data does not decay: boundary/maximum ratio {ratio:e} exceeds decay_tol {:e}",
                    tolerances.decay_tol
                ));
            }
        }
        // The discrete operators act on [-L, 0]; everything the half line
        // would add involves p below x - L (above L - x once reflected).
        // Dispersion grows tails, so the evolved profiles are checked too.
        let flow = flow_for(&file.initial, grid, rows, cols, params, tolerances.band_limit)?;
        let (tmin, tmax) = (ts[0], ts[ts.len() - 1]);
        let reflect = model.companion().reverses_space();
        let (lo, hi) = (xmin - quad.length(), quad.length() - xmax);
        let mut worst: Option<(f64, f64)> = None;
        for t in [0.0, tmin, tmax, -tmin, -tmax] {
            let Ok(p) = flow.profile_at(t) else { continue };
            let total = p.max_norm();
            if total == 0.0 {
                continue;
            }
            let tail = (0..grid.len())
                .filter(|&i| grid.node(i) <= lo || (reflect && grid.node(i) >= hi))
                .map(|i| crate::linalg::max_abs(&p.sample(i)))
                .fold(0.0, f64::max)
                / total;
            if worst.is_none_or(|(w, _)| tail > w) {
                worst = Some((tail, t));
            }
        }
        if let Some((tail, t)) = worst {
            if tail > tolerances.decay_tol {
                warnings.push(format!(
                    "half-line truncation: |p(t = {t})| below x - L = {lo} reaches {tail:e} of its maximum"
                ));
            }
        }
        for w in &warnings {
            log::warn!("{w}");
        }

        Ok(Self {
            file,
            model,
            params,
            grid,
            quad,
            xs,
            ts,
            tolerances,
            env_overrides,
            warnings,
            level,
        })
    }

    /// The scenario refined `level` times, keeping the tolerances already
    /// resolved here.
    pub fn refined(&self, level: u32) -> Result<Self> {
        let mut file = self.file.refined(level);
        file.tolerances = self.tolerances.clone();
        let mut out = Self::build(file, false, level)?;
        out.env_overrides = self.env_overrides.clone();
        Ok(out)
    }

    pub fn rows(&self) -> usize {
        self.file.dims[0]
    }

    pub fn cols(&self) -> usize {
        self.file.dims[1]
    }

    pub fn companion(&self) -> CompanionKind {
        self.model.companion()
    }

    pub fn solve_options(&self) -> SolveOptions {
        SolveOptions {
            patch_threshold: self.tolerances.patch_threshold,
            solver_tol: self.tolerances.solver_tol,
        }
    }

    pub fn flow(&self) -> Result<Box<dyn LinearFlow>> {
        flow_for(
            &self.file.initial,
            self.grid,
            self.rows(),
            self.cols(),
            self.params,
            self.tolerances.band_limit,
        )
    }

    /// Fredholm problem with the recording flags the model and outputs need.
    pub fn problem(&self) -> Result<Problem> {
        let req = self.model.requirements();
        let mut p = Problem::new(self.flow()?, self.companion(), self.quad.clone());
        p.record_slices = req.slices || self.file.outputs.slices;
        p.record_companion = req.companion_field;
        p.options = self.solve_options();
        Ok(p)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const NLS: &str = r#"
kind = "local_nls"
companion = "adjoint"
dims = [1, 1]

[params]
mu1 = [0.0, -1.0]

[initial]
type = "gaussian"
amplitude = [[0.5]]
width = 0.8
center = -1.0

[grid]
half_width = 16.0
nodes = 320

[quadrature]
length = 6.0
intervals = 60

[samples]
x = { center = 0.0, step = 0.1, half_count = 2 }
t = { center = 0.1, step = 0.05, half_count = 1 }
"#;

    #[test]
    fn parses_and_validates() {
        let s = Scenario::from_toml(NLS).unwrap();
        assert_eq!(s.model.name(), "local_nls");
        assert_eq!(s.xs.len(), 5);
        assert_eq!(s.ts.len(), 3);
        assert_eq!(s.quad.stride(), 1);
        assert_eq!(s.tolerances, Tolerances::default());
        let echo = ScenarioFile::from_toml(&s.file.to_toml()).unwrap();
        assert_eq!(echo, s.file);
    }

    #[test]
    fn rejects_inconsistent_parameters() {
        let bad = NLS.replace("mu1 = [0.0, -1.0]", "mu1 = [0.0, 1.0]");
        assert!(Scenario::from_toml(&bad).is_err());
        let mkdv = NLS
            .replace("local_nls", "local_mkdv")
            .replace("companion = \"adjoint\"", "")
            .replace("mu1 = [0.0, -1.0]", "mu2 = [1.0, 0.0]");
        let err = Scenario::from_toml(&mkdv).unwrap_err();
        assert!(err.to_string().contains("mu2"), "{err}");
        let wrong_pair = NLS.replace("\"adjoint\"", "\"neg_transpose\"");
        assert!(Scenario::from_toml(&wrong_pair).is_err());
        assert!(Scenario::from_toml(&NLS.replace("local_nls", "heat")).is_err());
    }

    #[test]
    fn missing_initial_is_an_error() {
        let start = NLS.find("[initial]").unwrap();
        let end = NLS.find("[grid]").unwrap();
        let text = format!("{}{}", &NLS[..start], &NLS[end..]);
        assert!(Scenario::from_toml(&text).is_err());
    }

    #[test]
    fn rejects_incommensurate_samples() {
        let off = NLS.replace("center = 0.0, step = 0.1", "center = 0.03, step = 0.1");
        assert!(matches!(Scenario::from_toml(&off), Err(Error::InvalidGrid(_))));
        let quad = NLS.replace("intervals = 60", "intervals = 70");
        assert!(Scenario::from_toml(&quad).is_err());
    }

    #[test]
    fn nonlocal_kinds_need_mirrored_axes() {
        let rst = NLS
            .replace("local_nls", "rev_spacetime_nls")
            .replace("companion = \"adjoint\"", "");
        assert!(Scenario::from_toml(&rst).is_err());
        let ok = rst
            .replace("half_count = 2 }", "half_count = 2, mirror = true }")
            .replace("half_count = 1 }", "half_count = 1, mirror = true }")
            .replace("center = 0.0, step = 0.1", "center = 0.3, step = 0.1");
        let s = Scenario::from_toml(&ok).unwrap();
        assert_eq!(s.xs.len(), 10);
        assert_eq!(s.ts.len(), 6);
    }

    #[test]
    fn env_overrides_use_prefix() {
        let mut t = Tolerances::default();
        let applied = t
            .apply_overrides(&|k| match k {
                "HANKEL_PATCH_THRESHOLD" => Some("1e-6".into()),
                "HANKEL_MAX_SYSTEM" => Some("100".into()),
                _ => None,
            })
            .unwrap();
        assert_eq!(t.patch_threshold, 1e-6);
        assert_eq!(t.max_system, 100);
        assert_eq!(applied.len(), 2);
        let mut t = Tolerances::default();
        assert!(t.apply_overrides(&|_| Some("abc".into())).is_err());
    }

    #[test]
    fn resource_guard() {
        let big = NLS.replace("[samples]", "[tolerances]\nmax_system = 10\n\n[samples]");
        assert!(matches!(Scenario::from_toml(&big), Err(Error::Resource(_))));
    }

    #[test]
    fn refinement_halves_steps() {
        let s = Scenario::from_toml(NLS).unwrap();
        let r = s.refined(2).unwrap();
        assert_eq!(r.grid.len(), 4 * s.grid.len());
        assert_eq!(r.quad.intervals(), 4 * s.quad.intervals());
        assert!((r.xs[1] - r.xs[0] - 0.025).abs() < 1e-12);
        assert!((r.ts[1] - r.ts[0] - 0.0125).abs() < 1e-12);
        // only x = 0 has a full stencil, before and after
        assert_eq!(r.xs.len(), 5);
        assert!((r.xs[0] + 0.05).abs() < 1e-12);
    }
}
