//! Scenario execution: `solve` with output files, convergence studies and
//! the verification suite.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;
use serde_json::json;

use crate::companion::CompanionKind;
use crate::equations::{fitted_order, ratios, Residual};
use crate::error::{Error, Result};
use crate::field::{Point, SolutionField};
use crate::fredholm::{evaluate_solution, PatchReport};
use crate::identities::{miura_check, product_rule_check, u_derivative_check, u_identity_check, SmoothKernel};
use crate::linalg::{max_abs, CMat, C64};
use crate::scenario::{Scenario, StudyTarget};

pub const TOOL_NAME: &str = "hankel";
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

/// Process exit status of a command.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ExitStatus {
    Clean,
    /// Some samples were skipped by the patch monitor.
    PatchSkipped,
    Failure,
}

impl ExitStatus {
    pub fn code(self) -> i32 {
        match self {
            ExitStatus::Clean => 0,
            ExitStatus::Failure => 1,
            ExitStatus::PatchSkipped => 2,
        }
    }

    fn worst(self, other: Self) -> Self {
        if self.code() == 1 || other.code() == 1 {
            ExitStatus::Failure
        } else if self == ExitStatus::PatchSkipped || other == ExitStatus::PatchSkipped {
            ExitStatus::PatchSkipped
        } else {
            ExitStatus::Clean
        }
    }
}

/// Result of solving a scenario, before anything is written.
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub field: SolutionField,
    pub patch: PatchReport,
    pub residuals: Vec<Residual>,
    /// Why residuals are missing, if they were requested but unavailable.
    pub residual_note: Option<String>,
    pub timings: BTreeMap<String, f64>,
}

impl RunOutput {
    pub fn status(&self) -> ExitStatus {
        if self.patch.any_skipped() {
            ExitStatus::PatchSkipped
        } else {
            ExitStatus::Clean
        }
    }
}

/// Solves the scenario on its sample grid and evaluates the residuals.
pub fn solve(scn: &Scenario) -> Result<RunOutput> {
    let mut timings = BTreeMap::new();
    let start = Instant::now();
    let problem = scn.problem()?;
    let (field, patch) = evaluate_solution(&problem, &scn.xs, &scn.ts)?;
    timings.insert("solve".to_string(), start.elapsed().as_secs_f64());

    let (mut residuals, mut residual_note) = (Vec::new(), None);
    if scn.file.outputs.residuals {
        let start = Instant::now();
        match scn.model.residuals(&field, &scn.params) {
            Ok(r) => residuals = r,
            Err(e) => {
                log::warn!("residuals unavailable: {e}");
                residual_note = Some(e.to_string());
            }
        }
        timings.insert("residuals".to_string(), start.elapsed().as_secs_f64());
    }
    Ok(RunOutput {
        field,
        patch,
        residuals,
        residual_note,
        timings,
    })
}

fn num(v: f64) -> String {
    format!("{v}")
}

/// `x,t,row,col,re,im` for every recorded sample.
pub fn center_csv(field: &SolutionField) -> String {
    let mut out = String::from("x,t,row,col,re,im\n");
    for (pt, s) in field.points().zip(field.samples()) {
        if let Some(s) = s {
            for r in 0..field.rows() {
                for c in 0..field.cols() {
                    let z = s.center[(r, c)];
                    let _ = writeln!(out, "{},{},{r},{c},{},{}", num(pt.x), num(pt.t), num(z.re), num(z.im));
                }
            }
        }
    }
    out
}

pub fn det2_csv(patch: &PatchReport) -> String {
    let mut out = String::from("x,t,re,im,abs,skipped\n");
    for e in &patch.entries {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{}",
            num(e.x),
            num(e.t),
            num(e.det2.re),
            num(e.det2.im),
            num(e.det2.norm()),
            e.skipped
        );
    }
    out
}

pub fn residual_csv(residuals: &[Residual]) -> String {
    let mut out = String::from("label,max,rms,points\n");
    for r in residuals {
        let _ = writeln!(out, "{},{},{},{}", r.label, num(r.max), num(r.rms), r.points);
    }
    out
}

/// `x,t,slice,node,xi,row,col,re,im`; `slice` is `y` for `g(xi, 0)` and `z`
/// for `g(0, xi)`.
pub fn slices_csv(field: &SolutionField) -> String {
    let mut out = String::from("x,t,slice,node,xi,row,col,re,im\n");
    let nodes = field.quad_nodes();
    for (pt, s) in field.points().zip(field.samples()) {
        let Some(s) = s else { continue };
        for (name, slice) in [("y", &s.y_slice), ("z", &s.z_slice)] {
            let Some(slice) = slice else { continue };
            for (k, m) in slice.iter().enumerate() {
                for r in 0..m.nrows() {
                    for c in 0..m.ncols() {
                        let z = m[(r, c)];
                        let _ = writeln!(
                            out,
                            "{},{},{name},{k},{},{r},{c},{},{}",
                            num(pt.x),
                            num(pt.t),
                            num(nodes[k]),
                            num(z.re),
                            num(z.im)
                        );
                    }
                }
            }
        }
    }
    out
}

fn pair(z: C64) -> [f64; 2] {
    [z.re, z.im]
}

/// Scenario echo and resolved setup shared by every manifest.
pub fn describe(scn: &Scenario) -> serde_json::Value {
    json!({
        "tool": TOOL_NAME,
        "version": TOOL_VERSION,
        "scenario": scn.file,
        "scenario_toml": scn.file.to_toml(),
        "resolved": {
            "kind": scn.model.name(),
            "variant": scn.model.variant(),
            "companion": scn.companion(),
            "mu1": pair(scn.params.mu1),
            "mu2": pair(scn.params.mu2),
            "master_grid": {
                "half_width": scn.grid.half_width(),
                "nodes": scn.grid.len(),
                "spacing": scn.grid.spacing(),
            },
            "quadrature": {
                "length": scn.quad.length(),
                "intervals": scn.quad.intervals(),
                "spacing": scn.quad.spacing(),
                "stride": scn.quad.stride(),
                "rule": scn.quad.rule(),
            },
            "xs": scn.xs,
            "ts": scn.ts,
        },
        "tolerances": scn.tolerances,
        "env_overrides": scn.env_overrides,
        "warnings": scn.warnings,
        "threads": rayon::current_num_threads(),
    })
}

/// What `run` produced.
#[derive(Debug, Clone)]
pub struct RunSummary {
    pub output: RunOutput,
    pub files: Vec<PathBuf>,
    pub manifest: serde_json::Value,
    pub status: ExitStatus,
}

/// Solves the scenario and writes the requested tables plus `manifest.json`
/// into `out_dir`.
pub fn run(scn: &Scenario, out_dir: &Path) -> Result<RunSummary> {
    let start = Instant::now();
    let mut output = solve(scn)?;
    std::fs::create_dir_all(out_dir)?;
    let mut files = Vec::new();
    let mut write = |name: &str, text: String| -> Result<()> {
        let path = out_dir.join(name);
        std::fs::write(&path, text)?;
        files.push(path);
        Ok(())
    };
    let outputs = &scn.file.outputs;
    if outputs.center {
        write("center_field.csv", center_csv(&output.field))?;
    }
    if outputs.det2 {
        write("det2.csv", det2_csv(&output.patch))?;
    }
    if outputs.residuals {
        write("residual_summary.csv", residual_csv(&output.residuals))?;
    }
    if outputs.slices {
        write("slices.csv", slices_csv(&output.field))?;
    }
    output
        .timings
        .insert("total".to_string(), start.elapsed().as_secs_f64());

    let status = output.status();
    let skipped: Vec<Point> = output.patch.skipped().map(|e| Point { x: e.x, t: e.t }).collect();
    let mut manifest = describe(scn);
    let extra = json!({
        "command": "solve",
        "timings": output.timings,
        "patch": {
            "threshold": output.patch.threshold,
            "min_modulus": output.patch.min_modulus(),
            "sign_changes": output.patch.sign_changes(),
            "skipped": skipped,
        },
        "residuals": output.residuals,
        "residual_note": output.residual_note,
        "files": files.iter().chain(std::iter::once(&out_dir.join("manifest.json")))
            .map(|p| p.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default())
            .collect::<Vec<_>>(),
        "exit_code": status.code(),
    });
    merge(&mut manifest, extra);
    let path = out_dir.join("manifest.json");
    std::fs::write(&path, serde_json::to_string_pretty(&manifest)?)?;
    files.push(path);
    Ok(RunSummary {
        output,
        files,
        manifest,
        status,
    })
}

fn merge(into: &mut serde_json::Value, extra: serde_json::Value) {
    if let (Some(a), serde_json::Value::Object(b)) = (into.as_object_mut(), extra) {
        a.extend(b);
    }
}

/// Closed form of `g(0,0; x, t)` for scalar data `A e^{a s}`. With
/// `p = alpha e^{a s}` and `p~ = beta e^{a s}` the kernel `Q` has rank one and
/// `g = alpha e^{a x} / (1 + alpha beta e^{2 a x} / (4 a^2))`; the KdV
/// reduction gives `alpha e^{a x} / (1 - alpha e^{a x} / (2 a))`.
pub fn rank_one_reference(scn: &Scenario) -> Result<impl Fn(f64, f64) -> C64 + '_> {
    let (rate, amp) = scn
        .file
        .initial
        .exponential_mode()
        .ok_or_else(|| Error::Scenario("the closed form needs exponential-mode initial data".into()))?;
    if amp.nrows() != 1 || amp.ncols() != 1 {
        return Err(Error::Scenario("the closed form needs scalar data".into()));
    }
    let kind = scn.companion();
    if kind.reverses_space() {
        return Err(Error::Scenario(format!(
            "no rank-one closed form for the space-reversing companion {kind}"
        )));
    }
    let a = C64::new(rate, 0.0);
    let amp = amp[(0, 0)];
    let growth = scn.params.polynomial(a);
    let alpha = move |t: f64| amp * (growth * t).exp();
    Ok(move |x: f64, t: f64| {
        let al = alpha(t);
        let e = (a * x).exp();
        if kind == CompanionKind::NegIdentity {
            return al * e / (1.0 - al * e / (2.0 * a));
        }
        let src = alpha(kind.source_time(t));
        let beta = kind.sign() * if kind.conjugates() { src.conj() } else { src };
        al * e / (1.0 + al * beta * e * e / (4.0 * a * a))
    })
}

/// Largest deviation of the computed field from the rank-one closed form.
pub fn closed_form_error(scn: &Scenario, field: &SolutionField) -> Result<f64> {
    let reference = rank_one_reference(scn)?;
    let mut worst = 0.0_f64;
    for (pt, s) in field.points().zip(field.samples()) {
        if let Some(s) = s {
            worst = worst.max((s.center[(0, 0)] - reference(pt.x, pt.t)).norm());
        }
    }
    Ok(worst)
}

fn middle(v: &[f64]) -> f64 {
    v[v.len() / 2]
}

/// Product rule discrepancy at the middle sample, with the scenario data as
/// `H`, its transpose as `H'`, and Gaussian bumps as `F` and `F'`. The
/// derivative step is the quadrature spacing.
pub fn product_rule_error(scn: &Scenario) -> Result<f64> {
    let flow = scn.flow()?;
    let h = flow.profile_at(middle(&scn.ts))?;
    let h2 = h.map_samples(h.cols(), h.rows(), |m| m.transpose());
    let n = h.rows();
    let l = scn.quad.length();
    let bump = |cy: f64, cz: f64| SmoothKernel {
        amplitude: CMat::identity(n, n),
        center_y: cy,
        center_z: cz,
        width: l / 4.0,
    };
    let x = middle(&scn.xs);
    let report = product_rule_check(
        &bump(l / 3.0, l / 2.0),
        &h,
        &h2,
        &bump(l / 2.0, l / 4.0),
        x,
        scn.quad.spacing(),
        &scn.quad,
    )?;
    Ok(report.error)
}

/// Miura discrepancy at the middle sample and its two quadrature-spacing
/// neighbours.
pub fn miura_error(scn: &Scenario) -> Result<f64> {
    let flow = scn.flow()?;
    let x = middle(&scn.xs);
    let dx = scn.quad.spacing();
    let report = miura_check(
        flow.as_ref(),
        &scn.quad,
        &[x - dx, x, x + dx],
        middle(&scn.ts),
        &scn.solve_options(),
    )?;
    Ok(report.max_error)
}

#[derive(Debug, Clone, Serialize)]
pub struct StudyLevel {
    pub level: u32,
    pub master_spacing: f64,
    pub quad_spacing: f64,
    pub dx: Option<f64>,
    pub dt: Option<f64>,
    pub values: Vec<(String, f64)>,
}

#[derive(Debug, Clone, Serialize)]
pub struct StudySeries {
    pub label: String,
    pub errors: Vec<f64>,
    pub ratios: Vec<f64>,
    pub order: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct StudyReport {
    pub target: StudyTarget,
    pub levels: Vec<StudyLevel>,
    pub series: Vec<StudySeries>,
    pub skipped_samples: usize,
}

impl StudyReport {
    pub fn status(&self) -> ExitStatus {
        if self.skipped_samples > 0 {
            ExitStatus::PatchSkipped
        } else {
            ExitStatus::Clean
        }
    }

    /// Plain-text table, one row per level and one line per series.
    pub fn table(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "target: {:?}", self.target);
        for l in &self.levels {
            let _ = write!(
                out,
                "level {} h_x={:.3e} h={:.3e}",
                l.level, l.master_spacing, l.quad_spacing
            );
            for (label, v) in &l.values {
                let _ = write!(out, "  {label}={v:.6e}");
            }
            out.push('\n');
        }
        for s in &self.series {
            let r: Vec<String> = s.ratios.iter().map(|r| format!("{r:.3}")).collect();
            let order = s.order.map_or("n/a".to_string(), |o| format!("{o:.3}"));
            let _ = writeln!(out, "{}: ratios [{}] fitted order {order}", s.label, r.join(", "));
        }
        out
    }
}

fn axis_step(v: &[f64]) -> Option<f64> {
    (v.len() > 1).then(|| v.windows(2).map(|w| w[1] - w[0]).fold(f64::INFINITY, f64::min))
}

/// Refines every spacing by halves over `levels >= 3` levels and measures
/// the scenario's study target at each.
pub fn convergence_study(scn: &Scenario, levels: usize) -> Result<StudyReport> {
    if levels < 3 {
        return Err(Error::Scenario(format!(
            "a study needs at least 3 levels, got {levels}"
        )));
    }
    // Building every level first applies the resource guard before any work.
    let scenarios = (0..levels as u32).map(|l| scn.refined(l)).collect::<Result<Vec<_>>>()?;
    let target = scn.file.study.target;
    let mut out = Vec::with_capacity(levels);
    let mut skipped = 0;
    for s in &scenarios {
        let values = match target {
            StudyTarget::Residual => {
                let (field, patch) = evaluate_solution(&s.problem()?, &s.xs, &s.ts)?;
                skipped += patch.skipped().count();
                s.model
                    .residuals(&field, &s.params)?
                    .into_iter()
                    .map(|r| (r.label, r.max))
                    .collect()
            }
            StudyTarget::ClosedForm => {
                let (field, patch) = evaluate_solution(&s.problem()?, &s.xs, &s.ts)?;
                skipped += patch.skipped().count();
                vec![("closed_form".to_string(), closed_form_error(s, &field)?)]
            }
            StudyTarget::ProductRule => vec![("product_rule".to_string(), product_rule_error(s)?)],
            StudyTarget::Miura => vec![("miura".to_string(), miura_error(s)?)],
        };
        log::info!("study level {}: {:?}", s.level, values);
        out.push(StudyLevel {
            level: s.level,
            master_spacing: s.grid.spacing(),
            quad_spacing: s.quad.spacing(),
            dx: axis_step(&s.xs),
            dt: axis_step(&s.ts),
            values,
        });
    }
    let labels: Vec<String> = out[0].values.iter().map(|(l, _)| l.clone()).collect();
    let series = labels
        .into_iter()
        .map(|label| {
            let errors: Vec<f64> = out
                .iter()
                .map(|l| l.values.iter().find(|(n, _)| *n == label).map_or(f64::NAN, |(_, v)| *v))
                .collect();
            StudySeries {
                ratios: ratios(&errors),
                order: fitted_order(&errors),
                label,
                errors,
            }
        })
        .collect();
    Ok(StudyReport {
        target,
        levels: out,
        series,
        skipped_samples: skipped,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub tolerance: Option<f64>,
    pub passed: bool,
    pub note: Option<String>,
}

impl Check {
    fn bounded(name: impl Into<String>, value: f64, tolerance: Option<f64>) -> Self {
        let passed = value.is_finite() && tolerance.is_none_or(|t| value <= t);
        Self {
            name: name.into(),
            value,
            tolerance,
            passed,
            note: None,
        }
    }

    fn unavailable(name: impl Into<String>, why: String) -> Self {
        Self {
            name: name.into(),
            value: f64::NAN,
            tolerance: None,
            passed: true,
            note: Some(why),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct VerifyReport {
    pub checks: Vec<Check>,
    pub skipped_samples: usize,
    pub status: ExitStatus,
}

impl VerifyReport {
    pub fn table(&self) -> String {
        let mut out = String::new();
        for c in &self.checks {
            let verdict = if c.note.is_some() {
                "n/a"
            } else if c.passed {
                "ok"
            } else {
                "FAIL"
            };
            let tol = c.tolerance.map_or(String::new(), |t| format!(" (tol {t:e})"));
            let note = c.note.as_deref().map_or(String::new(), |n| format!(" [{n}]"));
            let _ = writeln!(out, "{verdict:>4} {:<28} {:.6e}{tol}{note}", c.name, c.value);
        }
        let _ = writeln!(out, "skipped samples: {}", self.skipped_samples);
        out
    }
}

/// Runs every structural check that applies to the scenario: equation
/// residuals, the resolvent identities, the product rule and, for square
/// symmetric data, the Miura map.
pub fn verify(scn: &Scenario) -> Result<VerifyReport> {
    let tol = &scn.tolerances;
    let mut checks = Vec::new();
    let out = solve(scn)?;
    for r in &out.residuals {
        checks.push(Check::bounded(format!("residual:{}", r.label), r.max, tol.residual));
    }
    if let Some(note) = &out.residual_note {
        checks.push(Check::unavailable("residual", note.clone()));
    }

    let problem = scn.problem()?;
    let t = middle(&scn.ts);
    let mut worst = 0.0_f64;
    for &x in &scn.xs {
        let q = problem.kernel_at(x, t)?;
        worst = worst.max(u_identity_check(&q, &scn.quad)?);
    }
    checks.push(Check::bounded("u_identity", worst, Some(tol.identity_tol)));

    let x = middle(&scn.xs);
    let dx = scn.quad.spacing();
    let derivative = (|| -> Result<f64> {
        let qm = problem.kernel_at(x - dx, t)?;
        let q = problem.kernel_at(x, t)?;
        let qp = problem.kernel_at(x + dx, t)?;
        u_derivative_check(&qm, &q, &qp, dx, &scn.quad)
    })();
    checks.push(match derivative {
        Ok(v) => Check::bounded("u_derivative", v, None),
        Err(e) => Check::unavailable("u_derivative", e.to_string()),
    });
    checks.push(match product_rule_error(scn) {
        Ok(v) => Check::bounded("product_rule", v, None),
        Err(e) => Check::unavailable("product_rule", e.to_string()),
    });
    if scn.rows() == scn.cols() {
        checks.push(match miura_error(scn) {
            Ok(v) => Check::bounded("miura", v, None),
            Err(e) => Check::unavailable("miura", e.to_string()),
        });
    }
    checks.push(Check::bounded("det2_min_modulus", out.patch.min_modulus(), None));

    let skipped = out.patch.skipped().count();
    let mut status = out.status();
    if checks.iter().any(|c| !c.passed) {
        status = status.worst(ExitStatus::Failure);
    }
    Ok(VerifyReport {
        checks,
        skipped_samples: skipped,
        status,
    })
}

/// Largest entrywise deviation between two fields on the same grid.
pub fn field_difference(a: &SolutionField, b: &SolutionField) -> Result<f64> {
    if a.xs() != b.xs() || a.ts() != b.ts() {
        return Err(Error::Field("fields live on different grids".into()));
    }
    let mut worst = 0.0_f64;
    for (sa, sb) in a.samples().iter().zip(b.samples()) {
        match (sa, sb) {
            (Some(sa), Some(sb)) => worst = worst.max(max_abs(&(&sa.center - &sb.center))),
            (None, None) => {}
            _ => return Err(Error::Field("fields skip different samples".into())),
        }
    }
    Ok(worst)
}
