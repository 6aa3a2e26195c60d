//! Nyström discretisation of `P = G (id + Q)` on the half-line.
//!
//! A two-argument kernel is stored as one dense block matrix whose block
//! `(i, j)` is the kernel at `(xi_i, xi_j)`. Composition of kernels `F` and
//! `H` is `F W H` with `W` the quadrature weights on the block diagonal.
//! The unknown `g` multiplies `(id + Q)` from the right, so each solve is
//! `A^T g^T = p^T` with `A = I + W Q`. Only the block row of `g` at `y = 0`
//! is solved for, plus the block column at `z = 0` when slices are wanted,
//! both from one factorisation of `A`.

use rayon::prelude::*;
use serde::Serialize;

use crate::companion::{companion_at, CompanionKind};
use crate::dispersion::LinearFlow;
use crate::error::{Error, Result};
use crate::field::{Sample, SolutionField};
use crate::gridkernel::MatrixProfile;
use crate::linalg::{matmul, max_abs, CMat, Lu, C64};
use crate::quadrature::QuadratureGrid;

pub const DEFAULT_PATCH_THRESHOLD: f64 = 1e-8;
pub const DEFAULT_SOLVER_TOL: f64 = 1e-10;

/// Block matrix over quadrature node pairs, blocks of size `block_rows x block_cols`.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteKernel {
    nodes: usize,
    block_rows: usize,
    block_cols: usize,
    data: CMat,
}

impl DiscreteKernel {
    pub fn zeros(nodes: usize, block_rows: usize, block_cols: usize) -> Self {
        Self {
            nodes,
            block_rows,
            block_cols,
            data: CMat::zeros(nodes * block_rows, nodes * block_cols),
        }
    }

    pub fn from_matrix(nodes: usize, block_rows: usize, block_cols: usize, data: CMat) -> Result<Self> {
        if data.nrows() != nodes * block_rows || data.ncols() != nodes * block_cols {
            return Err(Error::Dimension(format!(
                "{}x{} matrix does not hold {nodes}x{nodes} blocks of {block_rows}x{block_cols}",
                data.nrows(),
                data.ncols()
            )));
        }
        Ok(Self {
            nodes,
            block_rows,
            block_cols,
            data,
        })
    }

    pub fn nodes(&self) -> usize {
        self.nodes
    }

    pub fn block_dims(&self) -> (usize, usize) {
        (self.block_rows, self.block_cols)
    }

    pub fn matrix(&self) -> &CMat {
        &self.data
    }

    pub fn into_matrix(self) -> CMat {
        self.data
    }

    pub fn block(&self, i: usize, j: usize) -> CMat {
        self.data
            .view(
                (i * self.block_rows, j * self.block_cols),
                (self.block_rows, self.block_cols),
            )
            .into_owned()
    }

    pub fn max_abs(&self) -> f64 {
        max_abs(&self.data)
    }

    pub fn is_finite(&self) -> bool {
        crate::linalg::is_finite(&self.data)
    }

    /// Largest difference between blocks sharing the same `i + j`.
    pub fn hankel_defect(&self) -> f64 {
        let n = self.nodes;
        let mut worst = 0.0_f64;
        for i in 0..n {
            for j in 0..n {
                let (a, b) = if i + j < n {
                    (0, i + j)
                } else {
                    (i + j - (n - 1), n - 1)
                };
                worst = worst.max(max_abs(&(self.block(i, j) - self.block(a, b))));
            }
        }
        worst
    }

    /// Scales block row `k` by `w_k`.
    fn weighted_rows(&self, w: &[f64]) -> CMat {
        let mut out = self.data.clone();
        for (k, &wk) in w.iter().enumerate() {
            for z in out.rows_mut(k * self.block_rows, self.block_rows).iter_mut() {
                *z *= wk;
            }
        }
        out
    }
}

/// Master-grid index of `xi_0 + xi_0 + x = x - 2L` and the node stride,
/// after checking every sum `xi_i + xi_j + x` is a master node.
fn hankel_layout(p: &MatrixProfile, x: f64, quad: &QuadratureGrid) -> Result<(usize, usize)> {
    let grid = p.grid();
    let stride = quad.stride();
    if (quad.spacing() - stride as f64 * grid.spacing()).abs() > 1e-9 * quad.spacing() {
        return Err(Error::InvalidGrid(format!(
            "quadrature spacing {} is not commensurate with master spacing {}",
            quad.spacing(),
            grid.spacing()
        )));
    }
    let lo = x - 2.0 * quad.length();
    let base = grid.index_of(lo).map_err(|e| match e {
        Error::OutOfDomain { .. } => Error::OutOfDomain {
            s: lo,
            lo: -grid.half_width(),
            hi: grid.half_width(),
        },
        other => other,
    })?;
    let last = base + 2 * quad.intervals() * stride;
    if last >= grid.len() {
        return Err(Error::OutOfDomain {
            s: x,
            lo: -grid.half_width(),
            hi: grid.half_width(),
        });
    }
    Ok((base, stride))
}

/// `K[i][j] = p(xi_i + xi_j + x)`.
pub fn hankel_block(p: &MatrixProfile, x: f64, quad: &QuadratureGrid) -> Result<DiscreteKernel> {
    let (base, stride) = hankel_layout(p, x, quad)?;
    let n = quad.len();
    let (a, b) = (p.rows(), p.cols());
    let mut data = CMat::zeros(n * a, n * b);
    for i in 0..n {
        for j in 0..n {
            let node = base + (i + j) * stride;
            for r in 0..a {
                for c in 0..b {
                    data[(i * a + r, j * b + c)] = p.entry(node, r, c);
                }
            }
        }
    }
    Ok(DiscreteKernel {
        nodes: n,
        block_rows: a,
        block_cols: b,
        data,
    })
}

/// `Q[i][j] = sum_k w_k p~(xi_i + xi_k + x) p(xi_k + xi_j + x)`.
pub fn assemble_q(p: &MatrixProfile, p_tilde: &MatrixProfile, x: f64, quad: &QuadratureGrid) -> Result<DiscreteKernel> {
    if p_tilde.rows() != p.cols() || p_tilde.cols() != p.rows() {
        return Err(Error::Dimension(format!(
            "companion is {}x{}, expected {}x{}",
            p_tilde.rows(),
            p_tilde.cols(),
            p.cols(),
            p.rows()
        )));
    }
    let h = hankel_block(p, x, quad)?;
    let ht = hankel_block(p_tilde, x, quad)?;
    let wh = h.weighted_rows(quad.weights());
    Ok(DiscreteKernel {
        nodes: quad.len(),
        block_rows: p.cols(),
        block_cols: p.cols(),
        data: matmul(&ht.data, &wh),
    })
}

/// `Q[i][j] = -p(xi_i + xi_j + x)`, the kernel for the identity companion.
pub fn kdv_q(p: &MatrixProfile, x: f64, quad: &QuadratureGrid) -> Result<DiscreteKernel> {
    if p.rows() != p.cols() {
        return Err(Error::Dimension(format!(
            "identity companion needs square data, got {}x{}",
            p.rows(),
            p.cols()
        )));
    }
    let mut h = hankel_block(p, x, quad)?;
    h.data.neg_mut();
    Ok(h)
}

/// `A = I + W Q`.
fn system_matrix(q: &DiscreteKernel, quad: &QuadratureGrid) -> Result<CMat> {
    if q.block_rows != q.block_cols || q.nodes != quad.len() {
        return Err(Error::Dimension(
            "Q must have square blocks over the quadrature nodes".into(),
        ));
    }
    let mut a = q.weighted_rows(quad.weights());
    for d in 0..a.nrows() {
        a[(d, d)] += C64::new(1.0, 0.0);
    }
    Ok(a)
}

fn det2_from(lu: &Lu, a: &CMat) -> C64 {
    // trace(W Q) = trace(A) - dim
    let tr = a.trace() - C64::new(a.nrows() as f64, 0.0);
    match lu.log_det() {
        Some(ld) => {
            let v = (ld - tr).exp();
            if v.re.is_finite() && v.im.is_finite() {
                v
            } else {
                C64::new(0.0, 0.0)
            }
        }
        None => C64::new(0.0, 0.0),
    }
}

/// `det((I + W Q) e^{-W Q}) = exp(log det(I + W Q) - tr(W Q))`; zero when the
/// factorisation breaks down.
pub fn det2(q: &DiscreteKernel, quad: &QuadratureGrid) -> Result<C64> {
    let a = system_matrix(q, quad)?;
    let lu = Lu::new(&a);
    Ok(det2_from(&lu, &a))
}

/// Solved kernel with its diagnostics.
#[derive(Debug, Clone)]
pub struct FredholmSolution {
    nodes: usize,
    block_rows: usize,
    block_cols: usize,
    /// Block row of `g` at `y = 0`, i.e. `g(0, xi_j)` side by side.
    row: CMat,
    /// Block column of `g` at `z = 0` when requested.
    col: Option<CMat>,
    pub det2: C64,
    /// `|g A - p|_inf / (|g|_inf |A|_inf + |p|_inf)` over the solved blocks.
    pub backward_error: f64,
}

impl FredholmSolution {
    pub fn center(&self) -> CMat {
        let o = self.nodes - 1;
        self.row.columns(o * self.block_cols, self.block_cols).into_owned()
    }

    /// `g(xi_i, 0)` for every node; `None` unless solved with slices.
    pub fn y_slice(&self) -> Option<Vec<CMat>> {
        let col = self.col.as_ref()?;
        Some(
            (0..self.nodes)
                .map(|i| col.rows(i * self.block_rows, self.block_rows).into_owned())
                .collect(),
        )
    }

    /// `g(0, xi_j)` for every node.
    pub fn z_slice(&self) -> Vec<CMat> {
        (0..self.nodes)
            .map(|j| self.row.columns(j * self.block_cols, self.block_cols).into_owned())
            .collect()
    }
}

fn inf_norm(m: &CMat) -> f64 {
    m.row_iter()
        .map(|r| r.iter().map(|z| z.norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

fn relative_residual(resid: &CMat, x: &CMat, a: f64, b: &CMat) -> f64 {
    let denom = inf_norm(x) * a + inf_norm(b);
    if denom > 0.0 {
        inf_norm(resid) / denom
    } else {
        0.0
    }
}

/// Tolerances for one Fredholm solve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SolveOptions {
    pub patch_threshold: f64,
    pub solver_tol: f64,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            patch_threshold: DEFAULT_PATCH_THRESHOLD,
            solver_tol: DEFAULT_SOLVER_TOL,
        }
    }
}

/// Solves `g (id + Q) = p(. + . + x)` on the quadrature nodes for the block
/// row at `y = 0` and, with `slices`, the block column at `z = 0`.
///
/// Fails with [`Error::Patch`] when `|det2| < patch_threshold` and with
/// [`Error::Singular`] when the backward error exceeds `solver_tol`.
pub fn solve_g(
    q: &DiscreteKernel,
    p: &MatrixProfile,
    x: f64,
    quad: &QuadratureGrid,
    opts: &SolveOptions,
    slices: bool,
) -> Result<FredholmSolution> {
    let rhs = hankel_block(p, x, quad)?;
    if q.block_rows != rhs.block_cols {
        return Err(Error::Dimension(format!(
            "Q blocks are {}x{}, data has {} columns",
            q.block_rows, q.block_cols, rhs.block_cols
        )));
    }
    let (n, ra, cb) = (rhs.nodes, rhs.block_rows, rhs.block_cols);
    let o = n - 1;
    let a = system_matrix(q, quad)?;
    let lu = Lu::new(&a);
    let d2 = det2_from(&lu, &a);
    if !(d2.norm() >= opts.patch_threshold) {
        return Err(Error::Patch {
            det2: d2,
            x,
            t: p.time(),
            threshold: opts.patch_threshold,
        });
    }
    let a_norm = inf_norm(&a);

    // g_o A = p_o, i.e. A^T g_o^T = p_o^T
    let p_row = rhs.data.rows(o * ra, ra).into_owned();
    let row = lu.solve_transpose(&p_row.transpose()).transpose();
    let mut backward_error = relative_residual(&(&row * &a - &p_row), &row, a_norm, &p_row);

    // g e_o = p A^{-1} e_o
    let col = if slices {
        let mut e = CMat::zeros(a.nrows(), cb);
        for c in 0..cb {
            e[(o * cb + c, c)] = C64::new(1.0, 0.0);
        }
        let u = lu.solve(&e);
        backward_error = backward_error.max(relative_residual(&(&a * &u - &e), &u, a_norm, &e));
        Some(matmul(&rhs.data, &u))
    } else {
        None
    };

    if !(backward_error <= opts.solver_tol) {
        return Err(Error::Singular(format!(
            "backward error {backward_error:e} exceeds {:e} at x = {x}, t = {}",
            opts.solver_tol,
            p.time()
        )));
    }
    Ok(FredholmSolution {
        nodes: n,
        block_rows: ra,
        block_cols: cb,
        row,
        col,
        det2: d2,
        backward_error,
    })
}

/// One `det2` value in a [`PatchReport`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PatchEntry {
    pub x: f64,
    pub t: f64,
    pub det2: C64,
    /// Sample dropped because `|det2|` fell below the threshold.
    pub skipped: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PatchReport {
    pub threshold: f64,
    pub entries: Vec<PatchEntry>,
}

impl PatchReport {
    pub fn min_modulus(&self) -> f64 {
        self.entries.iter().map(|e| e.det2.norm()).fold(f64::INFINITY, f64::min)
    }

    pub fn skipped(&self) -> impl Iterator<Item = &PatchEntry> {
        self.entries.iter().filter(|e| e.skipped)
    }

    pub fn any_skipped(&self) -> bool {
        self.skipped().next().is_some()
    }

    /// Number of sign changes of `Re det2` between consecutive `x` samples at
    /// equal `t`: a real determinant passing through zero between nodes.
    pub fn sign_changes(&self) -> usize {
        self.entries
            .windows(2)
            .filter(|w| w[0].t == w[1].t && w[0].det2.re * w[1].det2.re < 0.0)
            .count()
    }
}

/// Everything needed to evaluate `g` at arbitrary `(x, t)`.
pub struct Problem {
    pub flow: Box<dyn LinearFlow>,
    pub companion: CompanionKind,
    pub quad: QuadratureGrid,
    pub record_slices: bool,
    /// Also solve `p~ = g~ (id + Q~)` with `Q~ = p p~` for `g~(0,0)`.
    pub record_companion: bool,
    pub options: SolveOptions,
}

impl Problem {
    pub fn new(flow: Box<dyn LinearFlow>, companion: CompanionKind, quad: QuadratureGrid) -> Self {
        Self {
            flow,
            companion,
            quad,
            record_slices: false,
            record_companion: false,
            options: SolveOptions::default(),
        }
    }

    pub fn rows(&self) -> usize {
        self.flow.initial().rows()
    }

    pub fn cols(&self) -> usize {
        self.flow.initial().cols()
    }

    /// Dense system dimension `(N + 1) m`.
    pub fn system_size(&self) -> usize {
        let block = if self.companion.is_identity() {
            self.rows()
        } else {
            self.cols()
        };
        self.quad.len() * block
    }

    fn profiles(&self, t: f64) -> Result<(MatrixProfile, Option<MatrixProfile>)> {
        let p = self.flow.profile_at(t)?;
        if self.companion.is_identity() {
            return Ok((p, None));
        }
        let pt = if self.companion.reverses_time() {
            companion_at(self.flow.as_ref(), self.companion, t)?
        } else {
            crate::companion::companion_profile(&p, self.companion)?
        };
        Ok((p, Some(pt)))
    }

    fn sample_at(&self, p: &MatrixProfile, pt: Option<&MatrixProfile>, x: f64) -> Result<Sample> {
        let q = match pt {
            Some(pt) => assemble_q(p, pt, x, &self.quad)?,
            None => kdv_q(p, x, &self.quad)?,
        };
        let sol = solve_g(&q, p, x, &self.quad, &self.options, self.record_slices)?;
        let companion = match (self.record_companion, pt) {
            (true, Some(pt)) => {
                let qt = assemble_q(pt, p, x, &self.quad)?;
                Some(solve_g(&qt, pt, x, &self.quad, &self.options, false)?.center())
            }
            _ => None,
        };
        Ok(Sample {
            center: sol.center(),
            y_slice: sol.y_slice(),
            z_slice: self.record_slices.then(|| sol.z_slice()),
            companion,
            det2: sol.det2,
        })
    }

    /// The discrete kernel `Q(x, t)` of the primary solve.
    pub fn kernel_at(&self, x: f64, t: f64) -> Result<DiscreteKernel> {
        let (p, pt) = self.profiles(t)?;
        match pt {
            Some(pt) => assemble_q(&p, &pt, x, &self.quad),
            None => kdv_q(&p, x, &self.quad),
        }
    }

    /// Solves at one point, without the patch bookkeeping.
    pub fn solve_at(&self, x: f64, t: f64) -> Result<Sample> {
        let (p, pt) = self.profiles(t)?;
        self.sample_at(&p, pt.as_ref(), x)
    }
}

/// Evaluates the field on `xs x ts` (both sorted). Samples whose `|det2|`
/// falls below the threshold are skipped and recorded in the report; every
/// other error aborts the evaluation. Output order is independent of the
/// thread count.
pub fn evaluate_solution(problem: &Problem, xs: &[f64], ts: &[f64]) -> Result<(SolutionField, PatchReport)> {
    let profiles: Vec<(MatrixProfile, Option<MatrixProfile>)> =
        ts.par_iter().map(|&t| problem.profiles(t)).collect::<Result<_>>()?;
    let points: Vec<(usize, f64, f64)> = ts
        .iter()
        .enumerate()
        .flat_map(|(k, &t)| xs.iter().map(move |&x| (k, x, t)))
        .collect();
    let results: Vec<Result<Sample>> = points
        .par_iter()
        .map(|&(k, x, _)| {
            let (p, pt) = &profiles[k];
            problem.sample_at(p, pt.as_ref(), x)
        })
        .collect();
    let mut samples = Vec::with_capacity(results.len());
    let mut entries = Vec::with_capacity(results.len());
    for (&(_, x, t), r) in points.iter().zip(results) {
        match r {
            Ok(s) => {
                entries.push(PatchEntry {
                    x,
                    t,
                    det2: s.det2,
                    skipped: false,
                });
                samples.push(Some(s));
            }
            Err(Error::Patch { det2, .. }) => {
                log::warn!("poor coordinate patch at x = {x}, t = {t}: |det2| = {:e}", det2.norm());
                entries.push(PatchEntry {
                    x,
                    t,
                    det2,
                    skipped: true,
                });
                samples.push(None);
            }
            Err(e) => return Err(e),
        }
    }
    let quad_nodes = if problem.record_slices {
        problem.quad.nodes().to_vec()
    } else {
        Vec::new()
    };
    let (rows, cols) = (problem.rows(), problem.cols());
    let field = SolutionField::new(xs.to_vec(), ts.to_vec(), rows, cols, quad_nodes, samples)?;
    Ok((
        field,
        PatchReport {
            threshold: problem.options.patch_threshold,
            entries,
        },
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gridkernel::{sample_profile, InitialDataSpec, MasterGrid};
    use crate::quadrature::make_quadrature;
    use approx::assert_relative_eq;

    fn exp_profile(g: MasterGrid, a: f64) -> MatrixProfile {
        sample_profile(&InitialDataSpec::exponential(&[&[a]], 1.0), g, 1, 1).unwrap()
    }

    #[test]
    fn zero_q_gives_identity_system() {
        let g = MasterGrid::new(4.0, 64).unwrap();
        let quad = make_quadrature(1.0, 8, g.spacing()).unwrap();
        let p = exp_profile(g, 1.0);
        let q = DiscreteKernel::zeros(quad.len(), 1, 1);
        assert_eq!(det2(&q, &quad).unwrap(), C64::new(1.0, 0.0));
        let sol = solve_g(&q, &p, 0.0, &quad, &SolveOptions::default(), true).unwrap();
        let h = hankel_block(&p, 0.0, &quad).unwrap();
        let o = quad.len() - 1;
        for k in 0..quad.len() {
            assert_eq!(sol.y_slice().unwrap()[k], h.block(k, o));
            assert_eq!(sol.z_slice()[k], h.block(o, k));
        }
    }

    #[test]
    fn kdv_kernel_flips_sign_and_is_hankel() {
        let g = MasterGrid::new(4.0, 64).unwrap();
        let quad = make_quadrature(1.0, 8, g.spacing()).unwrap();
        let q = kdv_q(&exp_profile(g, -1.0), 0.0, &quad).unwrap();
        assert_relative_eq!(q.block(8, 8)[(0, 0)].re, 1.0);
        for i in 0..quad.len() {
            for j in 0..quad.len() {
                assert_eq!(q.block(i, j), q.block(j, i));
            }
        }
        assert_eq!(q.hankel_defect(), 0.0);
    }

    #[test]
    fn rank_one_nls_values() {
        let g = MasterGrid::new(40.0, 2048).unwrap();
        let quad = make_quadrature(10.0, 256, g.spacing()).unwrap();
        let p = exp_profile(g, 1.0);
        let q = assemble_q(&p, &p, 0.0, &quad).unwrap();
        // trapezoid: relative error h^2/3
        assert_relative_eq!(
            q.block(quad.origin(), quad.origin())[(0, 0)].re,
            0.5,
            max_relative = 1e-3
        );
        let sol = solve_g(&q, &p, 0.0, &quad, &SolveOptions::default(), false).unwrap();
        assert_relative_eq!(sol.center()[(0, 0)].re, 0.8, max_relative = 1e-3);
        let lambda = 0.25_f64;
        assert_relative_eq!(sol.det2.re, (1.0 + lambda) * (-lambda).exp(), max_relative = 1e-3);
        assert!(sol.backward_error < 1e-13);
    }

    #[test]
    fn domain_overflow_is_reported() {
        let g = MasterGrid::new(4.0, 64).unwrap();
        let quad = make_quadrature(3.0, 8, g.spacing()).unwrap();
        let p = exp_profile(g, 1.0);
        assert!(matches!(hankel_block(&p, 0.0, &quad), Err(Error::OutOfDomain { .. })));
        let quad = make_quadrature(1.0, 8, g.spacing()).unwrap();
        assert!(hankel_block(&p, 4.0, &quad).is_err());
        assert!(matches!(hankel_block(&p, 0.01, &quad), Err(Error::OffGrid { .. })));
    }

    #[test]
    fn non_square_kdv_rejected() {
        let g = MasterGrid::new(4.0, 64).unwrap();
        let quad = make_quadrature(1.0, 8, g.spacing()).unwrap();
        let p = MatrixProfile::zeros(g, 1, 2).unwrap();
        assert!(matches!(kdv_q(&p, 0.0, &quad), Err(Error::Dimension(_))));
    }

    #[test]
    fn patch_report_counts() {
        let e = |x: f64, re: f64, skipped| PatchEntry {
            x,
            t: 0.0,
            det2: C64::new(re, 0.0),
            skipped,
        };
        let r = PatchReport {
            threshold: 1e-8,
            entries: vec![e(0.0, 0.5, false), e(0.1, 1e-12, true), e(0.2, -0.3, false)],
        };
        assert_eq!(r.min_modulus(), 1e-12);
        assert!(r.any_skipped());
        assert_eq!(r.sign_changes(), 1);
    }
}
