//! Numerical checks of the structural operator identities behind the method:
//! the product rule for Hankel factors, the resolvent identities for
//! `U = (id + Q)^{-1}`, and the Miura map between mKdV and KdV solutions.

use serde::Serialize;

use crate::dispersion::LinearFlow;
use crate::error::{Error, Result};
use crate::fredholm::{assemble_q, hankel_block, kdv_q, solve_g, DiscreteKernel, SolveOptions};
use crate::gridkernel::MatrixProfile;
use crate::linalg::{matmul, max_abs, CMat, Lu, C64};
use crate::quadrature::QuadratureGrid;

/// Smooth non-Hankel kernel `A exp(-((y - c_y)^2 + (z - c_z)^2) / (2 sigma^2))`.
#[derive(Debug, Clone, PartialEq)]
pub struct SmoothKernel {
    pub amplitude: CMat,
    pub center_y: f64,
    pub center_z: f64,
    pub width: f64,
}

impl SmoothKernel {
    pub fn eval(&self, y: f64, z: f64) -> CMat {
        let (u, v) = ((y - self.center_y) / self.width, (z - self.center_z) / self.width);
        &self.amplitude * C64::new((-0.5 * (u * u + v * v)).exp(), 0.0)
    }

    pub fn discretize(&self, quad: &QuadratureGrid) -> DiscreteKernel {
        let n = quad.len();
        let (a, b) = (self.amplitude.nrows(), self.amplitude.ncols());
        let mut m = CMat::zeros(n * a, n * b);
        for (i, &y) in quad.nodes().iter().enumerate() {
            for (j, &z) in quad.nodes().iter().enumerate() {
                m.view_mut((i * a, j * b), (a, b)).copy_from(&self.eval(y, z));
            }
        }
        DiscreteKernel::from_matrix(n, a, b, m).expect("consistent shape")
    }
}

/// Rows of `m` scaled blockwise by the quadrature weights.
fn weigh(m: &CMat, quad: &QuadratureGrid, block: usize) -> CMat {
    let mut out = m.clone();
    for (k, &w) in quad.weights().iter().enumerate() {
        for z in out.rows_mut(k * block, block).iter_mut() {
            *z *= w;
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ProductRuleReport {
    pub lhs_max: f64,
    pub rhs_max: f64,
    pub error: f64,
}

/// Compares `[F d_x(H H') F'](y, z; x)` with `[F H](y, 0; x) [H' F'](0, z; x)`
/// over all node pairs. `d_x` is a centred difference with step `dx`.
pub fn product_rule_check(
    f: &SmoothKernel,
    h: &MatrixProfile,
    h2: &MatrixProfile,
    f2: &SmoothKernel,
    x: f64,
    dx: f64,
    quad: &QuadratureGrid,
) -> Result<ProductRuleReport> {
    let (fa, fb) = (f.amplitude.nrows(), f.amplitude.ncols());
    let (ga, gb) = (f2.amplitude.nrows(), f2.amplitude.ncols());
    if fb != h.rows() || h.cols() != h2.rows() || h2.cols() != ga {
        return Err(Error::Dimension(format!(
            "incompatible factors {fa}x{fb}, {}x{}, {}x{}, {ga}x{gb}",
            h.rows(),
            h.cols(),
            h2.rows(),
            h2.cols()
        )));
    }
    let compose = |x: f64| -> Result<CMat> {
        let a = hankel_block(h, x, quad)?;
        let b = hankel_block(h2, x, quad)?;
        Ok(matmul(a.matrix(), &weigh(b.matrix(), quad, h2.rows())))
    };
    let d = (compose(x + dx)? - compose(x - dx)?) / C64::new(2.0 * dx, 0.0);
    let fm = f.discretize(quad);
    let f2m = f2.discretize(quad);
    let lhs = matmul(
        fm.matrix(),
        &weigh(&matmul(&d, &weigh(f2m.matrix(), quad, ga)), quad, h.rows()),
    );

    let o = quad.origin();
    let hk = hankel_block(h, x, quad)?;
    let h2k = hankel_block(h2, x, quad)?;
    let (hr, hc) = (h.rows(), h.cols());
    let col = hk.matrix().columns(o * hc, hc).into_owned();
    let row = h2k.matrix().rows(o * h2.rows(), h2.rows()).into_owned();
    let left = matmul(fm.matrix(), &weigh(&col, quad, hr));
    let right = matmul(&row, &weigh(f2m.matrix(), quad, ga));
    let rhs = matmul(&left, &right);
    Ok(ProductRuleReport {
        lhs_max: max_abs(&lhs),
        rhs_max: max_abs(&rhs),
        error: max_abs(&(lhs - rhs)),
    })
}

/// `U = (I + W Q)^{-1}` and `W Q`.
fn resolvent(q: &DiscreteKernel, quad: &QuadratureGrid) -> Result<(CMat, CMat)> {
    let (a, b) = q.block_dims();
    if a != b || q.nodes() != quad.len() {
        return Err(Error::Dimension(
            "Q must have square blocks over the quadrature nodes".into(),
        ));
    }
    let m = weigh(q.matrix(), quad, a);
    let dim = m.nrows();
    let id = CMat::identity(dim, dim);
    let lu = Lu::new(&(&id + &m));
    if lu.log_det().is_none() {
        return Err(Error::Singular("id + Q is not invertible".into()));
    }
    let u = lu.solve(&id);
    Ok((u, m))
}

/// Max entry of `id - U - U Q` and `id - U - Q U` for the discretised
/// operator; zero up to rounding.
pub fn u_identity_check(q: &DiscreteKernel, quad: &QuadratureGrid) -> Result<f64> {
    let (u, m) = resolvent(q, quad)?;
    let id = CMat::identity(u.nrows(), u.ncols());
    let a = max_abs(&(&id - &u - matmul(&u, &m)));
    let b = max_abs(&(&id - &u - matmul(&m, &u)));
    Ok(a.max(b))
}

/// Max entry of `d_x U + U (d_x Q) U` with centred differences over
/// `x - dx, x, x + dx`.
pub fn u_derivative_check(
    q_minus: &DiscreteKernel,
    q: &DiscreteKernel,
    q_plus: &DiscreteKernel,
    dx: f64,
    quad: &QuadratureGrid,
) -> Result<f64> {
    let (um, mm) = resolvent(q_minus, quad)?;
    let (u, _) = resolvent(q, quad)?;
    let (up, mp) = resolvent(q_plus, quad)?;
    let scale = C64::new(1.0 / (2.0 * dx), 0.0);
    let du = (up - um) * scale;
    let dm = (mp - mm) * scale;
    Ok(max_abs(&(du + matmul(&matmul(&u, &dm), &u))))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MiuraReport {
    pub max_error: f64,
    pub points: usize,
}

/// `max |d_x g_kdv - d_x g_mkdv - g_mkdv^2|` over interior `xs` at time `t`,
/// where `g_mkdv` uses the companion `-p` and `g_kdv` the identity companion.
/// `xs` must be uniformly spaced; `d_x` is the centred difference.
pub fn miura_check(
    flow: &dyn LinearFlow,
    quad: &QuadratureGrid,
    xs: &[f64],
    t: f64,
    opts: &SolveOptions,
) -> Result<MiuraReport> {
    let p = flow.profile_at(t)?;
    if p.rows() != p.cols() {
        return Err(Error::Dimension("Miura check needs square data".into()));
    }
    let asym = (0..p.grid().len())
        .map(|i| {
            let s = p.sample(i);
            max_abs(&(&s - s.transpose()))
        })
        .fold(0.0, f64::max);
    if asym > 1e-12 * p.max_norm().max(1.0) {
        return Err(Error::InvalidData(format!(
            "Miura check needs matrix-symmetric data, asymmetry {asym:e}"
        )));
    }
    if xs.len() < 3 {
        return Err(Error::Field("Miura check needs at least three x samples".into()));
    }
    let neg = p.scaled(C64::new(-1.0, 0.0));
    let mut mkdv = Vec::with_capacity(xs.len());
    let mut kdv = Vec::with_capacity(xs.len());
    for &x in xs {
        let qm = assemble_q(&p, &neg, x, quad)?;
        mkdv.push(solve_g(&qm, &p, x, quad, opts, false)?.center());
        let qk = kdv_q(&p, x, quad)?;
        kdv.push(solve_g(&qk, &p, x, quad, opts, false)?.center());
    }
    let mut worst = 0.0_f64;
    let mut points = 0;
    for i in 1..xs.len() - 1 {
        let (hl, hr) = (xs[i] - xs[i - 1], xs[i + 1] - xs[i]);
        if (hl - hr).abs() > 1e-9 * hr.abs() {
            return Err(Error::Field("Miura check needs uniformly spaced x samples".into()));
        }
        let s = C64::new(1.0 / (2.0 * hr), 0.0);
        let dk = (&kdv[i + 1] - &kdv[i - 1]) * s;
        let dm = (&mkdv[i + 1] - &mkdv[i - 1]) * s;
        worst = worst.max(max_abs(&(dk - dm - &mkdv[i] * &mkdv[i])));
        points += 1;
    }
    Ok(MiuraReport {
        max_error: worst,
        points,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dispersion::{DispersionParams, ExponentialModeFlow};
    use crate::gridkernel::{sample_profile, InitialDataSpec, MasterGrid};
    use crate::quadrature::make_quadrature;

    fn bump(a: &[f64], rows: usize, cy: f64, cz: f64) -> SmoothKernel {
        SmoothKernel {
            amplitude: CMat::from_row_slice(
                rows,
                a.len() / rows,
                &a.iter().map(|&v| C64::new(v, 0.0)).collect::<Vec<_>>(),
            ),
            center_y: cy,
            center_z: cz,
            width: 1.0,
        }
    }

    #[test]
    fn zero_factor_gives_zero_sides() {
        let g = MasterGrid::new(16.0, 256).unwrap();
        let quad = make_quadrature(6.0, 48, g.spacing()).unwrap();
        let h = sample_profile(&InitialDataSpec::gaussian(&[&[1.0]], 0.8, -2.0), g, 1, 1).unwrap();
        let z = MatrixProfile::zeros(g, 1, 1).unwrap();
        let f = bump(&[1.0], 1, -1.0, -2.0);
        let r = product_rule_check(&f, &h, &z, &f, 0.0, g.spacing(), &quad).unwrap();
        assert_eq!((r.lhs_max, r.rhs_max, r.error), (0.0, 0.0, 0.0));
    }

    #[test]
    fn product_rule_converges() {
        let err = |lev: u32| {
            let hx = 0.1 / 2f64.powi(lev as i32);
            let g = MasterGrid::new(16.0, (32.0 / hx).round() as usize).unwrap();
            let quad = make_quadrature(6.0, (6.0 / hx).round() as usize, hx).unwrap();
            let h = sample_profile(&InitialDataSpec::gaussian(&[&[1.0]], 0.8, -2.0), g, 1, 1).unwrap();
            let h2 = sample_profile(&InitialDataSpec::gaussian(&[&[0.6]], 1.1, -1.5), g, 1, 1).unwrap();
            let f = bump(&[1.0], 1, -1.0, -2.0);
            let f2 = bump(&[0.5], 1, -2.5, -0.5);
            product_rule_check(&f, &h, &h2, &f2, 0.0, hx, &quad).unwrap().error
        };
        let (a, b) = (err(0), err(1));
        assert!((3.0..5.0).contains(&(a / b)), "{a} {b}");
    }

    #[test]
    fn resolvent_identities() {
        let g = MasterGrid::new(20.0, 400).unwrap();
        let quad = make_quadrature(8.0, 80, g.spacing()).unwrap();
        let p = sample_profile(&InitialDataSpec::exponential(&[&[1.0]], 1.0), g, 1, 1).unwrap();
        let q = assemble_q(&p, &p, 0.0, &quad).unwrap();
        assert!(u_identity_check(&q, &quad).unwrap() < 1e-12);
        let zero = DiscreteKernel::zeros(quad.len(), 1, 1);
        assert_eq!(u_identity_check(&zero, &quad).unwrap(), 0.0);
        let d = |dx: f64| {
            let k = (dx / g.spacing()).round();
            let qs: Vec<_> = [-k, 0.0, k]
                .iter()
                .map(|&j| assemble_q(&p, &p, j * g.spacing(), &quad).unwrap())
                .collect();
            u_derivative_check(&qs[0], &qs[1], &qs[2], k * g.spacing(), &quad).unwrap()
        };
        let (a, b) = (d(0.4), d(0.2));
        assert!((3.0..5.0).contains(&(a / b)), "{a} {b}");
    }

    #[test]
    fn miura_holds_for_scalar_exponential() {
        let g = MasterGrid::new(20.0, 400).unwrap();
        let quad = make_quadrature(8.0, 80, g.spacing()).unwrap();
        let p0 = sample_profile(&InitialDataSpec::exponential(&[&[-0.5]], 1.0), g, 1, 1).unwrap();
        let flow = ExponentialModeFlow::new(p0, 1.0, DispersionParams::new(C64::new(0.0, 0.0), C64::new(-1.0, 0.0)));
        let err = |dx: f64| {
            let xs: Vec<f64> = (-1..=1).map(|k| k as f64 * dx).collect();
            miura_check(&flow, &quad, &xs, 0.2, &SolveOptions::default())
                .unwrap()
                .max_error
        };
        let (a, b) = (err(0.2), err(0.1));
        assert!((3.0..5.0).contains(&(a / b)), "{a} {b}");
    }
}
