//! Companion symbols `p~` built from the evolved `p`, one per equation family.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::dispersion::{dispersion_residual, DispersionParams, LinearFlow, SpectralFlow};
use crate::error::{Error, Result};
use crate::gridkernel::MatrixProfile;
use crate::linalg::{CMat, C64};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CompanionKind {
    /// `p~ = p^dagger`
    Adjoint,
    /// `p~ = -p^dagger`
    NegAdjoint,
    /// `p~(s; t) = p^T(-s; -t)`
    TransposeRevSpacetime,
    /// `p~(s; t) = p^T(s; -t)`
    TransposeRevTime,
    /// `p~ = -p^T`
    NegTranspose,
    /// `p~(s; t) = -p^T(-s; -t)`
    NegTransposeRevSpacetime,
    /// `p~(s; t) = -p^dagger(-s; -t)`
    NegAdjointRevSpacetime,
    /// `P~ = -id`; no profile, the Fredholm stage uses `Q = -P`.
    NegIdentity,
}

impl CompanionKind {
    pub const ALL: [CompanionKind; 8] = [
        CompanionKind::Adjoint,
        CompanionKind::NegAdjoint,
        CompanionKind::TransposeRevSpacetime,
        CompanionKind::TransposeRevTime,
        CompanionKind::NegTranspose,
        CompanionKind::NegTransposeRevSpacetime,
        CompanionKind::NegAdjointRevSpacetime,
        CompanionKind::NegIdentity,
    ];

    pub fn name(self) -> &'static str {
        match self {
            CompanionKind::Adjoint => "adjoint",
            CompanionKind::NegAdjoint => "neg_adjoint",
            CompanionKind::TransposeRevSpacetime => "transpose_rev_spacetime",
            CompanionKind::TransposeRevTime => "transpose_rev_time",
            CompanionKind::NegTranspose => "neg_transpose",
            CompanionKind::NegTransposeRevSpacetime => "neg_transpose_rev_spacetime",
            CompanionKind::NegAdjointRevSpacetime => "neg_adjoint_rev_spacetime",
            CompanionKind::NegIdentity => "neg_identity",
        }
    }

    pub fn sign(self) -> f64 {
        match self {
            CompanionKind::Adjoint | CompanionKind::TransposeRevSpacetime | CompanionKind::TransposeRevTime => 1.0,
            _ => -1.0,
        }
    }

    /// Whether the matrix part is conjugated as well as transposed.
    pub fn conjugates(self) -> bool {
        matches!(
            self,
            CompanionKind::Adjoint | CompanionKind::NegAdjoint | CompanionKind::NegAdjointRevSpacetime
        )
    }

    pub fn reverses_time(self) -> bool {
        matches!(
            self,
            CompanionKind::TransposeRevSpacetime
                | CompanionKind::TransposeRevTime
                | CompanionKind::NegTransposeRevSpacetime
                | CompanionKind::NegAdjointRevSpacetime
        )
    }

    pub fn reverses_space(self) -> bool {
        matches!(
            self,
            CompanionKind::TransposeRevSpacetime
                | CompanionKind::NegTransposeRevSpacetime
                | CompanionKind::NegAdjointRevSpacetime
        )
    }

    pub fn is_identity(self) -> bool {
        self == CompanionKind::NegIdentity
    }

    /// Time at which `p` must be evaluated to build `p~(t)`.
    pub fn source_time(self, t: f64) -> f64 {
        if self.reverses_time() {
            -t
        } else {
            t
        }
    }

    /// Checks that `p~` built from a solution of the `params` flow solves the
    /// companion flow with parameters `(-mu1, mu2)`.
    pub fn check_parameters(self, params: &DispersionParams) -> Result<()> {
        let (mu1, mu2) = (params.mu1, params.mu2);
        let ok = match self {
            CompanionKind::Adjoint | CompanionKind::NegAdjoint => mu1.re == 0.0 && mu2.im == 0.0,
            CompanionKind::NegTranspose => mu1 == C64::new(0.0, 0.0),
            CompanionKind::TransposeRevTime => mu2 == C64::new(0.0, 0.0),
            CompanionKind::TransposeRevSpacetime | CompanionKind::NegTransposeRevSpacetime => true,
            CompanionKind::NegAdjointRevSpacetime => mu1.im == 0.0 && mu2.im == 0.0,
            CompanionKind::NegIdentity => mu1 == C64::new(0.0, 0.0),
        };
        if ok {
            Ok(())
        } else {
            Err(Error::Companion(format!(
                "companion {} is inconsistent with mu1 = {mu1}, mu2 = {mu2}",
                self.name()
            )))
        }
    }

    /// How `g~(0,0; x, t)` is expressed through `g(0,0)` when the companion
    /// operator is a symmetry image of `P`.
    pub fn observable_relation(self) -> Option<ObservableRelation> {
        if self.is_identity() {
            return None;
        }
        Some(ObservableRelation {
            sign: self.sign(),
            conjugate: self.conjugates(),
            reflect_x: self.reverses_space(),
            reflect_t: self.reverses_time(),
        })
    }
}

impl fmt::Display for CompanionKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for CompanionKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        CompanionKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::Companion(format!("unknown companion kind '{s}'")))
    }
}

/// `g~(0,0; x, t) = sign * op(g(0,0; +-x, +-t))` where `op` is transpose or
/// conjugate transpose.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ObservableRelation {
    pub sign: f64,
    pub conjugate: bool,
    pub reflect_x: bool,
    pub reflect_t: bool,
}

impl ObservableRelation {
    pub fn source(&self, x: f64, t: f64) -> (f64, f64) {
        (if self.reflect_x { -x } else { x }, if self.reflect_t { -t } else { t })
    }

    pub fn apply(&self, g: &CMat) -> CMat {
        let m = if self.conjugate { g.adjoint() } else { g.transpose() };
        m * C64::new(self.sign, 0.0)
    }
}

/// `p~` from `p` sampled at the kind's source time (`t`, or `-t` for
/// reversed-time kinds). The result carries the companion's own time stamp.
pub fn companion_profile(p_source: &MatrixProfile, kind: CompanionKind) -> Result<MatrixProfile> {
    if kind.is_identity() {
        return Err(Error::Companion(
            "neg_identity has no companion profile; use the identity-companion kernel".into(),
        ));
    }
    let sign = C64::new(kind.sign(), 0.0);
    let conj = kind.conjugates();
    let base = if kind.reverses_space() {
        p_source.reflected()
    } else {
        p_source.clone()
    };
    let out = base.map_samples(p_source.cols(), p_source.rows(), |m| {
        let t = if conj { m.adjoint() } else { m.transpose() };
        t * sign
    });
    let time = if kind.reverses_time() {
        -p_source.time()
    } else {
        p_source.time()
    };
    Ok(out.with_time(time))
}

/// `p~(t)` evaluated from a flow of `p`.
pub fn companion_at(flow: &dyn LinearFlow, kind: CompanionKind, t: f64) -> Result<MatrixProfile> {
    companion_profile(&flow.profile_at(kind.source_time(t))?, kind)
}

/// `(mu1~, mu2~) = (-mu1, mu2)`.
pub fn companion_parameters(_kind: CompanionKind, params: &DispersionParams) -> DispersionParams {
    DispersionParams::new(-params.mu1, params.mu2)
}

/// Finite-difference residual of the companion flow for `p~` built from the
/// evolved `p0` at each of `t_samples`. Small values certify that the kind
/// and parameters are paired consistently.
pub fn companion_consistency_residual(
    p0: &MatrixProfile,
    kind: CompanionKind,
    params: &DispersionParams,
    t_samples: &[f64],
) -> Result<f64> {
    if t_samples.len() < 3 {
        return Err(Error::TooFewSnapshots {
            needed: 3,
            got: t_samples.len(),
        });
    }
    let flow = SpectralFlow::new(p0.clone(), *params);
    let snaps = t_samples
        .iter()
        .map(|&t| companion_at(&flow, kind, t).map(|p| p.with_time(t)))
        .collect::<Result<Vec<_>>>()?;
    dispersion_residual(&snaps, &companion_parameters(kind, params))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gridkernel::{sample_profile, InitialDataSpec, MasterGrid};
    use crate::linalg::I;
    use approx::assert_relative_eq;

    fn grid() -> MasterGrid {
        MasterGrid::new(8.0, 128).unwrap()
    }

    #[test]
    fn names_round_trip() {
        for k in CompanionKind::ALL {
            assert_eq!(k.name().parse::<CompanionKind>().unwrap(), k);
            let json = serde_json::to_string(&k).unwrap();
            assert_eq!(json, format!("\"{}\"", k.name()));
        }
        assert!("adjoint_ish".parse::<CompanionKind>().is_err());
    }

    #[test]
    fn adjoint_of_real_scalar_is_identity() {
        let p = sample_profile(&InitialDataSpec::gaussian(&[&[0.7]], 1.0, -0.5), grid(), 1, 1).unwrap();
        assert_eq!(companion_profile(&p, CompanionKind::Adjoint).unwrap(), p);
        // transpose kinds without reflection coincide for real scalars
        let r = companion_profile(&p, CompanionKind::TransposeRevTime).unwrap();
        assert_eq!(r.raw(), p.raw());
    }

    #[test]
    fn neg_transpose_of_nilpotent() {
        let g = grid();
        let p = MatrixProfile::from_fn(g, 2, 2, |s| {
            CMat::from_row_slice(2, 2, &[0.0, s.exp(), 0.0, 0.0].map(|v| C64::new(v, 0.0)))
        })
        .unwrap();
        let q = companion_profile(&p, CompanionKind::NegTranspose).unwrap();
        let i = g.index_of(-1.0).unwrap();
        let m = q.sample(i);
        assert_eq!(m[(1, 0)].re, -(-1.0f64).exp());
        assert_eq!(m[(0, 1)].re, 0.0);
    }

    #[test]
    fn rev_spacetime_substitutes_reflected_arguments() {
        // p(s; t) = e^{s - t}  =>  p~(s; t) = p(-s; -t) = e^{-s + t}
        let g = grid();
        let t = 0.3;
        let p_at_minus_t = MatrixProfile::from_fn(g, 1, 1, |s| CMat::from_element(1, 1, C64::new((s + t).exp(), 0.0)))
            .unwrap()
            .with_time(-t);
        let q = companion_profile(&p_at_minus_t, CompanionKind::TransposeRevSpacetime).unwrap();
        assert_relative_eq!(q.time(), t);
        for s in [-2.0, -0.5, 0.0, 1.25] {
            assert_relative_eq!(q.eval_at(s).unwrap()[(0, 0)].re, (-s + t).exp(), max_relative = 1e-14);
        }
    }

    #[test]
    fn adjoint_twice_recovers_profile() {
        let spec = InitialDataSpec::Gaussian {
            amplitude: vec![vec![0.3, 1.0], vec![-0.2, 0.5]],
            amplitude_im: Some(vec![vec![0.1, 0.0], vec![0.7, -0.4]]),
            width: 0.9,
            center: 0.2,
        };
        let p = sample_profile(&spec, grid(), 2, 2).unwrap();
        for kind in [CompanionKind::Adjoint, CompanionKind::NegAdjoint] {
            let twice = companion_profile(&companion_profile(&p, kind).unwrap(), kind).unwrap();
            assert_eq!(twice, p);
        }
    }

    #[test]
    fn neg_identity_has_no_profile() {
        let p = MatrixProfile::zeros(grid(), 1, 1).unwrap();
        assert!(matches!(
            companion_profile(&p, CompanionKind::NegIdentity),
            Err(Error::Companion(_))
        ));
    }

    #[test]
    fn parameter_map() {
        let z = C64::new(0.0, 0.0);
        let nls = companion_parameters(CompanionKind::Adjoint, &DispersionParams::new(-I, z));
        assert_eq!((nls.mu1, nls.mu2), (I, z));
        let mkdv = DispersionParams::new(z, C64::new(-1.0, 0.0));
        let out = companion_parameters(CompanionKind::NegTranspose, &mkdv);
        assert_eq!((out.mu1, out.mu2), (z, C64::new(-1.0, 0.0)));
        let heat = companion_parameters(
            CompanionKind::TransposeRevTime,
            &DispersionParams::new(C64::new(1.0, 0.0), z),
        );
        assert_eq!((heat.mu1, heat.mu2), (C64::new(-1.0, 0.0), z));
    }

    #[test]
    fn consistency_residuals_are_second_order() {
        let z = C64::new(0.0, 0.0);
        let p0 = sample_profile(&InitialDataSpec::gaussian(&[&[1.0]], 0.8, 0.0), grid(), 1, 1).unwrap();
        let cases = [
            (CompanionKind::Adjoint, DispersionParams::new(-I, z)),
            (
                CompanionKind::NegTransposeRevSpacetime,
                DispersionParams::new(z, C64::new(-1.0, 0.0)),
            ),
            (CompanionKind::TransposeRevTime, DispersionParams::new(-I, z)),
        ];
        for (kind, params) in cases {
            let r = |dt: f64| companion_consistency_residual(&p0, kind, &params, &[0.2 - dt, 0.2, 0.2 + dt]).unwrap();
            let (a, b) = (r(0.01), r(0.005));
            let ratio = a / b;
            assert!((3.0..5.0).contains(&ratio), "{kind}: ratio {ratio}");
        }
        let zero = MatrixProfile::zeros(grid(), 1, 1).unwrap();
        let r0 = companion_consistency_residual(
            &zero,
            CompanionKind::Adjoint,
            &DispersionParams::new(-I, z),
            &[0.0, 0.1, 0.2],
        );
        assert_eq!(r0.unwrap(), 0.0);
    }

    #[test]
    fn parameter_admissibility() {
        let z = C64::new(0.0, 0.0);
        let nls = DispersionParams::new(-I, z);
        assert!(CompanionKind::Adjoint.check_parameters(&nls).is_ok());
        assert!(CompanionKind::NegTranspose.check_parameters(&nls).is_err());
        let heat = DispersionParams::new(C64::new(1.0, 0.0), z);
        assert!(CompanionKind::Adjoint.check_parameters(&heat).is_err());
        assert!(CompanionKind::TransposeRevTime.check_parameters(&heat).is_ok());
    }
}
