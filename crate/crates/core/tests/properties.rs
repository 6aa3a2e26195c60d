use hankel_core::companion::{companion_profile, CompanionKind};
use hankel_core::dispersion::{evolve, max_difference, DispersionParams, SpectralFlow};
use hankel_core::fredholm::{
    assemble_q, det2, evaluate_solution, hankel_block, solve_g, DiscreteKernel, Problem, SolveOptions,
};
use hankel_core::gridkernel::{from_spectral, sample_profile, to_spectral, InitialDataSpec, MasterGrid, MatrixProfile};
use hankel_core::linalg::{max_abs, CMat, C64};
use hankel_core::quadrature::make_quadrature;
use hankel_core::scenario::ScenarioFile;
use proptest::prelude::*;

fn grid() -> MasterGrid {
    MasterGrid::new(16.0, 256).unwrap()
}

prop_compose! {
    fn amplitude(n: usize)(re in prop::collection::vec(-1.0..1.0_f64, n * n),
                           im in prop::collection::vec(-1.0..1.0_f64, n * n)) -> CMat {
        CMat::from_fn(n, n, |r, c| C64::new(re[r * n + c], im[r * n + c]))
    }
}

prop_compose! {
    /// Sum of two Gaussians with independent amplitudes, well inside the domain.
    fn profile(n: usize)(a in amplitude(n), b in amplitude(n),
                         w1 in 0.5..1.2_f64, w2 in 0.5..1.2_f64,
                         c1 in -2.0..2.0_f64, c2 in -2.0..2.0_f64) -> MatrixProfile {
        MatrixProfile::from_fn(grid(), n, n, |s| {
            let (u, v) = ((s - c1) / w1, (s - c2) / w2);
            &a * C64::new((-0.5 * u * u).exp(), 0.0) + &b * C64::new((-0.5 * v * v).exp(), 0.0)
        })
        .unwrap()
    }
}

fn unitary() -> impl Strategy<Value = DispersionParams> {
    (-1.5..1.5_f64, -1.5..1.5_f64).prop_map(|(a, b)| DispersionParams::new(C64::new(0.0, a), C64::new(b, 0.0)))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn parseval(p in profile(2)) {
        let (a, b) = (p.l2_norm_sq(), to_spectral(&p).l2_norm_sq());
        prop_assert!((a - b).abs() <= 1e-12 * a.max(1.0));
    }

    #[test]
    fn spectral_round_trip(p in profile(2)) {
        prop_assert!(max_difference(&from_spectral(&to_spectral(&p)), &p) <= 1e-13);
    }

    #[test]
    fn semigroup(p in profile(1), params in unitary(), t1 in -1.0..1.0_f64, t2 in -1.0..1.0_f64) {
        let two = evolve(&evolve(&p, &params, t1).unwrap(), &params, t2).unwrap();
        let one = evolve(&p, &params, t1 + t2).unwrap();
        prop_assert!(max_difference(&two, &one) <= 1e-11);
    }

    #[test]
    fn reversibility(p in profile(2), params in unitary(), t in -2.0..2.0_f64) {
        let back = evolve(&evolve(&p, &params, t).unwrap(), &params, -t).unwrap();
        prop_assert!(max_difference(&back, &p) <= 1e-11);
    }

    #[test]
    fn unitary_flows_preserve_l2(p in profile(2), params in unitary(), t in -2.0..2.0_f64) {
        let a = p.l2_norm_sq();
        let b = evolve(&p, &params, t).unwrap().l2_norm_sq();
        prop_assert!((a - b).abs() <= 1e-12 * a.max(1.0));
    }

    #[test]
    fn companion_is_an_involution(p in profile(2), k in 0usize..7, t in -1.0..1.0_f64) {
        let kind = CompanionKind::ALL.iter().copied().filter(|k| !k.is_identity()).nth(k).unwrap();
        let p = p.with_time(t);
        let twice = companion_profile(&companion_profile(&p, kind).unwrap(), kind).unwrap();
        prop_assert_eq!(twice.raw(), p.raw());
        prop_assert_eq!(twice.time(), t);
    }

    #[test]
    fn reflection_is_an_involution(p in profile(2)) {
        prop_assert_eq!(p.reflected().reflected(), p);
    }

    #[test]
    fn hankel_blocks_are_symmetric(p in profile(2), k in -8i32..8) {
        let quad = make_quadrature(4.0, 32, grid().spacing()).unwrap();
        let x = k as f64 * grid().spacing();
        let h = hankel_block(&p, x, &quad).unwrap();
        prop_assert_eq!(h.hankel_defect(), 0.0);
        for i in 0..quad.len() {
            for j in 0..i {
                prop_assert_eq!(h.block(i, j), h.block(j, i));
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn zero_kernel_has_unit_det2(n in 1usize..3, intervals in 8usize..40) {
        let quad = make_quadrature(intervals as f64 * grid().spacing(), intervals, grid().spacing()).unwrap();
        let q = DiscreteKernel::zeros(quad.len(), n, n);
        prop_assert_eq!(det2(&q, &quad).unwrap(), C64::new(1.0, 0.0));
    }

    #[test]
    fn zero_data_is_a_fixed_point(n in 1usize..3, k in -8i32..8) {
        let quad = make_quadrature(4.0, 32, grid().spacing()).unwrap();
        let p = MatrixProfile::zeros(grid(), n, n).unwrap();
        let x = k as f64 * grid().spacing();
        let q = assemble_q(&p, &p, x, &quad).unwrap();
        let sol = solve_g(&q, &p, x, &quad, &SolveOptions::default(), true).unwrap();
        prop_assert_eq!(max_abs(&sol.center()), 0.0);
        prop_assert!(sol.y_slice().unwrap().iter().all(|b| max_abs(b) == 0.0));
        prop_assert_eq!(sol.det2, C64::new(1.0, 0.0));
    }

    #[test]
    fn solutions_do_not_depend_on_thread_count(amp in 0.1..0.8_f64) {
        let spec = InitialDataSpec::gaussian(&[&[amp]], 0.8, 0.0);
        let p0 = sample_profile(&spec, grid(), 1, 1).unwrap();
        let quad = make_quadrature(4.0, 32, grid().spacing()).unwrap();
        let params = DispersionParams::new(C64::new(0.0, -1.0), C64::new(0.0, 0.0));
        let xs: Vec<f64> = (-3..=3).map(|k| k as f64 * 0.125).collect();
        let ts = vec![0.0, 0.05, 0.1];
        let run = |threads: usize| {
            let problem = Problem::new(Box::new(SpectralFlow::new(p0.clone(), params)), CompanionKind::Adjoint, quad.clone());
            rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap()
                .install(|| evaluate_solution(&problem, &xs, &ts).unwrap().0)
        };
        let (a, b) = (run(1), run(3));
        for (sa, sb) in a.samples().iter().zip(b.samples()) {
            prop_assert_eq!(&sa.as_ref().unwrap().center, &sb.as_ref().unwrap().center);
        }
    }

    #[test]
    fn scenario_toml_round_trips(amp in -1.0..1.0_f64, width in 0.3..2.0_f64, intervals in 8usize..64) {
        let text = format!(r#"
kind = "local_nls"
companion = "adjoint"
dims = [1, 1]
initial = {{ type = "gaussian", amplitude = [[{amp}]], width = {width} }}

[grid]
half_width = 20.0
nodes = 320

[quadrature]
length = 4.0
intervals = {intervals}

[samples]
x = {{ values = [0.0] }}
t = {{ values = [0.0] }}
"#);
        let file = ScenarioFile::from_toml(&text).unwrap();
        prop_assert_eq!(ScenarioFile::from_toml(&file.to_toml()).unwrap(), file);
    }
}
