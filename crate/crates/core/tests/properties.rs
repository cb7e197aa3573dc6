use proptest::prelude::*;

use tachyon_core::analysis::{branching_analysis, find_zeros, DEFAULT_ZERO_TOL};
use tachyon_core::hermite::{hermite_eval, hermite_roots, modified_hermite_eval, weighted_inner, WeightParams};
use tachyon_core::solvers::{signed_root, solve_closed, solve_closed_from, solve_open_from, Equation, SolverConfig};
use tachyon_core::{
    apply_kernel, apply_kernel_symmetric, sample, sup_diff, Error, Grid64, HeatPolynomial64, KernelParams64, Parity,
    Profile64, TailModel,
};

fn grid() -> Grid64 {
    Grid64::new(10.0, 1001).unwrap()
}

/// Odd, increasing, saturating well inside the grid.
fn odd_profile(a: f64, b: f64, c: f64) -> Profile64 {
    sample(
        move |t: f64| (a * t + b * t * t * t).tanh() * (1.0 - c) + c * (2.0 * t).tanh(),
        &grid(),
        TailModel::open_odd(),
        Some(Parity::Odd),
    )
    .unwrap()
}

/// Even, with a Gaussian bump on a constant background.
fn even_profile(level: f64, depth: f64, width: f64) -> Profile64 {
    sample(
        move |t: f64| level - depth * (-width * t * t).exp(),
        &grid(),
        TailModel::constant(level),
        Some(Parity::Even),
    )
    .unwrap()
}

fn config() -> ProptestConfig {
    ProptestConfig {
        cases: 24,
        ..ProptestConfig::default()
    }
}

proptest! {
    #![proptest_config(config())]

    #[test]
    fn sup_diff_is_a_metric(a in 1.0..3.0f64, b in 0.3..3.0f64, c in 0.0..1.0f64) {
        let f = odd_profile(a, 0.1, c);
        let g = odd_profile(b, 0.2, 1.0 - c);
        let h = odd_profile(0.5 * (a + b), 0.0, 0.5);
        prop_assert_eq!(sup_diff(&f, &f).unwrap(), 0.0);
        prop_assert_eq!(sup_diff(&f, &g).unwrap(), sup_diff(&g, &f).unwrap());
        prop_assert!(sup_diff(&f, &h).unwrap() <= sup_diff(&f, &g).unwrap() + sup_diff(&g, &h).unwrap() + 1e-15);
    }

    #[test]
    fn kernel_preserves_constants(gamma in 0.05..200.0f64, c in -5.0..5.0f64) {
        let k = KernelParams64::new(gamma).unwrap();
        let out = apply_kernel(&k, &Profile64::constant(grid(), c));
        for v in out.values() {
            prop_assert!((v - c).abs() <= 1e-12 * (1.0 + c.abs()));
        }
    }

    #[test]
    fn kernel_preserves_bounds(
        level in -1.0..1.0f64,
        depth in -1.0..1.0f64,
        width in 0.2..4.0f64,
        gamma in 0.1..20.0f64,
    ) {
        let f = even_profile(level, depth, width);
        let lo = f.values().iter().copied().fold(level, f64::min);
        let hi = f.values().iter().copied().fold(level, f64::max);
        let out = apply_kernel(&KernelParams64::new(gamma).unwrap(), &f);
        for v in out.values() {
            prop_assert!(*v >= lo - 1e-12 && *v <= hi + 1e-12);
        }
    }

    #[test]
    fn kernel_semigroup(
        level in -1.0..1.0f64,
        depth in -1.0..1.0f64,
        width in 0.2..2.0f64,
        a in 0.5..5.0f64,
        b in 0.5..5.0f64,
    ) {
        let f = even_profile(level, depth, width);
        let two = apply_kernel(&KernelParams64::new(a).unwrap(), &apply_kernel(&KernelParams64::new(b).unwrap(), &f));
        let one = apply_kernel(&KernelParams64::new(a * b / (a + b)).unwrap(), &f);
        prop_assert!(sup_diff(&two, &one).unwrap() < 1e-8);
    }

    #[test]
    fn symmetric_apply_keeps_parity_and_matches_full_line(
        a in 1.0..3.0f64,
        b in 0.0..0.5f64,
        c in 0.0..1.0f64,
        gamma in 0.5..10.0f64,
    ) {
        let k = KernelParams64::new(gamma).unwrap();
        let f = odd_profile(a, b, c);
        let sym = apply_kernel_symmetric(&k, &f).unwrap();
        prop_assert_eq!(sym.parity(), Some(Parity::Odd));
        prop_assert_eq!(sym.values()[grid().half_count()], 0.0);
        let full = apply_kernel(&k, &f);
        prop_assert!(sup_diff(&sym, &full).unwrap() < 1e-12);
        prop_assert!(sym.values().windows(2).all(|w| w[1] >= w[0] - 4.0 * f64::EPSILON));
    }

    #[test]
    fn odd_profiles_have_symmetric_zero_sets(a in 1.0..3.0f64, b in 0.0..0.5f64, c in 0.0..1.0f64) {
        let f = odd_profile(a, b, c);
        let zeros = find_zeros(&f, DEFAULT_ZERO_TOL);
        let mut locs: Vec<f64> = zeros.iter().map(|z| z.location).collect();
        let mut mirrored: Vec<f64> = locs.iter().map(|t| -t).collect();
        locs.sort_by(f64::total_cmp);
        mirrored.sort_by(f64::total_cmp);
        for (x, y) in locs.iter().zip(&mirrored) {
            prop_assert!((x - y).abs() < 1e-12);
        }
        prop_assert!(locs.contains(&0.0));
    }

    #[test]
    fn dual_pairing_holds_for_arbitrary_profiles(
        a in 1.0..3.0f64,
        b in 0.0..0.5f64,
        c in 0.0..1.0f64,
        n in 0usize..=8,
    ) {
        // (K_1 f, H_n)_1 = (f, V_n)_(1/2) for any bounded f
        let f = odd_profile(a, b, c);
        let kf = apply_kernel(&KernelParams64::open(), &f);
        let lhs = weighted_inner(&kf, |t| hermite_eval(n, t).unwrap(), WeightParams::unit());
        let rhs = weighted_inner(&f, |t| modified_hermite_eval(n, t).unwrap(), WeightParams::half());
        prop_assert!((lhs - rhs).abs() < 1e-6, "n = {}: {} vs {}", n, lhs, rhs);
    }

    #[test]
    fn odd_roots_are_sign_preserving_inverses(y in -50.0..50.0f64, k in prop::sample::select(vec![1u32, 3, 5, 9, 25])) {
        let r = signed_root(y, k).unwrap();
        prop_assert_eq!(r.signum() * y.signum() >= 0.0, true);
        prop_assert!((r.powi(k as i32) - y).abs() <= 1e-12 * (1.0 + y.abs()));
    }

    #[test]
    fn even_roots_of_negatives_are_rejected(y in -50.0..-1e-12f64, k in prop::sample::select(vec![2u32, 4, 16])) {
        let rejected = matches!(signed_root(y, k), Err(Error::NonRealRoot { .. }));
        prop_assert!(rejected);
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 16, ..ProptestConfig::default() })]

    #[test]
    fn hermite_roots_interlace(n in 2usize..=40) {
        let hi = hermite_roots::<f64>(n).unwrap();
        let lo = hermite_roots::<f64>(n - 1).unwrap();
        prop_assert_eq!(hi.len(), n);
        for (k, r) in lo.iter().enumerate() {
            prop_assert!(hi[k] < *r && *r < hi[k + 1]);
        }
        for (x, y) in hi.iter().zip(hi.iter().rev()) {
            prop_assert!((x + y).abs() < 1e-10);
        }
    }

    #[test]
    fn modified_hermite_scaling(n in 0usize..=20, t in -4.0..4.0f64) {
        let expect = 2f64.powf(-(n as f64) / 2.0) * hermite_eval(n, t / 2f64.sqrt()).unwrap();
        let got = modified_hermite_eval(n, t).unwrap();
        prop_assert!((got - expect).abs() <= 1e-10 * (1.0 + expect.abs()));
    }

    #[test]
    fn branching_scales_like_sqrt_epsilon(m in 1usize..=4, scale in 0.1..10.0f64) {
        let mut c = vec![0.0; 2 * m + 1];
        c[2 * m] = scale;
        let boundary = HeatPolynomial64::new(c).unwrap();
        let report = branching_analysis(&boundary, &[1e-1, 1e-2, 1e-3]).unwrap();
        prop_assert_eq!(report.pairs, m);
        prop_assert!(report.positive_counts.iter().all(|&k| k == m));
        for e in &report.fitted_exponents {
            prop_assert!((e - 0.5).abs() < 1e-6);
        }
        for (r, h) in report.coefficient_ratios.iter().zip(&report.hermite_ratios) {
            prop_assert!((r - h).abs() < 1e-6);
        }
    }
}

#[test]
fn zero_and_unit_constants_are_fixed_points() {
    let open = SolverConfig::new(Equation::Open, 3);
    let zero = Profile64::constant(open.grid, 0.0).with_parity(Some(Parity::Odd)).unwrap();
    let sol = solve_open_from(&open, &zero).unwrap();
    assert_eq!(sol.trace.iters_used, 1);
    assert_eq!(sup_diff(&sol.profile, &zero).unwrap(), 0.0);
    let closed = SolverConfig::new(Equation::Closed, 3);
    for c in [1.0, -1.0] {
        let start = Profile64::constant(closed.grid, c);
        let sol = solve_closed_from(&closed, &start).unwrap();
        assert_eq!(sol.trace.iters_used, 1);
        assert!(sup_diff(&sol.profile, &start).unwrap() < 1e-12, "constant {c}");
    }
}

#[test]
fn even_powers_run_into_non_real_roots_when_forced() {
    for (p, beta) in [(2u32, 2.0), (2, 1.8), (4, 2.0)] {
        let mut cfg = SolverConfig::<f64>::new(Equation::Closed, p);
        cfg.beta = beta;
        assert!(matches!(solve_closed(&cfg), Err(Error::EvenPower { .. })));
        cfg.force = true;
        match solve_closed(&cfg) {
            Err(Error::NonRealRoot { k, value, t }) => {
                assert_eq!(k, p * p);
                assert!(value < 0.0 && t < 0.0);
            }
            other => panic!("p = {p}: expected a non-real root, got {other:?}"),
        }
    }
}

#[test]
fn generic_core_runs_in_single_precision() {
    let cfg = SolverConfig::<f32> {
        tol: 1e-5,
        ..SolverConfig::new(Equation::Open, 3)
    };
    let sol = tachyon_core::solvers::solve_open(&cfg).unwrap();
    assert!(sol.trace.converged);
    let cfg64 = SolverConfig::<f64>::new(Equation::Open, 3);
    let ref64 = tachyon_core::solvers::solve_open(&cfg64).unwrap();
    let worst = sol
        .profile
        .values()
        .iter()
        .zip(ref64.profile.values())
        .map(|(a, b)| (f64::from(*a) - b).abs())
        .fold(0.0, f64::max);
    assert!(worst < 1e-4, "f32 vs f64 {worst}");
}
