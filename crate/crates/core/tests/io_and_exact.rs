use num_bigint::BigInt;
use num_rational::Ratio;
use tachyon_core::solvers::{solve_closed, Equation, SolverConfig};
use tachyon_core::{sup_diff, HeatPolynomialExact, Profile64};

#[test]
fn solved_profile_survives_a_file_round_trip() {
    let cfg = SolverConfig {
        beta: 1.8,
        ..SolverConfig::new(Equation::Closed, 3)
    };
    let psi = solve_closed(&cfg).unwrap().profile;
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("psi.csv");
    psi.save_csv(&path).unwrap();
    let back = Profile64::load_csv(&path).unwrap();
    assert_eq!(back, psi);
    assert_eq!(sup_diff(&back, &psi).unwrap(), 0.0);
}

#[test]
fn exact_backward_evolution_of_t6() {
    let q = |n: i64, d: i64| Ratio::new(BigInt::from(n), BigInt::from(d));
    let eps = q(2, 3);
    let p = HeatPolynomialExact::monomial(6).unwrap().evolve(-eps.clone());
    // t^6 - (15/2) eps t^4 + (45/4) eps^2 t^2 - (15/8) eps^3
    let e2 = eps.clone() * eps.clone();
    let e3 = e2.clone() * eps.clone();
    let expected = [q(-15, 8) * e3,
        q(0, 1),
        q(45, 4) * e2,
        q(0, 1),
        q(-15, 2) * eps,
        q(0, 1),
        q(1, 1)];
    assert_eq!(p.coefficients(), &expected[..]);
}
