//! Property tests over the model constants and the numerical building blocks.

use heavytail::eigen::{fit_scaling, geometric_etas, kappa_closed, kappa_from_d_zero};
use heavytail::fd::{norm2, FluxGrid, Tridiag};
use heavytail::model::{
    c_beta_squared, c_beta_squared_closed, equilibrium_m, equilibrium_m_prime, potential_w, validate_beta,
};
use heavytail::specfun::{gamma, gamma_complex};
use heavytail::{Error, ModelParams, C64};
use proptest::prelude::*;

/// Admissible `β`, kept a little away from the excluded integers.
fn admissible() -> impl Strategy<Value = f64> {
    prop_oneof![1.05f64..1.95, 2.05f64..2.95, 3.05f64..3.95, 4.05f64..4.95]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn derived_constants(beta in admissible()) {
        let p = ModelParams::new(beta).unwrap();
        prop_assert_eq!(p.gamma, beta / 2.0);
        prop_assert!((p.alpha - (beta + 1.0) / 3.0).abs() < 1e-15);
        prop_assert!(p.alpha > 2.0 / 3.0 && p.alpha < 2.0);
    }

    #[test]
    fn normalisation_against_statrs(beta in admissible()) {
        let g = beta / 2.0;
        let oracle = statrs::function::gamma::gamma(g)
            / (std::f64::consts::PI.sqrt() * statrs::function::gamma::gamma(g - 0.5));
        let by_quad = c_beta_squared(beta).unwrap();
        let closed = c_beta_squared_closed(beta).unwrap();
        prop_assert!(((by_quad - oracle) / oracle).abs() < 1e-10);
        prop_assert!(((closed - oracle) / oracle).abs() < 1e-12);
    }

    #[test]
    fn kappa_positive_and_consistent(beta in admissible()) {
        let k = kappa_closed(beta).unwrap();
        let kd = kappa_from_d_zero(beta).unwrap();
        prop_assert!(k > 0.0);
        prop_assert!(((k - kd) / k).abs() < 1e-12);
    }

    #[test]
    fn potential_is_ground_state_ratio(beta in admissible(), v in -30.0f64..30.0) {
        // W = M''/M, M'' by central differences of the exact M'
        let g = beta / 2.0;
        let h = 1e-5 * (1.0 + v.abs());
        let m2 = (equilibrium_m_prime(v + h, g) - equilibrium_m_prime(v - h, g)) / (2.0 * h);
        let w = potential_w(v, g);
        let scale = (1.0 + v * v).recip();
        prop_assert!((m2 / equilibrium_m(v, g) - w).abs() < 1e-7 * scale.max(w.abs()));
    }

    #[test]
    fn gamma_matches_statrs(x in 0.05f64..12.0) {
        let a = gamma(x).unwrap();
        let b = statrs::function::gamma::gamma(x);
        prop_assert!(((a - b) / b).abs() < 1e-12);
    }

    #[test]
    fn complex_gamma_reflection(re in -3.5f64..3.5, im in 0.1f64..6.0) {
        // Γ(z)Γ(1-z) = π / sin(πz)
        let z = C64::new(re, im);
        let lhs = gamma_complex(z).unwrap() * gamma_complex(1.0 - z).unwrap();
        let rhs = std::f64::consts::PI / (std::f64::consts::PI * z).sin();
        prop_assert!((lhs - rhs).norm() <= 1e-11 * rhs.norm());
    }

    #[test]
    fn synthetic_power_law_fit(expo in 0.5f64..2.0, pref in 0.05f64..5.0) {
        let etas = geometric_etas(1e-3, 1e-1, 9).unwrap();
        let pts: Vec<(f64, C64)> = etas.iter().map(|&e| (e, C64::new(pref * e.powf(expo), 0.0))).collect();
        let fit = fit_scaling(&pts).unwrap();
        prop_assert!((fit.exponent - expo).abs() < 1e-10);
        prop_assert!((fit.prefactor / pref - 1.0).abs() < 1e-9);
        prop_assert!(fit.r_squared > 1.0 - 1e-12);
    }

    #[test]
    fn thomas_solve_diagonally_dominant(seed in proptest::collection::vec(-1.0f64..1.0, 3 * 40)) {
        let n = 40;
        let lower: Vec<C64> = (0..n - 1).map(|j| C64::new(seed[j], 0.3 * seed[j + 1])).collect();
        let upper: Vec<C64> = (0..n - 1).map(|j| C64::new(seed[n + j], -0.2 * seed[j])).collect();
        let diag: Vec<C64> = (0..n).map(|j| C64::new(3.0 + seed[2 * n + j], seed[2 * n + j])).collect();
        let t = Tridiag { lower, diag, upper };
        let x: Vec<C64> = (0..n).map(|j| C64::new(seed[j], seed[2 * n + j])).collect();
        let b = t.matvec(&x);
        let y = t.factor(1e-14).unwrap().solve(&b);
        let err: Vec<C64> = x.iter().zip(&y).map(|(a, b)| a - b).collect();
        prop_assert!(norm2(&err) <= 1e-12 * norm2(&x).max(1.0));
    }

    #[test]
    fn flux_operator_is_complex_symmetric(beta in admissible(), eta in -0.3f64..0.3) {
        let grid = FluxGrid::new(20.0, 256, beta / 2.0).unwrap();
        let a = grid.operator(eta, C64::new(0.0, 0.0));
        prop_assert_eq!(&a.lower, &a.upper);
        // discrete M is annihilated up to the iηv term
        let m: Vec<C64> = grid.m.iter().map(|&x| C64::new(x, 0.0)).collect();
        let r = a.matvec(&m);
        for ((rj, v), m) in r.iter().zip(&grid.v).zip(&grid.m) {
            let expect = C64::new(0.0, eta * v * m);
            prop_assert!((rj - expect).norm() <= 1e-9 * (grid.h * grid.h).recip());
        }
    }
}

#[test]
fn inadmissible_beta_is_rejected() {
    for b in [2.0, 3.0, 4.0, 5.0, 6.5] {
        assert_eq!(validate_beta(b), Err(Error::InvalidBeta(b)));
    }
    for b in [1.0, 0.5, -2.0, f64::NAN] {
        assert!(matches!(validate_beta(b), Err(Error::NonIntegrable(_))));
    }
    assert!(ModelParams::new(3.0).is_err());
}

#[test]
fn kappa_tends_to_one_third_near_two() {
    for d in [1e-3, 1e-5, 1e-7] {
        for b in [2.0 - d, 2.0 + d] {
            assert!((kappa_closed(b).unwrap() - 1.0 / 3.0).abs() < 10.0 * d);
        }
    }
}

#[test]
fn fit_rejects_bad_input() {
    let few = [(0.1, C64::new(1.0, 0.0)); 3];
    assert!(fit_scaling(&few).is_err());
    let neg: Vec<(f64, C64)> = (1..6).map(|i| (i as f64, C64::new(-1.0, 0.0))).collect();
    assert!(fit_scaling(&neg).is_err());
    assert!(geometric_etas(0.1, 0.01, 5).is_err());
}
