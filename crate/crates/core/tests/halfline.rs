//! Behaviour of the half-line solution and the eigenvalue as `η` varies.

use heavytail::eigen::{kappa_closed, matrix_eigenpair, solve_mu_connection};
use heavytail::halfline::{build_g, coeff_b_integral};
use heavytail::{ModelParams, C64};

#[test]
fn b_is_continuous_in_eta() {
    let p = ModelParams::new(2.5).unwrap();
    let lam = C64::new(0.05, 0.0);
    let b = |eta: f64| build_g(lam, eta, &p).unwrap().b_coeff;
    let (b0, b1) = (b(0.05), b(0.05 * (1.0 + 1e-4)));
    assert!((b1 - b0).norm() < 1e-3 * b0.norm());
}

#[test]
fn b_integral_formula_holds_across_beta() {
    for beta in [1.5, 3.5, 4.5] {
        let p = ModelParams::new(beta).unwrap();
        for (lam, eta) in [(C64::new(0.02, 0.0), 0.1), (C64::new(-0.05, 0.03), 0.02)] {
            let sol = build_g(lam, eta, &p).unwrap();
            let direct = coeff_b_integral(lam, eta, &sol).unwrap();
            assert!((direct - sol.b_coeff).norm() < 1e-6 * sol.b_coeff.norm(), "beta {beta}, eta {eta}");
        }
    }
}

#[test]
fn re_b_scales_like_eta_alpha() {
    // Re b(0, η) η^{-α} approaches (2γ+1) Re d(0)
    let p = ModelParams::new(1.5).unwrap();
    let target = (2.0 * p.gamma + 1.0) * heavytail::connection::d_zero_closed(p.gamma).unwrap().re;
    let ratio = |eta: f64| build_g(C64::new(0.0, 0.0), eta, &p).unwrap().b_coeff.re / eta.powf(p.alpha);
    let (r3, r5, r7) = (ratio(1e-3), ratio(1e-5), ratio(1e-7));
    assert!((r7 - target).abs() < (r5 - target).abs());
    assert!((r5 - target).abs() < (r3 - target).abs());
    assert!(((r7 - target) / target).abs() < 1e-3);
}

#[test]
fn lambda_slope_tends_to_half_inverse_normalisation() {
    // ∂_λ Re b η^{-2/3} → ∫₀^∞ M² = 1/(2C²)
    let p = ModelParams::new(4.5).unwrap();
    let eta: f64 = 1e-6;
    let d = 0.01;
    let b0 = build_g(C64::new(0.0, 0.0), eta, &p).unwrap().b_coeff;
    let b1 = build_g(C64::new(d, 0.0), eta, &p).unwrap().b_coeff;
    let slope = (b1 - b0).re / (d * eta.powf(2.0 / 3.0));
    assert!((slope * 2.0 * p.c_beta_sq - 1.0).abs() < 1e-3, "slope {slope}");
}

#[test]
fn mu_is_real_positive_and_increasing() {
    let p = ModelParams::new(3.5).unwrap();
    let mut prev = 0.0;
    for eta in [0.01, 0.02, 0.05, 0.1] {
        let r = solve_mu_connection(eta, &p).unwrap();
        assert!(r.mu.re > prev);
        assert!(r.mu.im.abs() <= 1e-9 * r.mu.re);
        prev = r.mu.re;
    }
    let k = kappa_closed(3.5).unwrap();
    let r = solve_mu_connection(1e-4, &p).unwrap();
    assert!((r.mu.re / (k * 1e-4f64.powf(p.alpha)) - 1.0).abs() < 0.02);
}

#[test]
fn matrix_eigenvector_has_vanishing_moment_defect() {
    // Integrating the eigen-equation against M gives μ⟨g,M⟩ = iη⟨vg,M⟩
    let eta = 0.05;
    let pair = matrix_eigenpair(eta, 16.0 * eta.powf(-1.0 / 3.0), 1 << 13, 1.25).unwrap();
    let g = &pair.grid;
    let lhs = pair.mu * g.moment_m(&pair.vector);
    let vg: Vec<C64> = pair.vector.iter().zip(&g.v).map(|(x, v)| x * *v).collect();
    let rhs = C64::new(0.0, eta) * g.moment_m(&vg);
    assert!((lhs - rhs).norm() < 1e-8 * lhs.norm());
}
