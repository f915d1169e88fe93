//! Model constants and the one-dimensional objects built from the
//! equilibrium `F(v) = C_β² (1+v²)^{-β/2}`: the ground state `M = (F/C_β²)^{1/2}`,
//! the potential `W = M''/M`, the second kernel element `Z` of `Q = -∂² + W`
//! and the Green-function solve for `Q f = g` on the half-line.

use serde::{Deserialize, Serialize};

use crate::quad::{self, GaussLegendre};
use crate::specfun::gamma;
use crate::{Error, Result};

/// Default radius of the spectral-parameter disc `|λ| ≤ λ₀`.
pub const DEFAULT_LAMBDA0: f64 = 0.5;
/// Default upper bound on the frequency parameter `η`.
pub const DEFAULT_ETA0: f64 = 0.2;

/// The single source of model constants.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub beta: f64,
    pub gamma: f64,
    pub alpha: f64,
    pub c_beta_sq: f64,
    pub lambda0: f64,
    pub eta0: f64,
}

impl ModelParams {
    /// Validates `1 < β < 5`, `β ∉ {2, 3, 4}`.
    pub fn new(beta: f64) -> Result<Self> {
        validate_beta(beta)?;
        Ok(Self {
            beta,
            gamma: beta / 2.0,
            alpha: (beta + 1.0) / 3.0,
            c_beta_sq: c_beta_squared(beta)?,
            lambda0: DEFAULT_LAMBDA0,
            eta0: DEFAULT_ETA0,
        })
    }

    pub fn with_cutoffs(mut self, lambda0: f64, eta0: f64) -> Self {
        self.lambda0 = lambda0;
        self.eta0 = eta0;
        self
    }

    pub fn c_beta(&self) -> f64 {
        self.c_beta_sq.sqrt()
    }

    pub fn m(&self, v: f64) -> f64 {
        equilibrium_m(v, self.gamma)
    }

    pub fn w(&self, v: f64) -> f64 {
        potential_w(v, self.gamma)
    }
}

/// Checks `1 < β < 5` and `β ∉ {2, 3, 4}`.
pub fn validate_beta(beta: f64) -> Result<()> {
    if !beta.is_finite() || beta <= 1.0 {
        return Err(Error::NonIntegrable(beta));
    }
    if beta >= 5.0 || [2.0, 3.0, 4.0].iter().any(|b| (beta - b).abs() < 1e-9) {
        return Err(Error::InvalidBeta(beta));
    }
    Ok(())
}

/// `C_β² = 1 / ∫_ℝ (1+v²)^{-β/2} dv`.
///
/// With `v = tan θ` the integral becomes `2∫_0^{π/2} cos^{β-2} θ dθ`, whose
/// endpoint singularity for `β < 2` is handled by tanh–sinh quadrature.
pub fn c_beta_squared(beta: f64) -> Result<f64> {
    if !beta.is_finite() || beta <= 1.0 {
        return Err(Error::NonIntegrable(beta));
    }
    let e = beta - 2.0;
    // cos θ from whichever endpoint distance is smaller
    let f = |_: f64, dl: f64, dr: f64| if dl < dr { dl.cos() } else { dr.sin() }.powf(e);
    let half = quad::tanh_sinh(f, 0.0, std::f64::consts::FRAC_PI_2, 1e-14)?;
    Ok(1.0 / (2.0 * half))
}

/// `Γ(γ)/(√π Γ(γ - 1/2))`, the Beta-function form of `C_β²`.
pub fn c_beta_squared_closed(beta: f64) -> Result<f64> {
    let g = beta / 2.0;
    Ok(gamma::gamma(g)? / (std::f64::consts::PI.sqrt() * gamma::gamma(g - 0.5)?))
}

/// `W(v) = γ(v²(γ+1) - 1)/(1+v²)²`.
pub fn potential_w(v: f64, gamma: f64) -> f64 {
    let p = 1.0 + v * v;
    gamma * (v * v * (gamma + 1.0) - 1.0) / (p * p)
}

/// `N(v) = W(v) - γ(γ+1)/v² = -γ((2γ+3)v² + γ + 1) / (v²(1+v²)²)`.
pub fn remainder_n(v: f64, gamma: f64) -> Result<f64> {
    if v == 0.0 {
        return Err(Error::Pole {
            what: "remainder N",
            at: "v = 0".into(),
        });
    }
    Ok(remainder_n_unchecked(v, gamma))
}

pub(crate) fn remainder_n_unchecked(v: f64, gamma: f64) -> f64 {
    let v2 = v * v;
    let p = 1.0 + v2;
    -gamma * ((2.0 * gamma + 3.0) * v2 + gamma + 1.0) / (v2 * p * p)
}

/// `M(v) = (1+v²)^{-γ/2}`.
pub fn equilibrium_m(v: f64, gamma: f64) -> f64 {
    (1.0 + v * v).powf(-0.5 * gamma)
}

/// `M'(v)`.
pub fn equilibrium_m_prime(v: f64, gamma: f64) -> f64 {
    -gamma * v * (1.0 + v * v).powf(-0.5 * gamma - 1.0)
}

/// `∫_0^v M^{-2} = ∫_0^v (1+w²)^γ dw`, by Gauss–Legendre on doubling panels.
fn inverse_m2_integral(v: f64, gamma: f64) -> f64 {
    let gl = GaussLegendre::new(24);
    let f = |w: f64| (1.0 + w * w).powf(gamma);
    let mut breaks = vec![0.0];
    let mut x = 0.5f64.min(v);
    while x < v {
        breaks.push(x);
        x *= 2.0;
    }
    breaks.push(v);
    breaks.dedup();
    gl.integrate_panels(f, &breaks)
}

/// `Z(v) = M(v)∫_0^v M^{-2}`; `Z(0) = 0`, `Z'(0) = 1`, `Z ~ v^{γ+1}/(2γ+1)`.
pub fn weight_z(v: f64, gamma: f64) -> f64 {
    if v == 0.0 {
        return 0.0;
    }
    equilibrium_m(v, gamma) * inverse_m2_integral(v, gamma)
}

/// `Z'(v) = M'∫M^{-2} + 1/M`.
pub fn weight_z_prime(v: f64, gamma: f64) -> f64 {
    equilibrium_m_prime(v, gamma) * inverse_m2_integral(v, gamma) + 1.0 / equilibrium_m(v, gamma)
}

/// Half-line grid uniform in `θ` with `v = tan θ`, `θ ∈ [0, atan V]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ThetaGrid {
    pub theta: Vec<f64>,
    pub v: Vec<f64>,
    pub h: f64,
}

impl ThetaGrid {
    pub fn new(v_max: f64, n: usize) -> Self {
        assert!(n >= 3 && v_max > 0.0);
        let t_max = v_max.atan();
        let h = t_max / (n - 1) as f64;
        let theta: Vec<f64> = (0..n).map(|i| i as f64 * h).collect();
        let v = theta.iter().map(|t| t.tan()).collect();
        Self { theta, v, h }
    }

    /// `∫_0^{v_i} f dv` at every node from samples `f(v_i)`.
    pub fn cumulative(&self, f: &[f64]) -> Vec<f64> {
        let jac: Vec<f64> = f
            .iter()
            .zip(&self.theta)
            .map(|(fi, t)| fi / (t.cos() * t.cos()))
            .collect();
        quad::cumulative_uniform(&jac, self.h)
    }
}

/// Solves `Q f = -f'' + W f = g` on the grid with `f(0) = a`, `f'(0) = b`:
/// `f = -(∫_0^v gM) Z + (∫_0^v gZ) M + a M + b Z`.
pub fn q_solve(grid: &ThetaGrid, g: &[f64], a: f64, b: f64, gamma: f64) -> Vec<f64> {
    assert_eq!(g.len(), grid.v.len());
    let m: Vec<f64> = grid.v.iter().map(|&v| equilibrium_m(v, gamma)).collect();
    let z: Vec<f64> = grid.v.iter().map(|&v| weight_z(v, gamma)).collect();
    let gm: Vec<f64> = g.iter().zip(&m).map(|(x, y)| x * y).collect();
    let gz: Vec<f64> = g.iter().zip(&z).map(|(x, y)| x * y).collect();
    let igm = grid.cumulative(&gm);
    let igz = grid.cumulative(&gz);
    (0..g.len())
        .map(|i| -igm[i] * z[i] + igz[i] * m[i] + a * m[i] + b * z[i])
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fd_residual(f: impl Fn(f64) -> f64, v: f64, gamma: f64, h: f64) -> f64 {
        let d2 = (f(v + h) - 2.0 * f(v) + f(v - h)) / (h * h);
        -d2 + potential_w(v, gamma) * f(v)
    }

    #[test]
    fn normalization_constants() {
        assert!((c_beta_squared(3.0).unwrap() - 0.5).abs() < 1e-14);
        assert!((c_beta_squared(2.0).unwrap() - 1.0 / std::f64::consts::PI).abs() < 1e-14);
        for beta in [1.1, 1.5, 2.5, 3.7, 4.9] {
            let a = c_beta_squared(beta).unwrap();
            let b = c_beta_squared_closed(beta).unwrap();
            assert!(((a - b) / b).abs() < 1e-10, "{beta}: {a} {b}");
        }
        assert!(matches!(c_beta_squared(1.0), Err(Error::NonIntegrable(_))));
    }

    #[test]
    fn params_validation() {
        assert!(ModelParams::new(2.5).is_ok());
        for bad in [0.5, 1.0, 2.0, 3.0, 4.0, 5.0, 6.0] {
            assert!(ModelParams::new(bad).is_err(), "{bad}");
        }
        let p = ModelParams::new(2.5).unwrap();
        assert!((p.alpha - 7.0 / 6.0).abs() < 1e-15);
    }

    #[test]
    fn potential_values() {
        assert!((potential_w(0.0, 1.25) + 1.25).abs() < 1e-15);
        assert!((potential_w(1.0, 1.25) - 0.390625).abs() < 1e-15);
        assert!((1e6 * potential_w(1e3, 1.25) - 2.8125).abs() < 1e-4);
        assert!((remainder_n(1.0, 1.25).unwrap() + 2.421875).abs() < 1e-14);
        assert!(remainder_n(0.0, 1.25).is_err());
        for v in [0.1, 1.0, 7.0, 300.0] {
            let g = 1.25;
            let r = remainder_n(v, g).unwrap() + g * (g + 1.0) / (v * v) - potential_w(v, g);
            assert!(r.abs() < 1e-14 * (1.0 + g * (g + 1.0) / (v * v)));
        }
    }

    #[test]
    fn kernel_elements() {
        let g = 1.25;
        for v in [0.5, 1.0, 2.0] {
            for h in [1e-2, 5e-3] {
                assert!(fd_residual(|x| equilibrium_m(x, g), v, g, h).abs() < 1e-4 * (h / 1e-2).powi(2));
                assert!(fd_residual(|x| weight_z(x, g), v, g, h).abs() < 1e-3 * (h / 1e-2).powi(2));
            }
        }
        let lim = 1.0 / (2.0 * g + 1.0);
        for v in [1e3, 1e4] {
            let r = weight_z(v, g) / v.powf(g + 1.0);
            assert!((r - lim).abs() < 0.01 * lim);
        }
        assert!((weight_z_prime(0.0, g) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn q_solve_homogeneous() {
        let g = 1.25;
        let grid = ThetaGrid::new(50.0, 2001);
        let zero = vec![0.0; grid.v.len()];
        let f = q_solve(&grid, &zero, 1.0, 0.0, g);
        let z = q_solve(&grid, &zero, 0.0, 1.0, g);
        for (i, &v) in grid.v.iter().enumerate() {
            assert!((f[i] - equilibrium_m(v, g)).abs() < 1e-12);
            assert!((z[i] - weight_z(v, g)).abs() < 1e-12 * weight_z(v, g).max(1.0));
        }
    }
}
