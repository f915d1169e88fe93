//! The model equation `H'' = (γ(γ+1)/s² + i s - λ) H` on `s > 0`.
//!
//! Its solution decaying at infinity is built as
//! `H̃ = Ai(e^{iπ/6}(s + iλ)) (1 + R_λ)` on `[s₀, s_max]`, with `R_λ` the
//! Volterra fixed point, continued to `s_m` by collocation, and matched to
//! the Frobenius basis `{s^{-γ}F_{+,λ}, s^{γ+1}F_{-,λ}}`:
//! `H̃ = a (s^{-γ}F_{+,λ} + d(λ) s^{γ+1}F_{-,λ})`. The stored solution is
//! `H = H̃ / a`.

use std::f64::consts::PI;

use serde::Serialize;

use crate::neumann::{TailOperator, NORM_LIMIT, TERM_TOL};
use crate::panel::PanelGrid;
use crate::quad;
use crate::specfun::{airy_with_derivative, frobenius_series, gamma_complex, ComplexSeries, DEFAULT_TERMS};
use crate::{Error, Result, C64, I};

/// Numerical settings for [`build_h`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConnectionOptions {
    /// Matching point against the Frobenius basis.
    pub s_m: f64,
    /// Right end of the integral-equation region.
    pub s_max: f64,
    /// Smallest admissible start `s₀` of the integral-equation region.
    pub s0_min: f64,
    /// Lobatto order per panel.
    pub order: usize,
    /// Frobenius truncation order.
    pub n_terms: usize,
}

impl Default for ConnectionOptions {
    fn default() -> Self {
        Self {
            s_m: 0.5,
            s_max: 30.0,
            s0_min: 1.0,
            order: 18,
            n_terms: DEFAULT_TERMS,
        }
    }
}

/// `H_λ` with its connection data.
#[derive(Debug, Clone)]
pub struct ConnectionSolution {
    pub lambda: C64,
    pub gamma: f64,
    /// Log-spaced sample abscissae on `(0, s_max]`.
    pub s_grid: Vec<f64>,
    pub h_values: Vec<C64>,
    /// Coefficient of `s^{-γ}F_{+,λ}` in the Airy-normalized solution.
    pub a_coeff: C64,
    pub d_coeff: C64,
    /// Max relative ODE residual over the collocated and integral regions.
    pub residual: f64,
    pub s0: f64,
    pub kernel_norm: f64,
    pub neumann_terms: usize,
    pub options: ConnectionOptions,
    plus: ComplexSeries,
    minus: ComplexSeries,
    near: PanelGrid,
    near_y: Vec<C64>,
    near_dy: Vec<C64>,
    far: PanelGrid,
    far_r: Vec<C64>,
    far_dr: Vec<C64>,
}

fn rotation() -> C64 {
    C64::from_polar(1.0, PI / 6.0)
}

/// `(G_λ(s), G_λ'(s))` with `G_λ(s) = Ai(e^{iπ/6}(s + iλ))`.
pub fn airy_ansatz(lambda: C64, s: f64) -> Result<(C64, C64)> {
    let rot = rotation();
    let (a, ap) = airy_with_derivative(rot * (s + I * lambda))?;
    Ok((a, rot * ap))
}

fn far_breaks(a: f64, b: f64) -> Vec<f64> {
    PanelGrid::adaptive_breaks(a, b, |s| (1.5 / s.sqrt()).min(0.5))
}

/// Builds `H_λ` for `γ = β/2`.
pub fn build_h(lambda: C64, gamma: f64) -> Result<ConnectionSolution> {
    build_h_with(lambda, gamma, ConnectionOptions::default())
}

pub fn build_h_with(lambda: C64, gamma: f64, opts: ConnectionOptions) -> Result<ConnectionSolution> {
    let gg = gamma * (gamma + 1.0);
    let start = opts.s0_min.max(opts.s_m + 0.5);
    let far_full = PanelGrid::new(far_breaks(start, opts.s_max), opts.order);
    let nodes = far_full.nodes();
    let mut theta = Vec::with_capacity(nodes.len());
    let mut dtheta = Vec::with_capacity(nodes.len());
    for &s in &nodes {
        let (g, gp) = airy_ansatz(lambda, s)?;
        theta.push(g);
        dtheta.push(gp);
    }
    let q: Vec<f64> = nodes.iter().map(|s| gg / (s * s)).collect();
    let op_full = TailOperator::new(far_full, theta, q);
    let (k0, norm) = op_full
        .contraction_start(NORM_LIMIT, start)
        .ok_or(Error::ContractionNotMet {
            at: opts.s_max,
            norm: f64::NAN,
            limit: NORM_LIMIT,
        })?;
    let op = op_full.restrict(k0);
    let npp = op.grid.per_panel();
    let dtheta: Vec<C64> = dtheta[k0 * npp..].to_vec();
    let s0 = op.grid.start();
    if s0 <= opts.s_m {
        return Err(Error::Matching {
            s_m: opts.s_m,
            cond: f64::NAN,
        });
    }
    let sol = op.solve(TERM_TOL, 400)?;

    let y0 = op.theta[0] * (1.0 + sol.r[0]);
    let dy0 = dtheta[0] * (1.0 + sol.r[0]) + op.theta[0] * sol.dr[0];

    let near = PanelGrid::new(PanelGrid::adaptive_breaks(opts.s_m, s0, |s| (0.5 * s).min(0.5)), opts.order);
    let near_nodes = near.nodes();
    let c: Vec<C64> = near_nodes.iter().map(|&s| gg / (s * s) + I * s - lambda).collect();
    // the collocation runs right to left and ends at s_m
    let (y, dy) = near.solve_backward(&c, y0, dy0)?;

    let plus = frobenius_series(lambda, -gamma, opts.n_terms)?;
    let minus = frobenius_series(lambda, gamma + 1.0, opts.n_terms)?;
    let (u1, du1) = plus.eval_with_derivative(opts.s_m)?;
    let (u2, du2) = minus.eval_with_derivative(opts.s_m)?;
    let det = u1 * du2 - u2 * du1;
    let scale = (u1.norm() + du1.norm()) * (u2.norm() + du2.norm());
    let cond = scale / det.norm();
    if !cond.is_finite() || cond > 1e12 {
        return Err(Error::Matching { s_m: opts.s_m, cond });
    }
    let a = (y[0] * du2 - dy[0] * u2) / det;
    let bt = (u1 * dy[0] - du1 * y[0]) / det;
    if a.norm() <= 1e-13 * (y[0].norm() / u1.norm()) || !a.is_finite() {
        return Err(Error::DegenerateConnection(a.norm()));
    }
    let d = bt / a;

    let inv = 1.0 / a;
    let near_y: Vec<C64> = y.iter().map(|v| v * inv).collect();
    let near_dy: Vec<C64> = dy.iter().map(|v| v * inv).collect();

    let mut out = ConnectionSolution {
        lambda,
        gamma,
        s_grid: Vec::new(),
        h_values: Vec::new(),
        a_coeff: a,
        d_coeff: d,
        residual: 0.0,
        s0,
        kernel_norm: norm,
        neumann_terms: sol.terms,
        options: opts,
        plus,
        minus,
        near,
        near_y,
        near_dy,
        far: op.grid,
        far_r: sol.r,
        far_dr: sol.dr,
    };
    out.residual = out.ode_residual()?;
    let n = 241;
    let (lo, hi) = (1e-2f64.ln(), opts.s_max.ln());
    out.s_grid = (0..n)
        .map(|i| (lo + (hi - lo) * i as f64 / (n - 1) as f64).exp())
        .collect();
    out.h_values = out
        .s_grid
        .iter()
        .map(|&s| out.eval(s))
        .collect::<Result<Vec<_>>>()?;
    Ok(out)
}

impl ConnectionSolution {
    pub fn s_m(&self) -> f64 {
        self.options.s_m
    }

    pub fn s_max(&self) -> f64 {
        self.options.s_max
    }

    /// `(H(s), H'(s))` for `0 < s ≤ s_max`.
    pub fn eval_with_derivative(&self, s: f64) -> Result<(C64, C64)> {
        if !(s > 0.0) || s > self.s_max() * (1.0 + 1e-12) {
            return Err(Error::Domain(format!(
                "H evaluated at s = {s}, outside (0, {}]",
                self.s_max()
            )));
        }
        if s <= self.s_m() {
            let (u1, du1) = self.plus.eval_with_derivative(s)?;
            let (u2, du2) = self.minus.eval_with_derivative(s)?;
            return Ok((u1 + self.d_coeff * u2, du1 + self.d_coeff * du2));
        }
        if s <= self.s0 {
            return Ok((
                self.near.interpolate(&self.near_y, s),
                self.near.interpolate(&self.near_dy, s),
            ));
        }
        let s = s.min(self.s_max());
        let (g, gp) = airy_ansatz(self.lambda, s)?;
        let r = self.far.interpolate(&self.far_r, s);
        let dr = self.far.interpolate(&self.far_dr, s);
        let inv = 1.0 / self.a_coeff;
        Ok((g * (1.0 + r) * inv, (gp * (1.0 + r) + g * dr) * inv))
    }

    pub fn eval(&self, s: f64) -> Result<C64> {
        self.eval_with_derivative(s).map(|(h, _)| h)
    }

    /// Max over the collocated and integral-equation nodes of
    /// `|H'' - c H| / (|H''| + |c H|)`, with `H''` from spectral differentiation.
    pub fn ode_residual(&self) -> Result<f64> {
        let gg = self.gamma * (self.gamma + 1.0);
        let mut worst: f64 = 0.0;
        let mut check = |grid: &PanelGrid, h: &[C64], dh: &[C64]| {
            let d2 = grid.derivative(dh);
            for (i, &s) in grid.nodes().iter().enumerate() {
                let ch = (gg / (s * s) + I * s - self.lambda) * h[i];
                let den = d2[i].norm() + ch.norm();
                if den > 0.0 {
                    worst = worst.max((d2[i] - ch).norm() / den);
                }
            }
        };
        check(&self.near, &self.near_y, &self.near_dy);
        let far_nodes = self.far.nodes();
        let mut h = Vec::with_capacity(far_nodes.len());
        let mut dh = Vec::with_capacity(far_nodes.len());
        for (i, &s) in far_nodes.iter().enumerate() {
            let (g, gp) = airy_ansatz(self.lambda, s)?;
            h.push(g * (1.0 + self.far_r[i]) / self.a_coeff);
            dh.push((gp * (1.0 + self.far_r[i]) + g * self.far_dr[i]) / self.a_coeff);
        }
        check(&self.far, &h, &dh);
        Ok(worst)
    }

    /// `∫_0^{s_max} s^{1-γ} Im H(s) ds`; the part below `s_m` is integrated
    /// term by term from the Frobenius expansion.
    pub fn weighted_imag_integral(&self) -> Result<f64> {
        let x = self.s_m();
        let g = self.gamma;
        // s^{1-γ} · s^{-γ} Σ g_n s^n: terms with Im g_n = 0 drop out
        let p0 = 2.0 - 2.0 * g;
        let mut head = 0.0;
        for (n, c) in self.plus.coeffs.iter().enumerate() {
            if c.im != 0.0 {
                let e = n as f64 + p0;
                if e <= 0.0 {
                    return Err(Error::Domain(format!(
                        "weighted imaginary integral diverges at 0 (term {n})"
                    )));
                }
                head += c.im * x.powf(e) / e;
            }
        }
        // s^{1-γ} · d s^{γ+1} F_-
        let mut tail = C64::new(0.0, 0.0);
        for (n, c) in self.minus.coeffs.iter().enumerate() {
            let e = n as f64 + 3.0;
            tail += c * x.powf(e) / e;
        }
        head += (self.d_coeff * tail).im;

        let f_near: Vec<f64> = self
            .near
            .nodes()
            .iter()
            .zip(&self.near_y)
            .map(|(s, h)| s.powf(1.0 - g) * h.im)
            .collect();
        let mid = self.near.integral(&f_near);
        let far_nodes = self.far.nodes();
        let mut f_far = Vec::with_capacity(far_nodes.len());
        for (i, &s) in far_nodes.iter().enumerate() {
            let (a, _) = airy_ansatz(self.lambda, s)?;
            f_far.push(s.powf(1.0 - g) * (a * (1.0 + self.far_r[i]) / self.a_coeff).im);
        }
        let far = self.far.integral(&f_far);
        Ok(head + mid + far)
    }

    /// `min |H|` over the sample grid.
    pub fn min_modulus(&self) -> f64 {
        self.h_values.iter().map(|h| h.norm()).fold(f64::INFINITY, f64::min)
    }

    /// `min |H(s)| / |Ai(e^{iπ/6}(s + iλ))|` over the sample grid. Unlike
    /// [`Self::min_modulus`] this is not dominated by the Airy decay, so a
    /// small value flags a near-zero of `H` rather than a far sample.
    pub fn min_relative_modulus(&self) -> Result<f64> {
        let mut m = f64::INFINITY;
        for (&s, h) in self.s_grid.iter().zip(&self.h_values) {
            let (a, _) = airy_ansatz(self.lambda, s)?;
            m = m.min(h.norm() / a.norm());
        }
        Ok(m)
    }
}

/// `d(0) = -e^{iπα/2} 9^{-α} Γ(1-α)/Γ(1+α)` with `α = (2γ+1)/3`.
pub fn d_zero_closed(gamma: f64) -> Result<C64> {
    let alpha = (2.0 * gamma + 1.0) / 3.0;
    if (alpha - 1.0).abs() < 1e-12 {
        return Err(Error::Pole {
            what: "d(0) closed form (removable at alpha = 1, limit -i pi/18)",
            at: format!("gamma = {gamma}"),
        });
    }
    let ratio = gamma_complex(C64::new(1.0 - alpha, 0.0))? / gamma_complex(C64::new(1.0 + alpha, 0.0))?;
    Ok(-C64::from_polar(1.0, PI * alpha / 2.0) * 9f64.powf(-alpha) * ratio)
}

/// Limit of `Re d(0)` as `α → 1`: `cos(πα/2)Γ(1-α) → π/2`, so `Re d(0) → -π/18`.
pub fn re_d_zero_at_alpha_one() -> f64 {
    -PI / 18.0
}

/// `max |∫_s^z G²(z)/G²(u) du| (1+|z|)^{1/2}` over sample pairs `s ≤ z`.
pub fn kernel_bound_check(lambda: C64, s_samples: &[f64]) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for (i, &s) in s_samples.iter().enumerate() {
        for &z in &s_samples[i..] {
            if z < s {
                continue;
            }
            let (gz, _) = airy_ansatz(lambda, z)?;
            let gz2 = gz * gz;
            let failed = std::cell::Cell::new(false);
            let f = |u: f64| match airy_ansatz(lambda, u) {
                Ok((g, _)) => gz2 / (g * g),
                Err(_) => {
                    failed.set(true);
                    C64::new(0.0, 0.0)
                }
            };
            let gl = quad::GaussLegendre::new(24);
            let val = if z > s {
                gl.integrate_panels(f, &PanelGrid::adaptive_breaks(s, z, |_| 0.5))
            } else {
                C64::new(0.0, 0.0)
            };
            if failed.get() {
                return Err(Error::Domain(format!("Airy ansatz undefined on [{s}, {z}] for lambda = {lambda}")));
            }
            worst = worst.max(val.norm() * (1.0 + z.abs()).sqrt());
        }
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn closed_form_sign_and_pole() {
        for beta in [1.2, 1.5, 2.5, 3.5, 4.5, 4.9] {
            let d = d_zero_closed(beta / 2.0).unwrap();
            assert!(d.re < 0.0, "{beta}: {d}");
        }
        assert!(d_zero_closed(1.0).is_err());
        // approach α → 1 from both sides
        for eps in [1e-4, -1e-4] {
            let g = 1.0 + 1.5 * eps;
            let d = d_zero_closed(g).unwrap();
            assert!((d.re - re_d_zero_at_alpha_one()).abs() < 1e-3);
        }
    }

    #[test]
    fn extracted_d_matches_closed_form() {
        let gamma = 1.25;
        let sol = build_h(C64::new(0.0, 0.0), gamma).unwrap();
        let d0 = d_zero_closed(gamma).unwrap();
        let rel = (sol.d_coeff - d0).norm() / d0.norm();
        assert!(rel < 1e-6, "{} vs {d0}: {rel:e}", sol.d_coeff);
        assert!(sol.residual < 1e-8, "{}", sol.residual);
    }

    #[test]
    fn kernel_bound_is_zero_on_diagonal() {
        let v = kernel_bound_check(C64::new(0.0, 0.0), &[3.0]).unwrap();
        assert_eq!(v, 0.0);
    }
}
