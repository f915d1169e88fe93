//! Half-line solution of the full problem
//! `G'' = (W(v) + iηv - λη^{2/3}) G`, `v > 0`, decaying at infinity.
//!
//! Far out, `G = Θ(1 + R)` with `Θ(v) = η^{γ/3} H_λ(η^{1/3} v)` the rescaled
//! model solution and `R` the Volterra fixed point driven by
//! `N = W - γ(γ+1)/v²`. The solution is carried to `v = 0` by collocation,
//! where `a = 1/G(0)` and `b = G'(0)/G(0)` are read off.

use serde::Serialize;

use crate::connection::{build_h, ConnectionSolution};
use crate::model::{equilibrium_m, potential_w, remainder_n_unchecked, ModelParams};
use crate::neumann::{TailOperator, NORM_LIMIT, TERM_TOL};
use crate::panel::PanelGrid;
use crate::quad::GaussLegendre;
use crate::{Error, Result, C64, I};

/// Smallest admissible start of the integral-equation region.
pub const V0_MIN: f64 = 5.0;
/// Right end used when `η = 0`, where `Θ = v^{-γ}`.
pub const V_MAX_ZERO_ETA: f64 = 1e4;
const ORDER: usize = 18;

/// The rescaled model solution `Θ_{λ,η}`.
#[derive(Debug, Clone)]
pub struct Theta {
    pub lambda: C64,
    pub eta: f64,
    pub gamma: f64,
    h: Option<ConnectionSolution>,
}

impl Theta {
    /// `η > 0` builds `H_λ`; `η = 0` is the limit `v^{-γ}`.
    pub fn new(lambda: C64, eta: f64, gamma: f64) -> Result<Self> {
        if eta < 0.0 {
            return Err(Error::Domain(format!("Theta needs eta >= 0, got {eta}")));
        }
        let h = if eta > 0.0 { Some(build_h(lambda, gamma)?) } else { None };
        Ok(Self {
            lambda,
            eta,
            gamma,
            h,
        })
    }

    pub fn from_connection(h: ConnectionSolution, eta: f64) -> Self {
        Self {
            lambda: h.lambda,
            eta,
            gamma: h.gamma,
            h: Some(h),
        }
    }

    pub fn connection(&self) -> Option<&ConnectionSolution> {
        self.h.as_ref()
    }

    /// Largest `v` at which `Θ` is available.
    pub fn v_max(&self) -> f64 {
        match &self.h {
            Some(h) => h.s_max() * self.eta.powf(-1.0 / 3.0),
            None => f64::INFINITY,
        }
    }

    /// `(Θ(v), Θ'(v))`.
    pub fn eval_with_derivative(&self, v: f64) -> Result<(C64, C64)> {
        if !(v > 0.0) {
            return Err(Error::Domain(format!("Theta evaluated at v = {v}")));
        }
        match &self.h {
            None => {
                let t = v.powf(-self.gamma);
                Ok((C64::new(t, 0.0), C64::new(-self.gamma * t / v, 0.0)))
            }
            Some(h) => {
                let e3 = self.eta.cbrt();
                let scale = self.eta.powf(self.gamma / 3.0);
                let (hv, dh) = h.eval_with_derivative(e3 * v)?;
                Ok((hv * scale, dh * scale * e3))
            }
        }
    }

    pub fn eval(&self, v: f64) -> Result<C64> {
        self.eval_with_derivative(v).map(|(t, _)| t)
    }
}

/// `Θ_{λ,η}(v) = η^{γ/3} H_λ(η^{1/3} v)`.
pub fn theta(lambda: C64, eta: f64, v: f64, params: &ModelParams) -> Result<C64> {
    Theta::new(lambda, eta, params.gamma)?.eval(v)
}

/// `G_{λ,η}` on `[0, v_max]` with its boundary data at `v = 0`.
#[derive(Debug, Clone, Serialize)]
pub struct HalfLineSolution {
    pub lambda: C64,
    pub eta: f64,
    pub gamma: f64,
    pub v_grid: Vec<f64>,
    pub g_values: Vec<C64>,
    pub g0: C64,
    pub g0_prime: C64,
    pub a_coeff: C64,
    pub b_coeff: C64,
    pub residual: f64,
    pub v0: f64,
    pub v_max: f64,
    pub kernel_norm: f64,
    #[serde(skip)]
    near: Option<PanelGrid>,
    #[serde(skip)]
    near_y: Vec<C64>,
    #[serde(skip)]
    near_dy: Vec<C64>,
    #[serde(skip)]
    far: Option<PanelGrid>,
    #[serde(skip)]
    far_y: Vec<C64>,
    #[serde(skip)]
    far_dy: Vec<C64>,
    conjugated: bool,
}

fn far_breaks(eta: f64, v_lo: f64, v_hi: f64) -> Vec<f64> {
    if eta == 0.0 {
        return PanelGrid::adaptive_breaks(v_lo, v_hi, |v| 0.3 * v);
    }
    let e3 = eta.cbrt();
    PanelGrid::adaptive_breaks(v_lo, v_hi, |v| {
        let s = e3 * v;
        (0.15 * v).min((0.5f64).min(1.5 / s.sqrt()) / e3)
    })
}

/// Builds `G_{λ,η}`; negative `η` uses `G_{λ,-η} = conj(G_{conj λ, η})`.
pub fn build_g(lambda: C64, eta: f64, params: &ModelParams) -> Result<HalfLineSolution> {
    if eta < 0.0 {
        let mut sol = build_g(lambda.conj(), -eta, params)?;
        sol.conjugate();
        return Ok(sol);
    }
    let th = Theta::new(lambda, eta, params.gamma)?;
    build_g_with_theta(&th, params)
}

/// As [`build_g`] with a prebuilt `Θ` (`η ≥ 0`).
pub fn build_g_with_theta(th: &Theta, params: &ModelParams) -> Result<HalfLineSolution> {
    let (lambda, eta, gamma) = (th.lambda, th.eta, params.gamma);
    let v_max = if eta == 0.0 { V_MAX_ZERO_ETA } else { th.v_max() };
    if v_max <= 2.0 * V0_MIN {
        return Err(Error::Domain(format!(
            "eta = {eta} too large: Theta only reaches v = {v_max}"
        )));
    }
    let grid = PanelGrid::new(far_breaks(eta, 1.0, v_max), ORDER);
    let nodes = grid.nodes();
    let mut theta = Vec::with_capacity(nodes.len());
    let mut dtheta = Vec::with_capacity(nodes.len());
    for &v in &nodes {
        let (t, dt) = th.eval_with_derivative(v)?;
        theta.push(t);
        dtheta.push(dt);
    }
    let q: Vec<f64> = nodes.iter().map(|&v| remainder_n_unchecked(v, gamma)).collect();
    let full = TailOperator::new(grid, theta, q);
    let (k0, norm) = full.contraction_start(NORM_LIMIT, V0_MIN).ok_or(Error::ContractionNotMet {
        at: V0_MIN,
        norm: f64::NAN,
        limit: NORM_LIMIT,
    })?;
    let op = full.restrict(k0);
    let npp = op.grid.per_panel();
    let dtheta = &dtheta[k0 * npp..];
    let v0 = op.grid.start();
    let sol = op.solve(TERM_TOL, 400)?;
    let far_y: Vec<C64> = (0..op.nodes.len()).map(|i| op.theta[i] * (1.0 + sol.r[i])).collect();
    let far_dy: Vec<C64> = (0..op.nodes.len())
        .map(|i| dtheta[i] * (1.0 + sol.r[i]) + op.theta[i] * sol.dr[i])
        .collect();

    let mu = lambda * eta.powf(2.0 / 3.0);
    let near = PanelGrid::new(PanelGrid::adaptive_breaks(0.0, v0, |_| 0.25), ORDER);
    let c: Vec<C64> = near
        .nodes()
        .iter()
        .map(|&v| potential_w(v, gamma) + I * eta * v - mu)
        .collect();
    let (near_y, near_dy) = near.solve_backward(&c, far_y[0], far_dy[0])?;
    let g0 = near_y[0];
    let g0_prime = near_dy[0];
    let scale = near_y.iter().fold(0.0f64, |m, x| m.max(x.norm()));
    if !(g0.norm() > 1e-12 * scale) {
        return Err(Error::DegenerateNormalization(g0.norm()));
    }
    let a = 1.0 / g0;

    let mut v_grid = near.nodes();
    v_grid.extend(op.nodes.iter().copied());
    let mut g_values = near_y.clone();
    g_values.extend(far_y.iter().copied());

    let mut out = HalfLineSolution {
        lambda,
        eta,
        gamma,
        v_grid,
        g_values,
        g0,
        g0_prime,
        a_coeff: a,
        b_coeff: a * g0_prime,
        residual: 0.0,
        v0,
        v_max,
        kernel_norm: norm,
        near: Some(near),
        near_y,
        near_dy,
        far: Some(op.grid),
        far_y,
        far_dy,
        conjugated: false,
    };
    out.residual = out.ode_residual();
    Ok(out)
}

impl HalfLineSolution {
    fn conjugate(&mut self) {
        self.lambda = self.lambda.conj();
        self.eta = -self.eta;
        for v in [
            &mut self.g_values,
            &mut self.near_y,
            &mut self.near_dy,
            &mut self.far_y,
            &mut self.far_dy,
        ] {
            for x in v.iter_mut() {
                *x = x.conj();
            }
        }
        self.g0 = self.g0.conj();
        self.g0_prime = self.g0_prime.conj();
        self.a_coeff = self.a_coeff.conj();
        self.b_coeff = self.b_coeff.conj();
        self.conjugated = !self.conjugated;
    }

    /// `(G(v), G'(v))` for `0 ≤ v ≤ v_max`.
    pub fn eval_with_derivative(&self, v: f64) -> Result<(C64, C64)> {
        if !(0.0..=self.v_max * (1.0 + 1e-12)).contains(&v) {
            return Err(Error::Domain(format!("G evaluated at v = {v}, outside [0, {}]", self.v_max)));
        }
        let (near, far) = match (&self.near, &self.far) {
            (Some(n), Some(f)) => (n, f),
            _ => return Err(Error::Domain("solution has no grid".into())),
        };
        if v <= self.v0 {
            Ok((near.interpolate(&self.near_y, v), near.interpolate(&self.near_dy, v)))
        } else {
            Ok((far.interpolate(&self.far_y, v), far.interpolate(&self.far_dy, v)))
        }
    }

    pub fn eval(&self, v: f64) -> Result<C64> {
        self.eval_with_derivative(v).map(|(g, _)| g)
    }

    /// `J = G/G(0)` at the grid nodes; `J(0) = 1` exactly.
    pub fn normalized(&self) -> Vec<C64> {
        let mut j: Vec<C64> = self.g_values.iter().map(|g| g * self.a_coeff).collect();
        j[0] = C64::new(1.0, 0.0);
        j
    }

    /// Max relative residual `|G'' - cG| / (|G''| + |cG|)` at the nodes.
    pub fn ode_residual(&self) -> f64 {
        let eta = self.eta;
        let mu = self.lambda * eta.abs().powf(2.0 / 3.0);
        let mut worst: f64 = 0.0;
        for (grid, y, dy) in [
            (self.near.as_ref(), &self.near_y, &self.near_dy),
            (self.far.as_ref(), &self.far_y, &self.far_dy),
        ] {
            let Some(grid) = grid else { continue };
            let d2 = grid.derivative(dy);
            for (i, &v) in grid.nodes().iter().enumerate() {
                let cy = (potential_w(v, self.gamma) + I * eta * v - mu) * y[i];
                let den = d2[i].norm() + cy.norm();
                if den > 1e-250 {
                    worst = worst.max((d2[i] - cy).norm() / den);
                }
            }
        }
        worst
    }

    /// `sup_v |G(v)| / M(v)` over the nodes.
    pub fn sup_ratio_to_m(&self) -> f64 {
        self.v_grid
            .iter()
            .zip(&self.g_values)
            .map(|(&v, g)| g.norm() / equilibrium_m(v, self.gamma))
            .fold(0.0, f64::max)
    }

    /// `sup_v |G(v) - M(v)|` over the nodes.
    pub fn sup_distance_to_m(&self) -> f64 {
        self.v_grid
            .iter()
            .zip(&self.g_values)
            .map(|(&v, g)| (g - equilibrium_m(v, self.gamma)).norm())
            .fold(0.0, f64::max)
    }

    /// `∫_0^{v_max} f(v, G(v))` over the solution's own panels.
    pub fn integrate(&self, f: impl Fn(f64, C64) -> C64) -> C64 {
        let mut total = C64::new(0.0, 0.0);
        for (grid, y) in [(self.near.as_ref(), &self.near_y), (self.far.as_ref(), &self.far_y)] {
            let Some(grid) = grid else { continue };
            let vals: Vec<C64> = grid.nodes().iter().zip(y.iter()).map(|(&v, &g)| f(v, g)).collect();
            total += grid.integral(&vals);
        }
        total
    }
}

/// `b = a η^{2/3} ∫_0^∞ (λ - iη^{1/3} v) G M dv`.
pub fn coeff_b_integral(lambda: C64, eta: f64, sol: &HalfLineSolution) -> Result<C64> {
    if (sol.eta - eta).abs() > 1e-15 * eta.abs().max(1.0) || (sol.lambda - lambda).norm() > 1e-15 {
        return Err(Error::Domain("solution was built for a different (lambda, eta)".into()));
    }
    if eta == 0.0 {
        return Ok(C64::new(0.0, 0.0));
    }
    let sign = eta.signum();
    let e = eta.abs();
    let e3 = e.cbrt();
    let mu = lambda * e.powf(2.0 / 3.0);
    let gamma = sol.gamma;
    let integral = sol.integrate(|v, g| (mu - I * sign * e * v) * g * equilibrium_m(v, gamma));
    // the part beyond v_max decays like the Airy factor squared
    let tail = sol.g_values.last().map(|g| g.norm()).unwrap_or(0.0) * equilibrium_m(sol.v_max, gamma);
    if tail * sol.v_max * e > 1e-13 * integral.norm().max(1e-300) {
        return Err(Error::Truncation {
            s: sol.v_max * e3,
            radius: sol.v_max,
        });
    }
    Ok(sol.a_coeff * integral)
}

/// Sup-norms of `Q[f] - η² v l` and `Q[l] + v f` with `f = Re J`,
/// `l = Im J / η`, `J = aG`, by central differences of step `h` on `[h, v_end]`.
pub fn fl_decomposition_residual(eta: f64, sol: &HalfLineSolution, h: f64, v_end: f64) -> Result<(f64, f64)> {
    if sol.lambda.norm() != 0.0 {
        return Err(Error::Domain("f/l decomposition needs lambda = 0".into()));
    }
    let v_end = v_end.min(sol.v_max - h);
    let n = (v_end / h).floor() as usize;
    let j: Vec<C64> = (0..=n + 1)
        .map(|i| sol.eval(i as f64 * h).map(|g| g * sol.a_coeff))
        .collect::<Result<_>>()?;
    let (mut rf, mut rl) = (0.0f64, 0.0f64);
    for i in 1..=n {
        let v = i as f64 * h;
        let w = potential_w(v, sol.gamma);
        let d2 = (j[i + 1] - 2.0 * j[i] + j[i - 1]) / (h * h);
        let qf = -d2.re + w * j[i].re;
        rf = rf.max((qf - eta * v * j[i].im).abs());
        if eta != 0.0 {
            let ql = (-d2.im + w * j[i].im) / eta;
            rl = rl.max((ql + v * j[i].re).abs());
        }
    }
    Ok((rf, rl))
}

/// `max |∫_v^w Θ²(w)/Θ²(u) du| / w` over sample pairs `v < w`.
pub fn theta_kernel_bound(th: &Theta, samples: &[f64]) -> Result<f64> {
    let gl = GaussLegendre::new(24);
    let mut worst: f64 = 0.0;
    for (i, &v) in samples.iter().enumerate() {
        for &w in &samples[i + 1..] {
            if w <= v {
                continue;
            }
            let tw = th.eval(w)?;
            let tw2 = tw * tw;
            let breaks = PanelGrid::adaptive_breaks(v, w, |x| (0.25 * x).min(0.5 / th.eta.max(1e-300).cbrt()));
            let mut acc = C64::new(0.0, 0.0);
            for p in breaks.windows(2) {
                let mut err = None;
                let val = gl.integrate(
                    |u| match th.eval(u) {
                        Ok(t) => tw2 / (t * t),
                        Err(_) => C64::new(f64::NAN, 0.0),
                    },
                    p[0],
                    p[1],
                );
                if !val.is_finite() {
                    err = Some(Error::Domain(format!("Theta undefined on [{}, {}]", p[0], p[1])));
                }
                if let Some(e) = err {
                    return Err(e);
                }
                acc += val;
            }
            worst = worst.max(acc.norm() / w);
        }
    }
    Ok(worst)
}
