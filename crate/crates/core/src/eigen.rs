//! The principal eigenvalue `μ(η)` of `-∂² + W + iηv` on the line.
//!
//! Two independent routes: the connection condition
//! `ψ(λ) = b(λ,η) + conj(b(conj λ, η)) = 0` with `μ = λη^{2/3}`, and inverse
//! iteration on the flux-form finite-difference matrix with Richardson
//! extrapolation. Also the closed form `κ(β)` of `μ ~ κη^α` and a
//! log-log fit for measured sweeps.

use rayon::prelude::*;
use serde::Serialize;

use crate::connection::d_zero_closed;
use crate::fd::{norm2, FluxGrid};
use crate::halfline::{build_g, HalfLineSolution};
use crate::model::{validate_beta, ModelParams};
use crate::specfun::gamma;
use crate::{worker_pool, Error, Result, C64};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Connection,
    Matrix,
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Method::Connection => "connection",
            Method::Matrix => "matrix",
        })
    }
}

/// Sampled eigenfunction, normalised to 1 at `v = 0`.
#[derive(Debug, Clone, Serialize)]
pub struct Eigenfunction {
    pub v: Vec<f64>,
    pub values: Vec<C64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct EigenResult {
    pub eta: f64,
    pub mu: C64,
    pub method: Method,
    /// `μη^{-2/3}`.
    pub lambda: C64,
    pub eigenfunction: Option<Eigenfunction>,
    /// `|ψ(λ)|` for the connection route; `‖(A - μ)x‖/‖x‖` for the matrix.
    pub residual: f64,
    pub iterations: usize,
    /// Relative change between the two resolutions (matrix route only).
    pub resolution: Option<f64>,
}

/// `κ(β) = 2C_β²(β+1) 9^{-α} cos(πα/2) Γ(1-α)/Γ(1+α)`, `α = (β+1)/3`.
pub fn kappa_closed(beta: f64) -> Result<f64> {
    validate_beta(beta)?;
    let p = ModelParams::new(beta)?;
    let a = p.alpha;
    Ok(2.0 * p.c_beta_sq
        * (beta + 1.0)
        * 9f64.powf(-a)
        * (std::f64::consts::FRAC_PI_2 * a).cos()
        * gamma::gamma(1.0 - a)?
        / gamma::gamma(1.0 + a)?)
}

/// `-2C_β²(2γ+1) Re d(0)`, which equals [`kappa_closed`].
pub fn kappa_from_d_zero(beta: f64) -> Result<f64> {
    let p = ModelParams::new(beta)?;
    Ok(-2.0 * p.c_beta_sq * (2.0 * p.gamma + 1.0) * d_zero_closed(p.gamma)?.re)
}

/// `ψ(λ) = b(λ,η) + conj(b(conj λ, η))`; `2 Re b` for real `λ`.
pub fn connection_function(lambda: C64, eta: f64, params: &ModelParams) -> Result<C64> {
    let b = build_g(lambda, eta, params)?.b_coeff;
    if lambda.im == 0.0 {
        return Ok(C64::new(2.0 * b.re, 0.0));
    }
    Ok(b + build_g(lambda.conj(), eta, params)?.b_coeff.conj())
}

/// `λ = -2C_β² Re b(0,η) η^{-2/3}`.
pub fn lambda_seed(eta: f64, params: &ModelParams) -> Result<f64> {
    let b0 = build_g(C64::new(0.0, 0.0), eta, params)?.b_coeff;
    Ok(-2.0 * params.c_beta_sq * b0.re * eta.abs().powf(-2.0 / 3.0))
}

const NEWTON_MAX: usize = 40;
const NEWTON_TOL: f64 = 1e-12;

fn newton(eta: f64, params: &ModelParams, seed: C64) -> Result<(C64, C64, usize)> {
    let lambda0 = params.lambda0;
    let mut lam = seed;
    if lam.norm() > lambda0 {
        return Err(Error::OutOfDisc { lambda: lam, radius: lambda0 });
    }
    let mut f = connection_function(lam, eta, params)?;
    for it in 1..=NEWTON_MAX {
        let step_fd = 1e-6 * lam.norm().max(1e-3);
        let fp = connection_function(lam + step_fd, eta, params)?;
        let fm = connection_function(lam - step_fd, eta, params)?;
        let df = (fp - fm) / (2.0 * step_fd);
        if df.norm() == 0.0 || !df.is_finite() {
            return Err(Error::Convergence(format!("flat connection function at lambda = {lam}")));
        }
        let mut delta = -f / df;
        let mut accepted = None;
        for _ in 0..30 {
            let cand = lam + delta;
            if cand.norm() <= lambda0 {
                let fc = connection_function(cand, eta, params)?;
                if fc.norm() < f.norm() || delta.norm() <= NEWTON_TOL * lam.norm().max(1e-8) {
                    accepted = Some((cand, fc));
                    break;
                }
            }
            delta *= 0.5;
        }
        let Some((cand, fc)) = accepted else {
            if (lam + delta).norm() > lambda0 {
                return Err(Error::OutOfDisc {
                    lambda: lam - f / df,
                    radius: lambda0,
                });
            }
            return Err(Error::Convergence(format!("damped Newton stalled at lambda = {lam}, |psi| = {}", f.norm())));
        };
        let moved = (cand - lam).norm();
        lam = cand;
        f = fc;
        if moved <= NEWTON_TOL * lam.norm().max(1e-8) || f.norm() == 0.0 {
            return Ok((lam, f, it));
        }
    }
    Err(Error::Convergence(format!("Newton did not converge in {NEWTON_MAX} steps, lambda = {lam}")))
}

/// Root of the connection condition by damped Newton from the leading-order
/// seed, with continuation from `2η` as fallback.
pub fn solve_mu_connection(eta: f64, params: &ModelParams) -> Result<EigenResult> {
    if eta == 0.0 || !eta.is_finite() || eta.abs() > params.eta0 {
        return Err(Error::Domain(format!(
            "connection method needs 0 < |eta| <= {}, got {eta}",
            params.eta0
        )));
    }
    let seed = C64::new(lambda_seed(eta, params)?, 0.0);
    let (lam, f, iterations) = match newton(eta, params, seed) {
        Ok(r) => r,
        Err(first) => {
            let mut out = Err(first);
            if 2.0 * eta.abs() <= params.eta0 {
                if let Ok(coarse) = solve_mu_connection(2.0 * eta, params) {
                    let scale = 2f64.powf(-(params.beta - 1.0) / 3.0);
                    out = newton(eta, params, coarse.lambda * scale);
                }
            }
            out?
        }
    };
    let mu = lam * eta.abs().powf(2.0 / 3.0);
    let sol = build_g(lam, eta, params)?;
    Ok(EigenResult {
        eta,
        mu,
        method: Method::Connection,
        lambda: lam,
        eigenfunction: Some(connection_eigenfunction(&sol)),
        residual: f.norm(),
        iterations,
        resolution: None,
    })
}

/// `aG(v)` for `v ≥ 0` mirrored by `conj(aG(-v))`, valid at a real root.
fn connection_eigenfunction(sol: &HalfLineSolution) -> Eigenfunction {
    let j = sol.normalized();
    let mut v: Vec<f64> = sol.v_grid.iter().rev().map(|x| -x).collect();
    let mut values: Vec<C64> = j.iter().rev().map(|z| z.conj()).collect();
    v.extend(sol.v_grid.iter().skip(1));
    values.extend(j.iter().skip(1));
    Eigenfunction { v, values }
}

/// Single-resolution matrix eigenpair.
#[derive(Debug, Clone)]
pub struct MatrixEigenpair {
    pub grid: FluxGrid,
    pub mu: C64,
    /// Normalised to 1 at `v = 0`.
    pub vector: Vec<C64>,
    pub residual: f64,
    pub iterations: usize,
}

/// Default half-width `V = 16 max(1, |η|^{-1/3})`.
pub fn default_v_max(eta: f64) -> f64 {
    16.0 * eta.abs().powf(-1.0 / 3.0).max(1.0)
}

/// Default number of cells.
pub const DEFAULT_GRID: usize = 1 << 14;

/// Smallest-modulus eigenpair of the flux-form matrix by inverse iteration
/// at shift 0, retried with a small shift if the factorisation is singular.
pub fn matrix_eigenpair(eta: f64, v_max: f64, n_grid: usize, gamma: f64) -> Result<MatrixEigenpair> {
    let grid = FluxGrid::new(v_max, n_grid, gamma)?;
    let a = grid.operator(eta, C64::new(0.0, 0.0));
    let shifts = [C64::new(0.0, 0.0), C64::new(1e-9, 1e-9), C64::new(-3e-8, 2e-8)];
    let mut last_err = None;
    for &s in &shifts {
        let lu = match a.affine(-s, C64::new(1.0, 0.0)).factor(1e-15) {
            Ok(lu) => lu,
            Err(e) => {
                last_err = Some(e);
                continue;
            }
        };
        let mut x: Vec<C64> = grid.m.iter().map(|&m| C64::new(m, 0.0)).collect();
        let nrm = norm2(&x);
        x.iter_mut().for_each(|z| *z /= nrm);
        let mut mu_old = C64::new(f64::INFINITY, 0.0);
        let mut step_old = f64::INFINITY;
        for it in 1..=500 {
            let y = lu.solve(&x);
            // x^T x / x^T A^{-1} x stays accurate when μ is small against ‖A‖
            let xy: C64 = x.iter().zip(&y).map(|(p, q)| p * q).sum();
            let xx: C64 = x.iter().map(|z| z * z).sum();
            let mu = s + xx / xy;
            let nrm = norm2(&y);
            if !nrm.is_finite() || nrm == 0.0 || !mu.is_finite() {
                break;
            }
            x = y.iter().map(|z| z / nrm).collect();
            let step = (mu - mu_old).norm();
            let scale = mu.norm().max(1e-300);
            let settled = step <= 1e-14 * scale || (it > 20 && step <= 1e-11 * scale && step >= step_old);
            mu_old = mu;
            step_old = step;
            if settled && it > 2 {
                let ax = a.matvec(&x);
                let r: Vec<C64> = ax.iter().zip(&x).map(|(p, q)| p - mu * q).collect();
                let residual = norm2(&r) / norm2(&x);
                let z0 = grid.value_at_zero(&x);
                let vector = x.iter().map(|z| z / z0).collect();
                return Ok(MatrixEigenpair {
                    grid,
                    mu,
                    vector,
                    residual,
                    iterations: it,
                });
            }
        }
        last_err = Some(Error::Convergence(format!("inverse iteration stagnated at shift {s}")));
    }
    Err(last_err.unwrap_or_else(|| Error::Convergence("inverse iteration failed".into())))
}

/// Richardson combination of `n_grid` and `2 n_grid` cells.
pub fn solve_mu_matrix(eta: f64, v_max: f64, n_grid: usize, gamma: f64) -> Result<EigenResult> {
    if n_grid < 1024 {
        return Err(Error::Domain(format!("matrix oracle needs n_grid >= 1024, got {n_grid}")));
    }
    let need = 10.0 * eta.abs().powf(-1.0 / 3.0).max(1.0);
    if v_max < need {
        return Err(Error::Domain(format!("matrix oracle needs v_max >= {need}, got {v_max}")));
    }
    let (coarse, fine) = rayon::join(
        || matrix_eigenpair(eta, v_max, n_grid, gamma),
        || matrix_eigenpair(eta, v_max, 2 * n_grid, gamma),
    );
    let (coarse, fine) = (coarse?, fine?);
    let mu = (4.0 * fine.mu - coarse.mu) / 3.0;
    let mismatch = (fine.mu - coarse.mu).norm() / mu.norm().max(1e-300);
    let tol = 1e-3;
    if mismatch > tol && mu.norm() > 1e-12 {
        return Err(Error::Resolution {
            what: format!("matrix eigenvalue at eta = {eta}"),
            mismatch,
            tol,
        });
    }
    let lambda = if eta == 0.0 { C64::new(0.0, 0.0) } else { mu * eta.abs().powf(-2.0 / 3.0) };
    Ok(EigenResult {
        eta,
        mu,
        method: Method::Matrix,
        lambda,
        eigenfunction: Some(Eigenfunction {
            v: fine.grid.v.clone(),
            values: fine.vector.clone(),
        }),
        residual: fine.residual,
        iterations: coarse.iterations + fine.iterations,
        resolution: Some(mismatch),
    })
}

/// `max_v |ψ(-v) - conj ψ(v)|` for an eigenfunction with `ψ(0) = 1`.
pub fn reflection_defect(f: &Eigenfunction) -> f64 {
    let n = f.values.len();
    (0..n)
        .map(|i| (f.values[n - 1 - i] - f.values[i].conj()).norm())
        .fold(0.0, f64::max)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ScalingFit {
    pub exponent: f64,
    pub prefactor: f64,
    pub r_squared: f64,
}

/// Least-squares line through `(log η, log Re μ)`.
pub fn fit_scaling(points: &[(f64, C64)]) -> Result<ScalingFit> {
    if points.len() < 4 {
        return Err(Error::InvalidPoint(format!("need at least 4 points, got {}", points.len())));
    }
    for &(eta, mu) in points {
        if !(eta > 0.0) || !(mu.re > 0.0) {
            return Err(Error::InvalidPoint(format!("eta = {eta}, mu = {mu}")));
        }
    }
    let xs: Vec<f64> = points.iter().map(|p| p.0.ln()).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.1.re.ln()).collect();
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::InvalidPoint("all eta equal".into()));
    }
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let icpt = my - slope * mx;
    let ss_tot: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    let ss_res: f64 = xs.iter().zip(&ys).map(|(x, y)| (y - icpt - slope * x).powi(2)).sum();
    let r_squared = if ss_tot == 0.0 { 1.0 } else { 1.0 - ss_res / ss_tot };
    Ok(ScalingFit {
        exponent: slope,
        prefactor: icpt.exp(),
        r_squared,
    })
}

/// `n` geometrically spaced values from `lo` to `hi` inclusive.
pub fn geometric_etas(lo: f64, hi: f64, n: usize) -> Result<Vec<f64>> {
    if !(lo > 0.0 && hi > lo) || n < 2 {
        return Err(Error::Domain(format!("bad sweep range [{lo}, {hi}] with {n} points")));
    }
    let r = (hi / lo).ln() / (n - 1) as f64;
    Ok((0..n).map(|i| lo * (r * i as f64).exp()).collect())
}

/// Connection-method sweep over `etas`, evaluated concurrently and returned
/// in input order.
pub fn sweep(etas: &[f64], params: &ModelParams) -> Result<Vec<EigenResult>> {
    let pool = worker_pool();
    let out: Vec<Result<EigenResult>> =
        pool.install(|| etas.par_iter().map(|&e| solve_mu_connection(e, params)).collect());
    out.into_iter().collect()
}
