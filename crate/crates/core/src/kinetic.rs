//! One Fourier mode of the rescaled kinetic equation,
//! `∂_s ĝ = -ε^{-α}(-∂² + W + iεkv) ĝ` on `[-V, V]`, advanced by the
//! trapezoidal rule with one tridiagonal factorisation.
//!
//! The density `ρ̂ = C_β∫ĝM` is compared with the fractional heat law
//! `e^{-κ|k|^α s} ρ̂₀`; the moment `F̂ = C_β∫ĝM^η` against the principal
//! eigenfunction decays exactly like `e^{-sε^{-α}μ(εk)}`.

use std::sync::Arc;

use rayon::prelude::*;
use serde::Serialize;

use crate::eigen::{kappa_closed, matrix_eigenpair};
use crate::fd::FluxGrid;
use crate::{worker_pool, Error, ModelParams, Result, C64};

/// Default number of velocity cells.
pub const DEFAULT_GRID: usize = 1 << 14;
/// Tolerance of the step-halving check on `ρ̂`.
pub const STEP_TOL: f64 = 1e-6;

/// Step count keeping `τε^{-α}max(1,|k|) ≤ 1/150`, enough for the halving
/// check on the initial transient of smooth data.
pub fn default_steps(epsilon: f64, k: f64, s_final: f64, params: &ModelParams) -> usize {
    (150.0 * s_final * epsilon.powf(-params.alpha) * k.abs().max(1.0)).ceil().max(1.0) as usize
}

/// `V = max(50, 10(εk)^{-1/3})`.
pub fn kinetic_v_max(eta: f64) -> f64 {
    if eta == 0.0 {
        50.0
    } else {
        (10.0 * eta.abs().powf(-1.0 / 3.0)).max(50.0)
    }
}

/// Initial velocity profile `ĝ(0, v)`.
#[derive(Clone)]
pub enum InitialData {
    /// `ĝ₀ ∝ M`, scaled so the discrete `ρ̂₀` is exactly 1.
    Equilibrium,
    /// The principal eigenfunction `M^η` of the same grid, `M^η(0) = 1`.
    Eigenfunction,
    Custom(Arc<dyn Fn(f64) -> C64 + Send + Sync>),
}

impl std::fmt::Debug for InitialData {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            InitialData::Equilibrium => f.write_str("Equilibrium"),
            InitialData::Eigenfunction => f.write_str("Eigenfunction"),
            InitialData::Custom(_) => f.write_str("Custom"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KineticOptions {
    pub n_grid: usize,
    /// Override for `V`.
    pub v_max: Option<f64>,
    /// Rerun with half the step and compare `ρ̂`.
    pub check_halving: bool,
    /// Times the step may be halved again when the check fails.
    pub max_refinements: usize,
}

impl Default for KineticOptions {
    fn default() -> Self {
        Self {
            n_grid: DEFAULT_GRID,
            v_max: None,
            check_halving: true,
            max_refinements: 4,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ModeEvolution {
    pub k: f64,
    pub epsilon: f64,
    pub eta: f64,
    pub times: Vec<f64>,
    pub rho_hat: Vec<C64>,
    pub f_hat: Vec<C64>,
    /// `C_β∫|ĝ|M`, the `L¹` norm of the density.
    pub mass: Vec<f64>,
    pub reference: Vec<C64>,
    /// Principal eigenvalue of the velocity grid used.
    pub mu_grid: C64,
    pub v_max: f64,
    pub n_grid: usize,
    /// `max |ρ̂_τ - ρ̂_{τ/2}|` at common times, when checked.
    pub step_mismatch: Option<f64>,
    #[serde(skip)]
    pub final_state: Vec<C64>,
    #[serde(skip)]
    pub eigenfunction: Vec<C64>,
}

struct Setup {
    grid: FluxGrid,
    eig: Vec<C64>,
    mu: C64,
    g0: Vec<C64>,
}

fn setup(eta: f64, g0: &InitialData, params: &ModelParams, opts: &KineticOptions) -> Result<Setup> {
    let v_max = opts.v_max.unwrap_or_else(|| kinetic_v_max(eta));
    let (grid, eig, mu) = if eta == 0.0 {
        let grid = FluxGrid::new(v_max, opts.n_grid, params.gamma)?;
        let z0 = grid.value_at_zero(&grid.m.iter().map(|&m| C64::new(m, 0.0)).collect::<Vec<_>>());
        let eig = grid.m.iter().map(|&m| C64::new(m, 0.0) / z0).collect();
        (grid, eig, C64::new(0.0, 0.0))
    } else {
        let pair = matrix_eigenpair(eta, v_max, opts.n_grid, params.gamma)?;
        (pair.grid, pair.vector, pair.mu)
    };
    let cb = params.c_beta();
    let g0: Vec<C64> = match g0 {
        InitialData::Equilibrium => {
            let mass: f64 = cb * grid.h * grid.m.iter().map(|m| m * m).sum::<f64>();
            grid.m.iter().map(|&m| C64::new(m / mass, 0.0)).collect()
        }
        InitialData::Eigenfunction => eig.clone(),
        InitialData::Custom(f) => grid.v.iter().map(|&v| f(v)).collect(),
    };
    if g0.iter().any(|z| !z.is_finite()) {
        return Err(Error::Domain("initial data is not finite on the grid".into()));
    }
    Ok(Setup { grid, eig, mu, g0 })
}

struct Trace {
    rho: Vec<C64>,
    f: Vec<C64>,
    mass: Vec<f64>,
    last: Vec<C64>,
}

fn march(s: &Setup, eta: f64, rate: f64, s_final: f64, n_steps: usize, cb: f64) -> Result<Trace> {
    let tau = s_final / n_steps as f64;
    let a = s.grid.operator(eta, C64::new(0.0, 0.0));
    let half = C64::new(0.5 * tau * rate, 0.0);
    let lhs = a.affine(C64::new(1.0, 0.0), half).factor(1e-14)?;
    let rhs = a.affine(C64::new(1.0, 0.0), -half);
    let mut g = s.g0.clone();
    let record = |g: &[C64], t: &mut Trace| {
        t.rho.push(cb * s.grid.moment_m(g));
        t.f.push(cb * s.grid.pair(g, &s.eig));
        t.mass.push(cb * s.grid.h * g.iter().zip(&s.grid.m).map(|(z, m)| z.norm() * m).sum::<f64>());
    };
    let mut tr = Trace {
        rho: Vec::with_capacity(n_steps + 1),
        f: Vec::with_capacity(n_steps + 1),
        mass: Vec::with_capacity(n_steps + 1),
        last: Vec::new(),
    };
    record(&g, &mut tr);
    for _ in 0..n_steps {
        g = lhs.solve(&rhs.matvec(&g));
        record(&g, &mut tr);
    }
    tr.last = g;
    Ok(tr)
}

/// Evolves one mode with default grid options.
pub fn evolve_mode(
    k: f64,
    epsilon: f64,
    g0: &InitialData,
    s_final: f64,
    n_steps: usize,
    params: &ModelParams,
) -> Result<ModeEvolution> {
    evolve_mode_with(k, epsilon, g0, s_final, n_steps, params, &KineticOptions::default())
}

/// Crank–Nicolson march of `∂_s ĝ = -ε^{-α}(-∂² + W + iεkv)ĝ` over
/// `[0, s_final]`. With the halving check on, the step is refined until
/// `ρ̂` agrees with the half-step run to [`STEP_TOL`], up to
/// `opts.max_refinements` times; the finer run is returned.
pub fn evolve_mode_with(
    k: f64,
    epsilon: f64,
    g0: &InitialData,
    s_final: f64,
    n_steps: usize,
    params: &ModelParams,
    opts: &KineticOptions,
) -> Result<ModeEvolution> {
    if !(epsilon > 0.0) || !(s_final > 0.0) || n_steps == 0 || !k.is_finite() {
        return Err(Error::Domain(format!(
            "evolve_mode needs epsilon, s_final > 0 and n_steps >= 1 (epsilon = {epsilon}, s_final = {s_final}, n_steps = {n_steps})"
        )));
    }
    let eta = epsilon * k;
    let rate = epsilon.powf(-params.alpha);
    let cb = params.c_beta();
    let s = setup(eta, g0, params, opts)?;
    let mismatch = |c: &Trace, f: &Trace| {
        c.rho
            .iter()
            .enumerate()
            .map(|(i, r)| (r - f.rho[2 * i]).norm())
            .fold(0.0, f64::max)
    };
    let (fine, step_mismatch) = if opts.check_halving {
        let (c, f) = rayon::join(
            || march(&s, eta, rate, s_final, n_steps, cb),
            || march(&s, eta, rate, s_final, 2 * n_steps, cb),
        );
        let (mut coarse, mut fine) = (c?, f?);
        let mut n = 2 * n_steps;
        let mut m = mismatch(&coarse, &fine);
        for _ in 0..opts.max_refinements {
            if m <= STEP_TOL {
                break;
            }
            n *= 2;
            coarse = std::mem::replace(&mut fine, march(&s, eta, rate, s_final, n, cb)?);
            m = mismatch(&coarse, &fine);
        }
        if m > STEP_TOL {
            return Err(Error::Resolution {
                what: format!("time step for epsilon = {epsilon}, k = {k} ({n} steps)"),
                mismatch: m,
                tol: STEP_TOL,
            });
        }
        (fine, Some(m))
    } else {
        (march(&s, eta, rate, s_final, n_steps, cb)?, None)
    };
    let n_fine = fine.rho.len() - 1;
    let times: Vec<f64> = (0..=n_fine).map(|i| s_final * i as f64 / n_fine as f64).collect();
    let rho0 = fine.rho[0];
    let reference = times
        .iter()
        .map(|&t| fractional_reference(rho0, k, t, params))
        .collect::<Result<Vec<_>>>()?;
    Ok(ModeEvolution {
        k,
        epsilon,
        eta,
        times,
        rho_hat: fine.rho,
        f_hat: fine.f,
        mass: fine.mass,
        reference,
        mu_grid: s.mu,
        v_max: s.grid.v_max,
        n_grid: s.grid.len(),
        step_mismatch,
        final_state: fine.last,
        eigenfunction: s.eig,
    })
}

/// `e^{-κ(β)|k|^α s} ρ̂₀`.
pub fn fractional_reference(rho0_hat: C64, k: f64, s: f64, params: &ModelParams) -> Result<C64> {
    let kappa = kappa_closed(params.beta)?;
    Ok(rho0_hat * (-kappa * k.abs().powf(params.alpha) * s).exp())
}

impl ModeEvolution {
    /// `sup_s |ρ̂(s) - reference(s)|`.
    pub fn gap(&self) -> f64 {
        self.rho_hat
            .iter()
            .zip(&self.reference)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    /// Least-squares slope of `log|F̂|` against `s`, with the largest
    /// deviation from the fitted line.
    pub fn moment_log_slope(&self) -> (f64, f64) {
        let ys: Vec<f64> = self.f_hat.iter().map(|z| z.norm().ln()).collect();
        let n = ys.len() as f64;
        let mx = self.times.iter().sum::<f64>() / n;
        let my = ys.iter().sum::<f64>() / n;
        let sxx: f64 = self.times.iter().map(|x| (x - mx).powi(2)).sum();
        let sxy: f64 = self.times.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
        let slope = sxy / sxx;
        let dev = self
            .times
            .iter()
            .zip(&ys)
            .map(|(x, y)| (y - my - slope * (x - mx)).abs())
            .fold(0.0, f64::max);
        (slope, dev)
    }
}

/// `sup_s |ρ̂^ε(s,k) - e^{-κ|k|^α s}ρ̂₀(k)|` for each `ε`, run concurrently.
pub fn limit_gap(
    k: f64,
    s_final: f64,
    n_steps: usize,
    epsilons: &[f64],
    g0: &InitialData,
    params: &ModelParams,
) -> Result<Vec<f64>> {
    limit_gap_with(k, s_final, Some(n_steps), epsilons, g0, params, &KineticOptions::default())
}

/// [`limit_gap`] with explicit grid options; `n_steps = None` uses
/// [`default_steps`] for each `ε`.
pub fn limit_gap_with(
    k: f64,
    s_final: f64,
    n_steps: Option<usize>,
    epsilons: &[f64],
    g0: &InitialData,
    params: &ModelParams,
    opts: &KineticOptions,
) -> Result<Vec<f64>> {
    if epsilons.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::Domain("epsilons must be strictly decreasing".into()));
    }
    let pool = worker_pool();
    let runs: Vec<Result<ModeEvolution>> = pool.install(|| {
        epsilons
            .par_iter()
            .map(|&e| {
                let n = n_steps.unwrap_or_else(|| default_steps(e, k, s_final, params));
                evolve_mode_with(k, e, g0, s_final, n, params, opts)
            })
            .collect()
    });
    runs.into_iter().map(|r| r.map(|m| m.gap())).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> KineticOptions {
        KineticOptions {
            n_grid: 4096,
            v_max: None,
            check_halving: true,
            max_refinements: 4,
        }
    }

    #[test]
    fn zero_mode_conserves_mass() {
        let p = ModelParams::new(2.5).unwrap();
        let g0 = InitialData::Custom(Arc::new(|v: f64| C64::new((-v * v).exp() * (1.0 + v), 0.0)));
        let ev = evolve_mode_with(0.0, 0.1, &g0, 1.0, 50, &p, &small()).unwrap();
        for r in &ev.rho_hat {
            assert!((r - ev.rho_hat[0]).norm() < 1e-10 * ev.rho_hat[0].norm());
        }
    }

    #[test]
    fn reference_values() {
        let p = ModelParams::new(2.5).unwrap();
        let r0 = C64::new(0.7, 0.1);
        assert_eq!(fractional_reference(r0, 1.0, 0.0, &p).unwrap(), r0);
        assert_eq!(fractional_reference(r0, 0.0, 3.0, &p).unwrap(), r0);
        let k = kappa_closed(2.5).unwrap();
        assert!((fractional_reference(r0, 1.0, 1.0, &p).unwrap() - r0 * (-k).exp()).norm() < 1e-15);
    }

    #[test]
    fn equilibrium_data_has_unit_density() {
        let p = ModelParams::new(2.5).unwrap();
        let n = default_steps(0.1, 1.0, 0.5, &p);
        let ev = evolve_mode_with(1.0, 0.1, &InitialData::Equilibrium, 0.5, n, &p, &small()).unwrap();
        assert!((ev.rho_hat[0] - 1.0).norm() < 1e-14);
        assert_eq!(ev.gap(), ev.gap().max((ev.rho_hat[0] - ev.reference[0]).norm()));
    }
}
