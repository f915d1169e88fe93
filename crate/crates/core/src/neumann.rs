//! Volterra fixed point for the decaying solution of `y'' = (c₀ + q) y`
//! written as `y = Θ(1 + R)` where `Θ'' = c₀ Θ` is a known decaying solution.
//!
//! `R = K(1 + R)` with
//! `Kg(v) = ∫_v^∞ Θ^{-2}(u) ∫_u^∞ Θ²(w) q(w) g(w) dw du`,
//! evaluated as two right-to-left sweeps on a panel grid, so each application
//! costs `O(n)` and no exponentially large factor multiplies an unreduced
//! quantity.

use crate::panel::PanelGrid;
use crate::{Error, Result, C64};

/// Neumann iteration stops once the newest term is below this in sup-norm.
pub const TERM_TOL: f64 = 1e-12;
/// Operator-norm target used to place the start of the integral region.
pub const NORM_LIMIT: f64 = 0.4;

#[derive(Debug, Clone)]
pub struct TailOperator {
    pub grid: PanelGrid,
    pub nodes: Vec<f64>,
    pub theta: Vec<C64>,
    pub q: Vec<f64>,
}

/// Converged fixed point `R` with its derivative.
#[derive(Debug, Clone)]
pub struct NeumannSolution {
    pub r: Vec<C64>,
    pub dr: Vec<C64>,
    pub terms: usize,
    pub last_term: f64,
}

/// `∫_{x_end}^∞ f` from the local log-log slope at the end of the grid.
///
/// Exact for pure powers `v^{-p}` and accurate for exponentially small tails.
fn tail_beyond(nodes: &[f64], f: &[C64]) -> C64 {
    let n = nodes.len();
    let i1 = n - 1;
    // a slope over a wide stretch is insensitive to the error in f1
    let i0 = nodes.iter().rposition(|&x| x <= 0.8 * nodes[i1]).unwrap_or(0);
    let (f1, f0) = (f[i1], f[i0]);
    if f1.norm() == 0.0 || f0.norm() == 0.0 {
        return C64::new(0.0, 0.0);
    }
    let x = nodes[i1];
    // local power: f ≈ f1 (v/x)^{-p}
    let p_loc = -(f1 / f0).ln() / (x / nodes[i0]).ln();
    let den = p_loc - 1.0;
    if den.re <= 0.0 {
        return C64::new(0.0, 0.0);
    }
    f1 * x / den
}

impl TailOperator {
    pub fn new(grid: PanelGrid, theta: Vec<C64>, q: Vec<f64>) -> Self {
        let nodes = grid.nodes();
        assert_eq!(theta.len(), nodes.len());
        assert_eq!(q.len(), nodes.len());
        Self {
            grid,
            nodes,
            theta,
            q,
        }
    }

    /// Build from callables sampled on the grid nodes.
    pub fn from_fns(grid: PanelGrid, theta: impl Fn(f64) -> C64, q: impl Fn(f64) -> f64) -> Self {
        let th = grid.sample(&theta);
        let qq = grid.sample(&q);
        Self::new(grid, th, qq)
    }

    /// Returns `(Kg, (Kg)')`.
    pub fn apply(&self, g: &[C64]) -> (Vec<C64>, Vec<C64>) {
        let inner: Vec<C64> = (0..g.len())
            .map(|i| self.theta[i] * self.theta[i] * self.q[i] * g[i])
            .collect();
        let mut b = self.grid.tail(&inner);
        let b_end = tail_beyond(&self.nodes, &inner);
        for x in b.iter_mut() {
            *x += b_end;
        }
        let outer: Vec<C64> = (0..g.len())
            .map(|i| b[i] / (self.theta[i] * self.theta[i]))
            .collect();
        let mut k = self.grid.tail(&outer);
        let k_end = tail_beyond(&self.nodes, &outer);
        for x in k.iter_mut() {
            *x += k_end;
        }
        let dk = outer.iter().map(|x| -x).collect();
        (k, dk)
    }

    /// `n(v) = ∫_v^∞ |Θ|^{-2} ∫_u^∞ |Θ|²|q|`, a bound on the sup-norm of `K`
    /// acting on functions supported in `[v, ∞)`.
    pub fn norm_profile(&self) -> Vec<f64> {
        let inner: Vec<C64> = (0..self.nodes.len())
            .map(|i| C64::new(self.theta[i].norm_sqr() * self.q[i].abs(), 0.0))
            .collect();
        let mut b = self.grid.tail(&inner);
        let b_end = tail_beyond(&self.nodes, &inner);
        for x in b.iter_mut() {
            *x += b_end;
        }
        let outer: Vec<C64> = (0..self.nodes.len())
            .map(|i| b[i] / self.theta[i].norm_sqr())
            .collect();
        let mut k = self.grid.tail(&outer);
        let k_end = tail_beyond(&self.nodes, &outer);
        for x in k.iter_mut() {
            *x += k_end;
        }
        k.iter().map(|x| x.re).collect()
    }

    /// Smallest breakpoint index `k` with `breaks[k] ≥ min_start` such that
    /// `sup_{v ≥ breaks[k]} n(v) ≤ limit`, together with that supremum.
    pub fn contraction_start(&self, limit: f64, min_start: f64) -> Option<(usize, f64)> {
        let prof = self.norm_profile();
        let n = self.grid.per_panel();
        let np = self.grid.panels();
        // suffix supremum at each breakpoint
        let mut sup = vec![0.0; np + 1];
        let mut run: f64 = 0.0;
        for k in (0..np).rev() {
            for &x in &prof[k * n..(k + 1) * n] {
                run = run.max(x);
            }
            sup[k] = run;
        }
        (0..np)
            .find(|&k| self.grid.breaks[k] >= min_start && sup[k] <= limit)
            .map(|k| (k, sup[k]))
    }

    /// The operator on the panels from breakpoint `k0` onwards.
    pub fn restrict(&self, k0: usize) -> Self {
        let n = self.grid.per_panel();
        let grid = PanelGrid {
            breaks: self.grid.breaks[k0..].to_vec(),
            basis: self.grid.basis.clone(),
        };
        Self {
            grid,
            nodes: self.nodes[k0 * n..].to_vec(),
            theta: self.theta[k0 * n..].to_vec(),
            q: self.q[k0 * n..].to_vec(),
        }
    }

    /// Sum `Σ_{n≥1} K^n(1)` until the newest term is below `tol`.
    pub fn solve(&self, tol: f64, max_terms: usize) -> Result<NeumannSolution> {
        let len = self.nodes.len();
        let mut r = vec![C64::new(0.0, 0.0); len];
        let mut dr = vec![C64::new(0.0, 0.0); len];
        let mut term = vec![C64::new(1.0, 0.0); len];
        for n in 1..=max_terms {
            let (next, dnext) = self.apply(&term);
            let size = next.iter().fold(0.0f64, |m, x| m.max(x.norm()));
            for i in 0..len {
                r[i] += next[i];
                dr[i] += dnext[i];
            }
            term = next;
            if size < tol {
                return Ok(NeumannSolution {
                    r,
                    dr,
                    terms: n,
                    last_term: size,
                });
            }
            if !size.is_finite() {
                break;
            }
        }
        Err(Error::ContractionNotMet {
            at: self.grid.start(),
            norm: self.norm_profile().first().copied().unwrap_or(f64::NAN),
            limit: NORM_LIMIT,
        })
    }

    /// Neumann sum truncated after exactly `n_terms + 1` terms.
    pub fn partial_sum(&self, n_terms: usize) -> Vec<C64> {
        let len = self.nodes.len();
        let mut r = vec![C64::new(0.0, 0.0); len];
        let mut term = vec![C64::new(1.0, 0.0); len];
        for _ in 0..=n_terms {
            let (next, _) = self.apply(&term);
            for i in 0..len {
                r[i] += next[i];
            }
            term = next;
        }
        r
    }
}
