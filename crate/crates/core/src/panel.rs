//! Piecewise Chebyshev–Lobatto representation of functions on an interval.
//!
//! Each panel carries `p + 1` Lobatto nodes; neighbouring panels share their
//! endpoint abscissa but store it twice. Spectral integration matrices give
//! cumulative integrals from either end, and a Picard-form collocation solves
//! `y'' = c(x) y` panel by panel from right to left.

use nalgebra::{DMatrix, DVector};

use crate::quad::{GaussLegendre, Integrand};
use crate::{Error, Result, C64};

/// Reference Lobatto basis on `[-1, 1]`.
#[derive(Debug, Clone)]
pub struct ChebBasis {
    pub p: usize,
    pub nodes: Vec<f64>,
    weights: Vec<f64>,
    /// `left[i][j] = ∫_{-1}^{x_i} ℓ_j`
    left: Vec<Vec<f64>>,
    /// `right[i][j] = ∫_{x_i}^{1} ℓ_j`
    right: Vec<Vec<f64>>,
    diff: Vec<Vec<f64>>,
}

impl ChebBasis {
    pub fn new(p: usize) -> Self {
        assert!(p >= 2);
        let nodes: Vec<f64> = (0..=p)
            .map(|j| -(std::f64::consts::PI * j as f64 / p as f64).cos())
            .collect();
        let weights: Vec<f64> = (0..=p)
            .map(|j| {
                let s = if j % 2 == 0 { 1.0 } else { -1.0 };
                if j == 0 || j == p {
                    0.5 * s
                } else {
                    s
                }
            })
            .collect();
        let mut basis = Self {
            p,
            nodes,
            weights,
            left: Vec::new(),
            right: Vec::new(),
            diff: Vec::new(),
        };
        let gl = GaussLegendre::new(p + 2);
        let mut left = vec![vec![0.0; p + 1]; p + 1];
        let mut right = vec![vec![0.0; p + 1]; p + 1];
        for i in 0..=p {
            let xi = basis.nodes[i];
            for j in 0..=p {
                if i > 0 {
                    left[i][j] = gl.integrate(|t| basis.lagrange(j, t), -1.0, xi);
                }
                if i < p {
                    right[i][j] = gl.integrate(|t| basis.lagrange(j, t), xi, 1.0);
                }
            }
        }
        let mut diff = vec![vec![0.0; p + 1]; p + 1];
        for i in 0..=p {
            let mut row_sum = 0.0;
            for j in 0..=p {
                if i != j {
                    let d = (basis.weights[j] / basis.weights[i])
                        / (basis.nodes[i] - basis.nodes[j]);
                    diff[i][j] = d;
                    row_sum += d;
                }
            }
            diff[i][i] = -row_sum;
        }
        basis.left = left;
        basis.right = right;
        basis.diff = diff;
        basis
    }

    /// Lagrange cardinal function `ℓ_j(t)` in barycentric form.
    pub fn lagrange(&self, j: usize, t: f64) -> f64 {
        let mut den = 0.0;
        let mut num = 0.0;
        for (k, (&x, &w)) in self.nodes.iter().zip(&self.weights).enumerate() {
            let d = t - x;
            if d == 0.0 {
                return if k == j { 1.0 } else { 0.0 };
            }
            let c = w / d;
            den += c;
            if k == j {
                num = c;
            }
        }
        num / den
    }

    /// Barycentric interpolation of nodal values at `t ∈ [-1, 1]`.
    pub fn interpolate<T: Integrand>(&self, values: &[T], t: f64) -> T {
        let mut den = 0.0;
        let mut num = T::zero();
        for (k, (&x, &w)) in self.nodes.iter().zip(&self.weights).enumerate() {
            let d = t - x;
            if d == 0.0 {
                return values[k];
            }
            let c = w / d;
            den += c;
            num = num + values[k] * c;
        }
        num * (1.0 / den)
    }
}

/// Composite Lobatto grid over the given breakpoints.
#[derive(Debug, Clone)]
pub struct PanelGrid {
    pub breaks: Vec<f64>,
    pub basis: ChebBasis,
}

impl PanelGrid {
    pub fn new(breaks: Vec<f64>, p: usize) -> Self {
        assert!(breaks.len() >= 2);
        assert!(breaks.windows(2).all(|w| w[1] > w[0]), "breaks must increase");
        Self {
            breaks,
            basis: ChebBasis::new(p),
        }
    }

    /// Breakpoints from `a` to `b` with local width `step(x)`.
    pub fn adaptive_breaks(a: f64, b: f64, step: impl Fn(f64) -> f64) -> Vec<f64> {
        let mut out = vec![a];
        let mut x = a;
        while x < b {
            let h = step(x).max(1e-12);
            x = if x + 1.5 * h >= b { b } else { x + h };
            out.push(x);
        }
        out
    }

    pub fn panels(&self) -> usize {
        self.breaks.len() - 1
    }

    pub fn per_panel(&self) -> usize {
        self.basis.p + 1
    }

    pub fn len(&self) -> usize {
        self.panels() * self.per_panel()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn start(&self) -> f64 {
        self.breaks[0]
    }

    pub fn end(&self) -> f64 {
        *self.breaks.last().unwrap()
    }

    fn half(&self, k: usize) -> f64 {
        0.5 * (self.breaks[k + 1] - self.breaks[k])
    }

    fn mid(&self, k: usize) -> f64 {
        0.5 * (self.breaks[k + 1] + self.breaks[k])
    }

    /// All node abscissae, panel by panel.
    pub fn nodes(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.len());
        for k in 0..self.panels() {
            let (m, h) = (self.mid(k), self.half(k));
            for &t in &self.basis.nodes {
                out.push(m + h * t);
            }
        }
        // pin endpoints exactly to the breakpoints
        let n = self.per_panel();
        for k in 0..self.panels() {
            out[k * n] = self.breaks[k];
            out[k * n + n - 1] = self.breaks[k + 1];
        }
        out
    }

    pub fn sample<T>(&self, f: impl Fn(f64) -> T) -> Vec<T> {
        self.nodes().into_iter().map(f).collect()
    }

    /// `out(x) = ∫_{start}^{x} f`.
    pub fn cumulative<T: Integrand>(&self, f: &[T]) -> Vec<T> {
        let n = self.per_panel();
        let mut out = vec![T::zero(); self.len()];
        let mut acc = T::zero();
        for k in 0..self.panels() {
            let h = self.half(k);
            let fk = &f[k * n..(k + 1) * n];
            for i in 0..n {
                let mut s = T::zero();
                for (j, &fj) in fk.iter().enumerate() {
                    s = s + fj * self.basis.left[i][j];
                }
                out[k * n + i] = acc + s * h;
            }
            acc = out[k * n + n - 1];
        }
        out
    }

    /// `out(x) = ∫_{x}^{end} f`, accumulated from the right so that small
    /// tails keep their relative accuracy.
    pub fn tail<T: Integrand>(&self, f: &[T]) -> Vec<T> {
        let n = self.per_panel();
        let mut out = vec![T::zero(); self.len()];
        let mut acc = T::zero();
        for k in (0..self.panels()).rev() {
            let h = self.half(k);
            let fk = &f[k * n..(k + 1) * n];
            for i in 0..n {
                let mut s = T::zero();
                for (j, &fj) in fk.iter().enumerate() {
                    s = s + fj * self.basis.right[i][j];
                }
                out[k * n + i] = acc + s * h;
            }
            acc = out[k * n];
        }
        out
    }

    /// Total integral over the grid.
    pub fn integral<T: Integrand>(&self, f: &[T]) -> T {
        let t = self.tail(f);
        t[0]
    }

    /// Spectral derivative, panel by panel.
    pub fn derivative<T: Integrand>(&self, f: &[T]) -> Vec<T> {
        let n = self.per_panel();
        let mut out = vec![T::zero(); self.len()];
        for k in 0..self.panels() {
            let inv = 1.0 / self.half(k);
            let fk = &f[k * n..(k + 1) * n];
            for i in 0..n {
                let mut s = T::zero();
                for (j, &fj) in fk.iter().enumerate() {
                    s = s + fj * self.basis.diff[i][j];
                }
                out[k * n + i] = s * inv;
            }
        }
        out
    }

    /// Index of the panel containing `x` (clamped to the grid).
    pub fn locate(&self, x: f64) -> usize {
        let np = self.panels();
        match self
            .breaks
            .binary_search_by(|b| b.partial_cmp(&x).unwrap_or(std::cmp::Ordering::Less))
        {
            Ok(i) => i.min(np - 1),
            Err(i) => i.saturating_sub(1).min(np - 1),
        }
    }

    pub fn contains(&self, x: f64) -> bool {
        x >= self.start() && x <= self.end()
    }

    /// Interpolate nodal values at `x`.
    pub fn interpolate<T: Integrand>(&self, f: &[T], x: f64) -> T {
        let k = self.locate(x);
        let n = self.per_panel();
        let t = ((x - self.mid(k)) / self.half(k)).clamp(-1.0, 1.0);
        self.basis.interpolate(&f[k * n..(k + 1) * n], t)
    }

    /// Solve `y'' = c(x) y` from `(y, y')` prescribed at the right end.
    ///
    /// On each panel the integrated form
    /// `y' = y'(b) - ∫_x^b c y`, `y = y(b) - ∫_x^b y'`
    /// is collocated at the Lobatto nodes and solved by LU.
    pub fn solve_backward(&self, c: &[C64], y_end: C64, dy_end: C64) -> Result<(Vec<C64>, Vec<C64>)> {
        let n = self.per_panel();
        let mut y = vec![C64::new(0.0, 0.0); self.len()];
        let mut dy = vec![C64::new(0.0, 0.0); self.len()];
        let (mut yb, mut dyb) = (y_end, dy_end);
        for k in (0..self.panels()).rev() {
            let h = self.half(k);
            let ck = &c[k * n..(k + 1) * n];
            let mut a = DMatrix::<C64>::zeros(2 * n, 2 * n);
            let mut rhs = DVector::<C64>::zeros(2 * n);
            for i in 0..n {
                // rows 0..n: y' equations, unknown order [y_0..y_p, y'_0..y'_p]
                a[(i, n + i)] = C64::new(1.0, 0.0);
                a[(n + i, i)] = C64::new(1.0, 0.0);
                for j in 0..n {
                    let r = self.basis.right[i][j] * h;
                    a[(i, j)] += ck[j] * r;
                    a[(n + i, n + j)] += C64::new(r, 0.0);
                }
                rhs[i] = dyb;
                rhs[n + i] = yb;
            }
            let sol = a.lu().solve(&rhs).ok_or_else(|| {
                Error::Convergence(format!(
                    "singular collocation system on [{}, {}]",
                    self.breaks[k],
                    self.breaks[k + 1]
                ))
            })?;
            for i in 0..n {
                y[k * n + i] = sol[i];
                dy[k * n + i] = sol[n + i];
            }
            yb = sol[0];
            dyb = sol[n];
        }
        Ok((y, dy))
    }
}
