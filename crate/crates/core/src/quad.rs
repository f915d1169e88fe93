//! Quadrature rules: Gauss–Legendre (fixed, composite, adaptive) and
//! tanh–sinh for integrands with algebraic endpoint singularities.

use std::ops::{Add, Mul};

use crate::{Error, Result};

/// Values that can be accumulated by a quadrature rule.
pub trait Integrand: Copy + Add<Output = Self> + Mul<f64, Output = Self> {
    fn zero() -> Self;
    fn magnitude(&self) -> f64;
}

impl Integrand for f64 {
    fn zero() -> Self {
        0.0
    }
    fn magnitude(&self) -> f64 {
        self.abs()
    }
}

impl Integrand for crate::C64 {
    fn zero() -> Self {
        crate::C64::new(0.0, 0.0)
    }
    fn magnitude(&self) -> f64 {
        self.norm()
    }
}

/// Gauss–Legendre rule on `[-1, 1]`.
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussLegendre {
    /// Nodes by Newton iteration on `P_n`, ascending.
    pub fn new(n: usize) -> Self {
        assert!(n >= 1);
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let m = n.div_ceil(2);
        for i in 0..m {
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre_with_derivative(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre_with_derivative(n, x);
            if d != 0.0 {
                dp = d;
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        Self { nodes, weights }
    }

    pub fn integrate<T: Integrand>(&self, f: impl Fn(f64) -> T, a: f64, b: f64) -> T {
        let c = 0.5 * (a + b);
        let h = 0.5 * (b - a);
        let mut acc = T::zero();
        for (x, w) in self.nodes.iter().zip(&self.weights) {
            acc = acc + f(c + h * x) * (w * h);
        }
        acc
    }

    /// Composite rule on the given breakpoints.
    pub fn integrate_panels<T: Integrand>(&self, f: impl Fn(f64) -> T, breaks: &[f64]) -> T {
        breaks
            .windows(2)
            .fold(T::zero(), |acc, w| acc + self.integrate(&f, w[0], w[1]))
    }
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Adaptive bisection with a 20-point rule against the sum over both halves.
pub fn adaptive<T: Integrand>(f: impl Fn(f64) -> T, a: f64, b: f64, tol: f64) -> Result<T> {
    let gl = GaussLegendre::new(20);
    let whole = gl.integrate(&f, a, b);
    adaptive_step(&gl, &f, a, b, whole, tol, 0)
}

fn adaptive_step<T: Integrand>(
    gl: &GaussLegendre,
    f: &impl Fn(f64) -> T,
    a: f64,
    b: f64,
    whole: T,
    tol: f64,
    depth: usize,
) -> Result<T> {
    let m = 0.5 * (a + b);
    let left = gl.integrate(f, a, m);
    let right = gl.integrate(f, m, b);
    let both = left + right;
    let err = (both + whole * -1.0).magnitude();
    if err <= tol.max(1e-15 * both.magnitude()) {
        return Ok(both);
    }
    if depth >= 40 {
        return Err(Error::Quadrature(format!(
            "adaptive Gauss-Legendre stalled on [{a}, {b}] (error {err:e})"
        )));
    }
    let l = adaptive_step(gl, f, a, m, left, 0.5 * tol, depth + 1)?;
    let r = adaptive_step(gl, f, m, b, right, 0.5 * tol, depth + 1)?;
    Ok(l + r)
}

/// Tanh–sinh quadrature on `[a, b]`.
///
/// The integrand receives `(x, x - a, b - x)` with both distances computed
/// without cancellation, so endpoint singularities such as `(x - a)^{-1/2}`
/// are resolved to full precision.
pub fn tanh_sinh(f: impl Fn(f64, f64, f64) -> f64, a: f64, b: f64, tol: f64) -> Result<f64> {
    let half = 0.5 * (b - a);
    let t_max = 6.0;
    let eval = |t: f64| -> f64 {
        let u = std::f64::consts::FRAC_PI_2 * t.sinh();
        let w = std::f64::consts::FRAC_PI_2 * t.cosh() / u.cosh().powi(2);
        if !w.is_finite() || w == 0.0 {
            return 0.0;
        }
        // 1 + tanh(u) and 1 - tanh(u) without cancellation
        let e = (-2.0 * u.abs()).exp();
        let (lo, hi) = if u >= 0.0 {
            (2.0 / (1.0 + e), 2.0 * e / (1.0 + e))
        } else {
            (2.0 * e / (1.0 + e), 2.0 / (1.0 + e))
        };
        let dl = half * lo;
        let dr = half * hi;
        if dl <= 0.0 || dr <= 0.0 {
            return 0.0;
        }
        let x = if dl < dr { a + dl } else { b - dr };
        f(x, dl, dr) * w * half
    };
    let mut h = 0.5;
    let mut sum = eval(0.0);
    let mut k = 1;
    while k as f64 * h <= t_max {
        let t = k as f64 * h;
        sum += eval(t) + eval(-t);
        k += 1;
    }
    let mut estimate = sum * h;
    for _ in 0..10 {
        h *= 0.5;
        let mut k = 1;
        while k as f64 * h <= t_max {
            let t = k as f64 * h;
            sum += eval(t) + eval(-t);
            k += 2;
        }
        let next = sum * h;
        if (next - estimate).abs() <= tol * next.abs().max(1e-300) {
            return Ok(next);
        }
        estimate = next;
    }
    Err(Error::Quadrature(format!(
        "tanh-sinh did not reach relative tolerance {tol:e} on [{a}, {b}]"
    )))
}

/// Cumulative integral of uniformly spaced samples, `out[i] = ∫_{x_0}^{x_i}`,
/// using the three-point rule on each interval (third order).
pub fn cumulative_uniform(f: &[f64], h: f64) -> Vec<f64> {
    let n = f.len();
    let mut out = vec![0.0; n];
    if n < 2 {
        return out;
    }
    if n == 2 {
        out[1] = 0.5 * h * (f[0] + f[1]);
        return out;
    }
    for i in 0..n - 1 {
        let piece = if i + 2 < n {
            h * (5.0 * f[i] + 8.0 * f[i + 1] - f[i + 2]) / 12.0
        } else {
            h * (-f[i - 1] + 8.0 * f[i] + 5.0 * f[i + 1]) / 12.0
        };
        out[i + 1] = out[i] + piece;
    }
    out
}
