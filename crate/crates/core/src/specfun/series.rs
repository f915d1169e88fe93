//! Power series around the regular singular point `s = 0` of
//! `f'' = (γ(γ+1)/s² + i s - λ) f`, and the auxiliary functions `D_α`, `F_α`.

use crate::quad;
use crate::specfun::gamma::gamma;
use crate::{Error, Result, C64, I};

/// `s^offset · Σ coeffs[n] s^n`, certified for `s ≤ radius_hint`.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexSeries {
    pub offset: f64,
    pub coeffs: Vec<C64>,
    pub radius_hint: f64,
}

/// Default truncation order for the Frobenius series.
pub const DEFAULT_TERMS: usize = 120;

const TAIL_REL: f64 = 1e-16;

/// Frobenius solution `s^δ Σ g_n s^n` with `g_0 = 1`, `g_1 = 0` and
/// `g_{n+2} = (-λ g_n + i g_{n-1}) / ((n+2)(n+1+2δ))`.
///
/// `δ = -γ` gives `F_{+,λ}`, `δ = γ + 1` gives `F_{-,λ}`.
pub fn frobenius_series(lambda: C64, delta: f64, n_max: usize) -> Result<ComplexSeries> {
    let n_max = n_max.max(2);
    let mut g = vec![C64::new(0.0, 0.0); n_max + 1];
    g[0] = C64::new(1.0, 0.0);
    for n in 0..=n_max - 2 {
        let den = (n as f64 + 1.0 + 2.0 * delta) * (n as f64 + 2.0);
        if (n as f64 + 1.0 + 2.0 * delta).abs() < 1e-12 {
            return Err(Error::Resonance { n, delta });
        }
        let prev = if n >= 1 { g[n - 1] } else { C64::new(0.0, 0.0) };
        g[n + 2] = (-lambda * g[n] + I * prev) / den;
    }
    let radius_hint = certified_radius(&g);
    Ok(ComplexSeries {
        offset: delta,
        coeffs: g,
        radius_hint,
    })
}

/// Largest `s` at which the last three coefficients contribute below
/// `1e-17` in absolute size (the partial sums are `O(1)` there).
fn certified_radius(g: &[C64]) -> f64 {
    let n = g.len() - 1;
    let mut r = f64::INFINITY;
    for k in n.saturating_sub(2)..=n {
        let m = g[k].norm();
        if m > 0.0 && k > 0 {
            r = r.min((1e-17 / m).powf(1.0 / k as f64));
        }
    }
    r
}

impl ComplexSeries {
    /// `(f(s), f'(s))`.
    pub fn eval_with_derivative(&self, s: f64) -> Result<(C64, C64)> {
        if s < 0.0 {
            return Err(Error::Domain(format!("series evaluated at negative s = {s}")));
        }
        if s > self.radius_hint {
            return Err(Error::Truncation {
                s,
                radius: self.radius_hint,
            });
        }
        let mut sum = C64::new(0.0, 0.0);
        let mut dsum = C64::new(0.0, 0.0);
        let mut pw = 1.0;
        let mut last = 0.0;
        for (n, &c) in self.coeffs.iter().enumerate() {
            let t = c * pw;
            sum += t;
            dsum += t * (n as f64 + self.offset);
            last = t.norm();
            pw *= s;
        }
        if last > TAIL_REL * sum.norm().max(1.0) {
            return Err(Error::Truncation {
                s,
                radius: self.radius_hint,
            });
        }
        if s == 0.0 {
            return match self.offset {
                0.0 => Ok((sum, C64::new(0.0, 0.0))),
                o if o > 0.0 => Ok((C64::new(0.0, 0.0), C64::new(0.0, 0.0))),
                _ => Err(Error::Pole {
                    what: "Frobenius series",
                    at: "s = 0".into(),
                }),
            };
        }
        let lead = s.powf(self.offset);
        Ok((sum * lead, dsum * lead / s))
    }

    pub fn eval(&self, s: f64) -> Result<C64> {
        self.eval_with_derivative(s).map(|(f, _)| f)
    }

    /// `∫_0^x s^{offset + e} · Σ g_n s^n ds` termwise; needs `offset + e > -1`.
    pub fn integral_with_weight(&self, e: f64, x: f64) -> Result<C64> {
        let p0 = self.offset + e + 1.0;
        if p0 <= 0.0 {
            return Err(Error::Domain(format!(
                "termwise integral diverges at 0 (exponent {})",
                p0 - 1.0
            )));
        }
        let mut sum = C64::new(0.0, 0.0);
        let mut pw = x.powf(p0);
        for (n, &c) in self.coeffs.iter().enumerate() {
            sum += c * pw / (n as f64 + p0);
            pw *= x;
        }
        Ok(sum)
    }
}

fn check_alpha(alpha: f64) -> Result<()> {
    if (alpha - alpha.round()).abs() < 1e-12 && alpha.round() >= 1.0 {
        return Err(Error::Resonance {
            n: alpha.round() as usize - 1,
            delta: alpha,
        });
    }
    Ok(())
}

/// `F_α(z) = Σ h_n z^n`, `h_0 = 1`, `h_{n+1} = h_n/(n+1-α)`.
pub fn f_alpha_series(z: C64, alpha: f64, n_max: usize) -> Result<C64> {
    check_alpha(alpha)?;
    let mut h = C64::new(1.0, 0.0);
    let mut sum = h;
    for n in 0..n_max {
        h *= z / (n as f64 + 1.0 - alpha);
        sum += h;
        if n as f64 > z.norm() && h.norm() < 1e-18 * sum.norm() {
            return Ok(sum);
        }
    }
    Err(Error::Convergence(format!(
        "F_alpha series at z = {z} not converged in {n_max} terms"
    )))
}

/// `F_α(z) = Γ(1-α) z^α e^z + α ∫_0^∞ e^{-zv}(1+v)^{-α-1} dv` for `Re z > 0`.
pub fn f_alpha_closed(z: C64, alpha: f64) -> Result<C64> {
    check_alpha(alpha)?;
    if z.re <= 0.0 {
        return Err(Error::Domain(format!("F_alpha closed form needs Re z > 0, got {z}")));
    }
    // e^{-Re z · v} (1+v)^{-α-1} below 1e-18
    let mut v_max = 1.0;
    while (-z.re * v_max).exp() * (1.0 + v_max).powf(-alpha - 1.0) > 1e-18 {
        v_max *= 2.0;
    }
    let width = (1.0 / z.norm()).clamp(0.05, 1.0);
    let mut a = 0.0;
    let mut integral = C64::new(0.0, 0.0);
    while a < v_max {
        let b = (a + width * (1.0 + a)).min(v_max);
        integral += quad::adaptive(
            |v: f64| (-z * v).exp() * (1.0 + v).powf(-alpha - 1.0),
            a,
            b,
            1e-17,
        )?;
        a = b;
    }
    let g = gamma(1.0 - alpha)?;
    Ok(g * z.powf(alpha) * z.exp() + alpha * integral)
}

/// `D_α(x) = Σ d_n x^n`, `d_0 = 1`, `d_{n+1} = i d_n / (9(n+1)(n+1-α))`.
pub fn d_alpha_series(x: f64, alpha: f64) -> Result<C64> {
    check_alpha(alpha)?;
    if x < 0.0 {
        return Err(Error::Domain(format!("D_alpha needs x >= 0, got {x}")));
    }
    let mut d = C64::new(1.0, 0.0);
    let mut sum = d;
    for n in 0..2000 {
        let nf = n as f64;
        d *= I * x / (9.0 * (nf + 1.0) * (nf + 1.0 - alpha));
        sum += d;
        if d.norm() < 1e-18 * sum.norm().max(1.0) && nf * nf > x {
            return Ok(sum);
        }
    }
    Err(Error::Convergence(format!("D_alpha series at x = {x} not converged")))
}

/// The coefficients `d_0..d_n` of `D_α`.
pub fn d_alpha_coeffs(alpha: f64, n: usize) -> Result<Vec<C64>> {
    check_alpha(alpha)?;
    let mut out = Vec::with_capacity(n + 1);
    let mut d = C64::new(1.0, 0.0);
    out.push(d);
    for k in 0..n {
        let kf = k as f64;
        d *= I / (9.0 * (kf + 1.0) * (kf + 1.0 - alpha));
        out.push(d);
    }
    Ok(out)
}
