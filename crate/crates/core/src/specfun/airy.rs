//! Airy function `Ai` and its derivative for complex arguments in the right
//! sector, as needed along the rays `e^{iπ/6}(s + iλ)`.
//!
//! Three representations are used:
//! - `|z| ≤ 2`: Maclaurin series;
//! - `|ξ| ≤ 30`, `ξ = (2/3) z^{3/2}`: the Bessel form `Ai = (1/π)√(z/3) K_{1/3}(ξ)`
//!   with `e^ξ K_ν(ξ) = ∫_0^∞ e^{-ξ(cosh t - 1)} cosh(νt) dt` by the trapezoid rule;
//! - `|ξ| > 30`: the exponential asymptotic expansion.

use std::f64::consts::PI;

use crate::{Error, Result, C64};

/// `Ai(0) = 3^{-2/3}/Γ(2/3)`
const AI0: f64 = 0.355_028_053_887_817_239;
/// `-Ai'(0) = 3^{-1/3}/Γ(1/3)`
const AIP0: f64 = 0.258_819_403_792_806_798;

const SERIES_RADIUS: f64 = 2.0;
const ASYMPTOTIC_XI: f64 = 30.0;
/// Sector half-opening for the Bessel quadrature.
const SECTOR: f64 = PI / 3.0 - 0.2;
const ASYMPTOTIC_SECTOR: f64 = 2.0 * PI / 3.0;

/// `Ai(z)`.
pub fn airy_ray(z: C64) -> Result<C64> {
    airy_with_derivative(z).map(|(a, _)| a)
}

/// `(Ai(z), Ai'(z))`.
pub fn airy_with_derivative(z: C64) -> Result<(C64, C64)> {
    let r = z.norm();
    if r <= SERIES_RADIUS {
        return Ok(maclaurin(z));
    }
    let xi = 2.0 / 3.0 * z.powf(1.5);
    let arg = z.arg().abs();
    if xi.norm() > ASYMPTOTIC_XI && arg <= ASYMPTOTIC_SECTOR {
        return Ok(asymptotic(z, xi));
    }
    if arg <= SECTOR {
        return Ok(bessel_form(z, xi));
    }
    Err(Error::Domain(format!(
        "Airy argument {z} outside the supported sector |arg z| <= {SECTOR:.4}"
    )))
}

pub(crate) fn maclaurin(z: C64) -> (C64, C64) {
    let z3 = z * z * z;
    let one = C64::new(1.0, 0.0);
    // f = Σ t_k, g = Σ u_k; f' = Σ p_k, g' = Σ q_k
    let (mut t, mut u) = (one, z);
    let (mut p, mut q) = (C64::new(0.0, 0.0), one);
    let (mut f, mut g, mut fp, mut gp) = (t, u, p, q);
    p = z * z * 0.5;
    fp += p;
    for k in 1..200 {
        let kf = k as f64;
        t *= z3 / ((3.0 * kf - 1.0) * (3.0 * kf));
        u *= z3 / ((3.0 * kf) * (3.0 * kf + 1.0));
        q *= z3 / ((3.0 * kf) * (3.0 * kf - 2.0));
        if k >= 2 {
            p *= z3 / ((3.0 * kf - 3.0) * (3.0 * kf - 1.0));
            fp += p;
        }
        f += t;
        g += u;
        gp += q;
        let small = t.norm() + u.norm() + p.norm() + q.norm();
        if small < 1e-18 * (f.norm() + g.norm() + fp.norm() + gp.norm()) {
            break;
        }
    }
    (AI0 * f - AIP0 * g, AI0 * fp - AIP0 * gp)
}

/// `e^ξ K_ν(ξ)` for `Re ξ > 0`.
fn scaled_bessel_k(nu: f64, xi: C64) -> C64 {
    let h = 0.04;
    let re = xi.re.max(1e-300);
    let mut sum = C64::new(0.5, 0.0);
    let mut k = 1;
    loop {
        let t = k as f64 * h;
        let c = t.cosh() - 1.0;
        if re * c > 45.0 {
            break;
        }
        sum += (-xi * c).exp() * (nu * t).cosh();
        k += 1;
    }
    sum * h
}

fn bessel_form(z: C64, xi: C64) -> (C64, C64) {
    let e = (-xi).exp();
    let k13 = scaled_bessel_k(1.0 / 3.0, xi) * e;
    let k23 = scaled_bessel_k(2.0 / 3.0, xi) * e;
    let ai = (z / 3.0).sqrt() * k13 / PI;
    let aip = -z * k23 / (PI * 3f64.sqrt());
    (ai, aip)
}

fn asymptotic(z: C64, xi: C64) -> (C64, C64) {
    let one = C64::new(1.0, 0.0);
    let mut u = 1.0;
    let mut su = one;
    let mut sv = one;
    let mut pow = one;
    let inv = -1.0 / xi;
    let mut last = f64::INFINITY;
    for k in 1..60 {
        let kf = k as f64;
        u *= (6.0 * kf - 5.0) * (6.0 * kf - 3.0) * (6.0 * kf - 1.0) / ((2.0 * kf - 1.0) * 216.0 * kf);
        let v = -(6.0 * kf + 1.0) / (6.0 * kf - 1.0) * u;
        pow *= inv;
        let tu = pow * u;
        let mag = tu.norm();
        if mag > last {
            break;
        }
        su += tu;
        sv += pow * v;
        last = mag;
        if mag < 1e-18 {
            break;
        }
    }
    let e = (-xi).exp() / (2.0 * PI.sqrt());
    let q = z.powf(0.25);
    (e * su / q, -e * q * sv)
}
