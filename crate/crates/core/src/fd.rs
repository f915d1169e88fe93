//! Cell-centred finite differences on `[-V, V]` for `-∂² + W + iηv`.
//!
//! The operator is written in flux form,
//! `(A g)_j = -[M²_{j+½}(g_{j+1}/M_{j+1} - g_j/M_j) - M²_{j-½}(g_j/M_j - g_{j-1}/M_{j-1})] / (h² M_j)`,
//! with no flux through the outer faces. The discrete `M` is then an exact
//! null vector at `η = 0`, the matrix is complex symmetric, and the
//! discrete mass `h Σ g_j M_j` is conserved at `η = 0`.

use crate::model::equilibrium_m;
use crate::{Error, Result, C64, I};

/// Uniform cell-centred velocity grid with `M` at centres and faces.
#[derive(Debug, Clone)]
pub struct FluxGrid {
    pub v: Vec<f64>,
    pub h: f64,
    pub v_max: f64,
    pub gamma: f64,
    pub m: Vec<f64>,
    /// `M` at the `n + 1` faces; the two outer faces carry no flux.
    pub m_face: Vec<f64>,
}

impl FluxGrid {
    pub fn new(v_max: f64, n: usize, gamma: f64) -> Result<Self> {
        if n < 4 || !(v_max > 0.0) {
            return Err(Error::Domain(format!("flux grid needs n >= 4 and V > 0, got n = {n}, V = {v_max}")));
        }
        let h = 2.0 * v_max / n as f64;
        let v: Vec<f64> = (0..n).map(|j| -v_max + (j as f64 + 0.5) * h).collect();
        let m = v.iter().map(|&x| equilibrium_m(x, gamma)).collect();
        let m_face = (0..=n).map(|j| equilibrium_m(-v_max + j as f64 * h, gamma)).collect();
        Ok(Self {
            v,
            h,
            v_max,
            gamma,
            m,
            m_face,
        })
    }

    pub fn len(&self) -> usize {
        self.v.len()
    }

    pub fn is_empty(&self) -> bool {
        self.v.is_empty()
    }

    /// Matrix of `-∂² + W + iηv - σ`.
    pub fn operator(&self, eta: f64, shift: C64) -> Tridiag {
        let n = self.len();
        let h2 = self.h * self.h;
        let mut diag = vec![C64::new(0.0, 0.0); n];
        let mut off = vec![C64::new(0.0, 0.0); n - 1];
        for j in 0..n {
            let left = if j > 0 { self.m_face[j].powi(2) } else { 0.0 };
            let right = if j + 1 < n { self.m_face[j + 1].powi(2) } else { 0.0 };
            diag[j] = (left + right) / (h2 * self.m[j] * self.m[j]) + I * eta * self.v[j] - shift;
            if j + 1 < n {
                off[j] = C64::new(-self.m_face[j + 1].powi(2) / (h2 * self.m[j] * self.m[j + 1]), 0.0);
            }
        }
        Tridiag {
            lower: off.clone(),
            diag,
            upper: off,
        }
    }

    /// `h Σ f_j w_j` (bilinear, no conjugation).
    pub fn pair(&self, f: &[C64], w: &[C64]) -> C64 {
        f.iter().zip(w).map(|(a, b)| a * b).sum::<C64>() * self.h
    }

    /// `h Σ f_j M_j`.
    pub fn moment_m(&self, f: &[C64]) -> C64 {
        f.iter().zip(&self.m).map(|(a, b)| a * b).sum::<C64>() * self.h
    }

    /// Value at `v = 0` by cubic interpolation through the four central cells.
    pub fn value_at_zero(&self, f: &[C64]) -> C64 {
        let n = self.len();
        let c = n / 2;
        let idx = [c.saturating_sub(2), c.saturating_sub(1), c, (c + 1).min(n - 1)];
        let mut acc = C64::new(0.0, 0.0);
        for (a, &i) in idx.iter().enumerate() {
            let mut l = 1.0;
            for (b, &k) in idx.iter().enumerate() {
                if a != b {
                    l *= (0.0 - self.v[k]) / (self.v[i] - self.v[k]);
                }
            }
            acc += f[i] * l;
        }
        acc
    }
}

/// Tridiagonal complex matrix.
#[derive(Debug, Clone)]
pub struct Tridiag {
    pub lower: Vec<C64>,
    pub diag: Vec<C64>,
    pub upper: Vec<C64>,
}

impl Tridiag {
    pub fn len(&self) -> usize {
        self.diag.len()
    }

    pub fn is_empty(&self) -> bool {
        self.diag.is_empty()
    }

    pub fn matvec(&self, x: &[C64]) -> Vec<C64> {
        let n = self.len();
        (0..n)
            .map(|j| {
                let mut y = self.diag[j] * x[j];
                if j > 0 {
                    y += self.lower[j - 1] * x[j - 1];
                }
                if j + 1 < n {
                    y += self.upper[j] * x[j + 1];
                }
                y
            })
            .collect()
    }

    /// `a·I + b·self` as a new matrix.
    pub fn affine(&self, a: C64, b: C64) -> Tridiag {
        Tridiag {
            lower: self.lower.iter().map(|x| b * x).collect(),
            diag: self.diag.iter().map(|x| a + b * x).collect(),
            upper: self.upper.iter().map(|x| b * x).collect(),
        }
    }

    /// LU factors without pivoting; a pivot below `tiny` times the row
    /// scale is reported as an error.
    pub fn factor(&self, tiny: f64) -> Result<TridiagLu> {
        let n = self.len();
        let mut piv = vec![C64::new(0.0, 0.0); n];
        let mut mult = vec![C64::new(0.0, 0.0); n.saturating_sub(1)];
        piv[0] = self.diag[0];
        for j in 1..n {
            let scale = self.diag[j - 1].norm() + self.upper[j - 1].norm();
            if piv[j - 1].norm() <= tiny * scale {
                return Err(Error::Convergence(format!("tridiagonal pivot {} at row {}", piv[j - 1].norm(), j - 1)));
            }
            mult[j - 1] = self.lower[j - 1] / piv[j - 1];
            piv[j] = self.diag[j] - mult[j - 1] * self.upper[j - 1];
        }
        let scale = self.diag[n - 1].norm() + self.lower.last().map_or(0.0, |x| x.norm());
        if piv[n - 1].norm() <= tiny * scale {
            return Err(Error::Convergence(format!("tridiagonal pivot {} at row {}", piv[n - 1].norm(), n - 1)));
        }
        Ok(TridiagLu {
            piv,
            mult,
            upper: self.upper.clone(),
        })
    }
}

/// Thomas factorisation of a [`Tridiag`].
#[derive(Debug, Clone)]
pub struct TridiagLu {
    piv: Vec<C64>,
    mult: Vec<C64>,
    upper: Vec<C64>,
}

impl TridiagLu {
    pub fn solve(&self, rhs: &[C64]) -> Vec<C64> {
        let n = self.piv.len();
        let mut y = rhs.to_vec();
        for j in 1..n {
            let m = self.mult[j - 1];
            let prev = y[j - 1];
            y[j] -= m * prev;
        }
        y[n - 1] /= self.piv[n - 1];
        for j in (0..n - 1).rev() {
            y[j] = (y[j] - self.upper[j] * y[j + 1]) / self.piv[j];
        }
        y
    }
}

/// Euclidean norm.
pub fn norm2(x: &[C64]) -> f64 {
    x.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn equilibrium_is_exact_null_vector() {
        let g = FluxGrid::new(40.0, 2048, 1.25).unwrap();
        let a = g.operator(0.0, C64::new(0.0, 0.0));
        let m: Vec<C64> = g.m.iter().map(|&x| C64::new(x, 0.0)).collect();
        let r = a.matvec(&m);
        let scale = 4.0 / (g.h * g.h);
        assert!(norm2(&r) <= 1e-14 * scale * norm2(&m));
    }

    #[test]
    fn thomas_solves_random_system() {
        let n = 50;
        let t = Tridiag {
            lower: (0..n - 1).map(|j| C64::new(0.3 * j as f64 / n as f64, -0.2)).collect(),
            diag: (0..n).map(|j| C64::new(3.0 + (j as f64).sin(), 0.5)).collect(),
            upper: (0..n - 1).map(|j| C64::new(-0.4, 0.1 * (j as f64).cos())).collect(),
        };
        let x: Vec<C64> = (0..n).map(|j| C64::new((j as f64).cos(), (0.3 * j as f64).sin())).collect();
        let b = t.matvec(&x);
        let y = t.factor(1e-14).unwrap().solve(&b);
        for (a, b) in x.iter().zip(&y) {
            assert!((a - b).norm() < 1e-13);
        }
    }

    #[test]
    fn interpolation_at_zero() {
        let g = FluxGrid::new(10.0, 400, 1.25).unwrap();
        let f: Vec<C64> = g.v.iter().map(|&v| C64::new(1.0 + v + v * v * v, v * v)).collect();
        assert!((g.value_at_zero(&f) - 1.0).norm() < 1e-13);
    }
}
