//! Special functions: complex Gamma, Airy on rotated rays, Frobenius series
//! and the auxiliary functions `D_α`, `F_α`.

pub mod airy;
pub mod gamma;
pub mod series;

pub use airy::{airy_ray, airy_with_derivative};
pub use gamma::{gamma, gamma_complex};
pub use series::{
    d_alpha_coeffs, d_alpha_series, f_alpha_closed, f_alpha_series, frobenius_series, ComplexSeries,
    DEFAULT_TERMS,
};
