//! Spectral construction of the principal eigenvalue of the kinetic
//! Fokker–Planck operator with heavy-tail equilibria `F ∝ (1+v²)^{-β/2}`,
//! `1 < β < 5`, and the fractional diffusion limit it produces.
//!
//! The crate is organised bottom-up:
//!
//! - [`model`]: constants, the equilibrium `M`, the potential `W` and the
//!   Green-function solve for `Q = -∂² + W`.
//! - [`specfun`]: complex Gamma, Airy on the rotated ray, Frobenius series.
//! - [`connection`]: the model-equation solution `H_λ` and its connection
//!   coefficient `d(λ)`.
//! - [`halfline`]: the full-potential half-line solution `G_{λ,η}` and the
//!   matching coefficients `a(λ,η)`, `b(λ,η)`.
//! - [`eigen`]: the principal eigenvalue `μ(η)` by connection and by a
//!   finite-difference oracle, the closed form `κ(β)`, scaling fits.
//! - [`kinetic`]: per-Fourier-mode semigroup evolution and the comparison
//!   with the fractional heat law.
//! - [`cli`]: the command-line driver.

// `!(x > 0.0)` is used on purpose: it also rejects NaN. Published
// constants are kept digit for digit, and index loops mirror the
// recurrences they implement.
#![allow(
    clippy::neg_cmp_op_on_partial_ord,
    clippy::excessive_precision,
    clippy::needless_range_loop
)]

pub mod cli;
pub mod connection;
pub mod eigen;
pub mod error;
pub mod fd;
pub mod halfline;
pub mod kinetic;
pub mod model;
pub mod neumann;
pub mod panel;
pub mod quad;
pub mod specfun;

pub use num_complex::Complex64 as C64;

pub use error::{Error, Result};
pub use model::ModelParams;

/// `i`, spelled once.
pub const I: C64 = C64 { re: 0.0, im: 1.0 };

/// Environment variable capping the number of worker threads.
pub const THREADS_ENV: &str = "HEAVYTAIL_THREADS";

/// Thread pool sized by `HEAVYTAIL_THREADS` when set, else by rayon's default.
pub fn worker_pool() -> rayon::ThreadPool {
    let mut b = rayon::ThreadPoolBuilder::new();
    if let Some(n) = std::env::var(THREADS_ENV).ok().and_then(|s| s.trim().parse::<usize>().ok()) {
        b = b.num_threads(n.max(1));
    }
    b.build().expect("thread pool")
}
