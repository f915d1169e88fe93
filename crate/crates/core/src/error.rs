use thiserror::Error;

use crate::C64;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("beta = {0} is not admissible: need 1 < beta < 5 and beta not in {{2, 3, 4}}")]
    InvalidBeta(f64),

    #[error("equilibrium (1+v^2)^(-beta/2) is not integrable for beta = {0} (need beta > 1)")]
    NonIntegrable(f64),

    #[error("pole of {what} at {at}")]
    Pole { what: &'static str, at: String },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("resonant series: denominator vanishes at n = {n} (delta = {delta})")]
    Resonance { n: usize, delta: f64 },

    #[error("series truncation not certified at s = {s} (certified radius {radius})")]
    Truncation { s: f64, radius: f64 },

    #[error("contraction bound not met: measured kernel norm {norm:.4} at {at} (need <= {limit})")]
    ContractionNotMet { at: f64, norm: f64, limit: f64 },

    #[error("degenerate connection: |a(lambda)| = {0:e}")]
    DegenerateConnection(f64),

    #[error("ill-conditioned matching at s_m = {s_m} (condition {cond:e}); try another matching point")]
    Matching { s_m: f64, cond: f64 },

    #[error("degenerate normalization: |G(0)| = {0:e}")]
    DegenerateNormalization(f64),

    #[error("quadrature did not converge: {0}")]
    Quadrature(String),

    #[error("no convergence: {0}")]
    Convergence(String),

    #[error("root lambda = {lambda} left the disc |lambda| <= {radius}")]
    OutOfDisc { lambda: C64, radius: f64 },

    #[error("resolution error in {what}: mismatch {mismatch:e} exceeds {tol:e}")]
    Resolution { what: String, mismatch: f64, tol: f64 },

    #[error("invalid point: {0}")]
    InvalidPoint(String),
}
