//! Sparse storage and the solvers used by the time-stepping schemes.

mod csr;
mod dense3;
mod krylov;

pub use csr::CsrMatrix;
pub use dense3::{solve3, Mat3};
pub use krylov::{cg, gmres, SolveStats, SolverOptions};

/// Euclidean norm.
pub fn norm2(x: &[f64]) -> f64 {
    dot(x, x).sqrt()
}

pub fn dot(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| a * b).sum()
}
