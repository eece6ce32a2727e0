//! Dense complex linear algebra used throughout the crate.
//!
//! Everything here works on [`CMatrix`], a small row-major complex matrix.
//! Sizes in this problem domain are desk scale (a few dozen at most), so the
//! routines favour robustness and readability over blocking or SIMD.

mod expm;
mod lu;
mod matrix;
mod schur;
mod svd;
mod sylvester;

pub use expm::{exp_integral, mat_exp};
pub use lu::{inverse, solve_linear, Lu};
pub use matrix::{CMatrix, C64, I, ONE, ZERO};
pub use schur::{eigenvalues, hermitian_eigenvalues, reorder_schur, reorder_schur_mask, schur, SchurForm};
pub use svd::{numeric_rank, orth, singular_values, svd, Svd};
pub use sylvester::solve_sylvester;

use thiserror::Error;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum LinalgError {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("matrix contains non-finite entries")]
    NonFinite,
    #[error("QR iteration did not converge after {iterations} iterations")]
    NonConvergence { iterations: usize },
    #[error("degenerate adjacent swap at position {position} (residual {residual:.3e})")]
    SwapFailure { position: usize, residual: f64 },
    #[error("spectra overlap: eigenvalue separation {separation:.3e} below {threshold:.3e}")]
    SpectraOverlap { separation: f64, threshold: f64 },
    #[error("matrix is singular to working precision (rcond {rcond:.3e})")]
    Singular { rcond: f64 },
}

/// Smallest reciprocal condition number accepted by [`solve_linear`].
pub const SINGULAR_RCOND: f64 = 1e-14;
