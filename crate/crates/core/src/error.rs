use thiserror::Error;

use crate::matnum::{LinalgError, C64};

#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error(transparent)]
    Linalg(#[from] LinalgError),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("evaluation at {lambda} is too close to a pole (condition {cond:.3e})")]
    PoleProximity { lambda: C64, cond: f64 },

    #[error("realization is not monic: feedthrough differs from identity by {deviation:.3e}")]
    NotMonic { deviation: f64 },

    #[error("entry ({row}, {col}) is improper: numerator degree exceeds denominator degree")]
    ImproperEntry { row: usize, col: usize },

    #[error("not contractive on real line: {0}")]
    NotContractive(String),

    #[error("real eigenvalues of the Hamiltonian could not be split ({candidates} candidate subspaces tried)")]
    RealSpectrumUnresolved { candidates: usize },

    #[error("parameter set is not admissible: {0}")]
    NotAdmissible(String),

    #[error("limit defining kappa_R did not converge (last difference {difference:.3e})")]
    LimitNotConverged { difference: f64 },

    #[error("potential is singular at x = {x} (condition {cond:.3e})")]
    SingularAt { x: f64, cond: f64 },

    #[error("potential is not summable on the half-line; the asymptotic boundary condition cannot be truncated")]
    NotSummable,

    #[error("integration did not converge: {steps} steps, Richardson estimate {estimate:.3e}")]
    NoConvergence { steps: usize, estimate: f64 },
}

impl Error {
    /// True for errors caused by the input violating a hypothesis, as
    /// opposed to a numerical or convergence failure.
    pub fn is_validation(&self) -> bool {
        match self {
            Error::Linalg(e) => matches!(e, LinalgError::DimensionMismatch(_) | LinalgError::NonFinite),
            Error::DimensionMismatch(_)
            | Error::InvalidInput(_)
            | Error::NotMonic { .. }
            | Error::ImproperEntry { .. }
            | Error::NotContractive(_)
            | Error::NotAdmissible(_)
            | Error::NotSummable => true,
            Error::PoleProximity { .. }
            | Error::RealSpectrumUnresolved { .. }
            | Error::LimitNotConverged { .. }
            | Error::SingularAt { .. }
            | Error::NoConvergence { .. } => false,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
