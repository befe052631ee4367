use std::fmt;

use thiserror::Error;

/// Which normal mode (or the elapsed time itself) triggered a caustic.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CausticMode {
    First,
    Second,
    /// `dt` itself is (numerically) zero: the free mode diverges.
    Free,
}

impl fmt::Display for CausticMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CausticMode::First => write!(f, "mode 1"),
            CausticMode::Second => write!(f, "mode 2"),
            CausticMode::Free => write!(f, "free mode"),
        }
    }
}

#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("invalid model parameters: {0}")]
    InvalidParams(String),

    #[error("DegenerateSpectrum: delta_omega_sq = {delta_omega_sq:e} is below the degeneracy guard")]
    DegenerateSpectrum { delta_omega_sq: f64 },

    #[error("SingularTransform: eigenvector determinant {delta:e} is below the degeneracy guard")]
    SingularTransform { delta: f64 },

    #[error("CausticError: elapsed time {elapsed} is a caustic of {mode} (nearest caustic at t = {nearest})")]
    Caustic {
        mode: CausticMode,
        elapsed: f64,
        nearest: f64,
    },

    #[error("NumericalUnderflow: |Delta(t)| = {modulus:e}")]
    NumericalUnderflow { modulus: f64 },

    #[error("TailLeak: boundary integrand is {ratio:e} of the peak (limit {limit:e})")]
    TailLeak { ratio: f64, limit: f64 },

    #[error("SaturationError: {count} integrand evaluations exceeded the exponent clip")]
    Saturation { count: usize },

    #[error("invalid quadrature: {0}")]
    InvalidQuadrature(String),

    #[error("invalid grid: {0}")]
    InvalidGrid(String),
}

impl Error {
    /// Model-domain failures (as opposed to bad input or numerics setup).
    pub fn is_domain(&self) -> bool {
        matches!(
            self,
            Error::DegenerateSpectrum { .. }
                | Error::SingularTransform { .. }
                | Error::Caustic { .. }
                | Error::NumericalUnderflow { .. }
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
