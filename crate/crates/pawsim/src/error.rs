//! Error types shared by the library modules.

use thiserror::Error;

/// Errors raised by clock, universe and redshift operations.
#[derive(Debug, Clone, Error)]
pub enum Error {
    #[error("{context}: dimension mismatch, expected {expected}, got {actual}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        actual: usize,
    },

    #[error("site index {index} out of range for {sites} factors")]
    SiteOutOfRange { index: usize, sites: usize },

    #[error("operator is not Hermitian (defect {defect:.3e}, tolerance {tol:.3e})")]
    NotHermitian { defect: f64, tol: f64 },

    #[error("zero vector cannot be normalized")]
    ZeroVector,

    #[error("invalid clock spectrum: {0}")]
    Spectrum(String),

    #[error("infeasible resolution of the identity: {0}")]
    InfeasibleResolution(String),

    /// The constraint operator has no eigenvalue within tolerance of zero.
    /// Shift the lowest clock frequency or choose compatible spectra.
    #[error("constraint has an empty kernel (no eigenvalue within {tol:.3e} of zero)")]
    EmptyKernel { tol: f64 },

    /// Conditioning amplitude fell below the floor; the conditional state is
    /// undefined at this time value.
    #[error("conditional state undefined at {label}: amplitude {amplitude:.3e} below floor")]
    ZeroAmplitude { label: f64, amplitude: f64 },

    #[error("redshift operator is not invertible (min |eigenvalue| = {min_abs:.3e})")]
    NonInvertible { min_abs: f64 },

    #[error("geometric series diverges: spectral radius {rho:.6} >= 1; use the exact inverse")]
    SeriesDivergent { rho: f64 },

    #[error("degenerate split requested but the redshift operator is invertible (min |eigenvalue| = {min_abs:.3e})")]
    CalledOnInvertible { min_abs: f64 },

    #[error("invalid input: {0}")]
    InvalidInput(String),
}

pub type Result<T> = std::result::Result<T, Error>;
