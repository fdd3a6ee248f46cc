use thiserror::Error;

/// Failures reported by the numerical routines of this crate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("{op}: no convergence to tolerance {tol:e} within {iterations} iterations")]
    NonConvergence {
        op: &'static str,
        tol: f64,
        iterations: usize,
    },
    #[error("boundary is not smooth at u = {u:?}")]
    NonSmoothPoint { u: Vec<f64> },
    #[error("{op}: tangent dimension q = {q} is not supported")]
    UnsupportedDim { op: &'static str, q: usize },
    #[error("variance scale must be positive and finite, got {0}")]
    InvalidScale(f64),
    #[error("center is off the boundary by {0:e}")]
    CenterOffBoundary(f64),
    #[error("design matrix is rank deficient (rank {rank} < {cols})")]
    RankDeficient { rank: usize, cols: usize },
    #[error("need at least {needed} scales, got {got}")]
    InsufficientScales { needed: usize, got: usize },
    #[error("{method}: p-value is not monotone along the slice at u = {u}")]
    NonMonotoneSlice { method: String, u: f64 },
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("unsupported: {0}")]
    Unsupported(String),
}

pub type Result<T> = std::result::Result<T, Error>;
