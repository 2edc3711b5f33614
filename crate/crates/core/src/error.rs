//! Error type shared across the crate.

use thiserror::Error;

/// Errors raised by matrix kernels, Gram-space operations, scenario builders
/// and simulators.
#[derive(Debug, Clone, Error)]
pub enum Error {
    #[error("dimension mismatch in {context}: {detail}")]
    DimensionMismatch {
        context: &'static str,
        detail: String,
    },

    #[error("matrix entries must be finite (found NaN or infinity)")]
    NonFinite,

    #[error("matrix is not Hermitian: asymmetry {asymmetry:.3e} exceeds tolerance {tolerance:.3e}")]
    NotHermitian { asymmetry: f64, tolerance: f64 },

    #[error("matrix is not positive semidefinite: pivot {pivot:.6e} at index {index} is below -{tolerance:.3e}")]
    NotPositiveSemidefinite {
        index: usize,
        pivot: f64,
        tolerance: f64,
    },

    #[error("singular gram ({context}): rank {rank} < dimension {dim}")]
    SingularGram {
        context: String,
        rank: usize,
        dim: usize,
    },

    #[error("duplicate label {label:?}")]
    DuplicateLabel { label: String },

    #[error("unknown label {label:?}")]
    UnknownLabel { label: String },

    #[error("unknown group {group:?}")]
    UnknownGroup { group: String },

    #[error("invalid permutation: {detail}")]
    InvalidPermutation { detail: String },

    #[error("too few trials: {n} (need at least {min})")]
    TooFewTrials { n: usize, min: usize },

    #[error("codebook cap exceeded: n*R = {nr:.4} bits > {cap} bits")]
    CodebookCapExceeded { nr: f64, cap: f64 },

    #[error("invalid scenario: {0}")]
    InvalidScenario(String),
}

impl Error {
    pub(crate) fn dims(context: &'static str, detail: impl Into<String>) -> Self {
        Error::DimensionMismatch {
            context,
            detail: detail.into(),
        }
    }

    pub(crate) fn singular(context: impl Into<String>, rank: usize, dim: usize) -> Self {
        Error::SingularGram {
            context: context.into(),
            rank,
            dim,
        }
    }

    /// Replace the context of a [`Error::SingularGram`], leaving other
    /// variants untouched. Used by callers that know which matrix they
    /// handed to a generic solver.
    pub(crate) fn named(self, context: &str) -> Self {
        match self {
            Error::SingularGram { rank, dim, .. } => Error::singular(context, rank, dim),
            other => other,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
