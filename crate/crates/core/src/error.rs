use thiserror::Error;

/// Errors raised by the simulator. Neuron indices and positions carried in
/// these variants are 1-based, matching every user-facing report.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    #[error("no co-location-free geometry found after {attempts} attempts (n = {n}, lattice holds {lattice} points)")]
    RetryExhausted {
        attempts: usize,
        n: usize,
        lattice: u64,
    },

    #[error("neurons {first} and {second} are co-located")]
    Colocation { first: usize, second: usize },

    #[error("size mismatch: expected {expected}, found {found}")]
    SizeMismatch { expected: usize, found: usize },

    #[error("weight matrix is not symmetric at ({row}, {col})")]
    NotSymmetric { row: usize, col: usize },

    #[error("weight matrix has nonzero diagonal at {index}")]
    NonZeroDiagonal { index: usize },

    #[error("position {position} is already clamped")]
    CursorClamped { position: usize },

    #[error("degenerate stimulus pair: neuron {neuron} used for both sources")]
    DegeneratePair { neuron: usize },

    #[error("interplay did not terminate within {limit} rounds")]
    NonTermination { limit: usize },

    #[error("{path}: {message}")]
    Io { path: String, message: String },

    #[error("invalid input: {0}")]
    Invalid(String),
}

impl Error {
    pub fn io(path: &std::path::Path, e: impl std::fmt::Display) -> Self {
        Error::Io {
            path: path.display().to_string(),
            message: e.to_string(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
