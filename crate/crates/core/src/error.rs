use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("validation error: {0}")]
    Validation(String),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("layer {layer} has no generator")]
    MissingGenerator { layer: usize },

    #[error("vertex enumeration over {variables} sign variables exceeds the cap of {cap}; use gamma_opt or a partition plan")]
    Capacity { variables: usize, cap: usize },

    #[error("superoperator of layer {layer} is numerically singular (condition {condition:.3e})")]
    Singular { layer: usize, condition: f64 },

    #[error("non-physical state: {0}")]
    NonPhysical(String),

    #[error("optimization failed: {0}")]
    Optimization(String),

    #[error("infeasible: {0}")]
    Infeasible(String),

    #[error("numerical failure: {0}")]
    Numerical(String),
}

impl Error {
    /// True for failures of the numerics rather than of the inputs.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::Singular { .. }
                | Error::NonPhysical(_)
                | Error::Optimization(_)
                | Error::Infeasible(_)
                | Error::Numerical(_)
        )
    }
}
