use thiserror::Error;

/// Failures raised by the simulator.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// Caller passed operands of incompatible shape.
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    /// A contract on the arguments was violated.
    #[error("contract violation: {0}")]
    Contract(String),

    /// Norm or trace collapsed below the renormalization floor.
    #[error("degenerate state: norm {norm:e} is below the renormalization floor")]
    DegenerateState { norm: f64 },

    /// A numerical quantity left its physically admissible range.
    #[error("numerical integrity: {0}")]
    NumericalIntegrity(String),

    /// Rejected configuration. The message names the violated constraint.
    #[error("configuration: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, Error>;
