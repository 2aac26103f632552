//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// An argument is outside the mathematical domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// Mismatched dimensions between arguments.
    #[error("shape error: {0}")]
    Shape(String),

    /// A dense enumeration would exceed the configured entry cap.
    #[error("capacity error: {required} entries required, cap is {cap}")]
    Capacity { required: u128, cap: u128 },

    /// Geometric degeneracy (collinear directions, zero off-diagonal weight).
    #[error("degenerate configuration: {0}")]
    Degenerate(String),

    /// Evaluation too close to a pole of a limit transform.
    #[error("evaluation within 1e-6 of the pole at {location}")]
    Pole { location: f64 },

    /// A numerical routine failed to converge or produced invalid output.
    #[error("numeric error: {0}")]
    Numeric(String),

    /// Malformed serialized input.
    #[error("parse error: {0}")]
    Parse(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
