use thiserror::Error;

/// Unified error type for the whole crate.
///
/// Variants are grouped by how callers should react: `Domain`/`Data`/`Config`
/// indicate bad inputs, the numeric variants indicate a computation that could
/// not be completed at the requested accuracy.
#[derive(Debug, Error)]
pub enum Error {
    /// An argument lies outside the mathematical domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// Malformed or inconsistent input data (shapes, schemas, file contents).
    #[error("data error: {0}")]
    Data(String),

    /// Invalid configuration value (depths, grid sizes, orders, counts).
    #[error("config error: {0}")]
    Config(String),

    /// Invalid weight vector (zero or negative total mass where positive is required).
    #[error("weight error: {0}")]
    Weight(String),

    /// A linear system could not be solved reliably.
    #[error("linear algebra error: {message} (condition estimate {condition:.3e})")]
    LinearAlgebra { message: String, condition: f64 },

    /// Kernel bandwidth leaves too little local data to fit.
    #[error("bandwidth error: {0}")]
    Bandwidth(String),

    /// An iterative solver hit its iteration cap before reaching tolerance.
    #[error("no convergence after {iterations} iterations (marginal violation {violation:.3e})")]
    NonConvergence { iterations: usize, violation: f64 },

    /// Input exceeds a hard size cap of an exact algorithm.
    #[error("resource limit: {0}")]
    Resource(String),

    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),

    /// Text that failed to parse as a number, CSV record, or similar.
    #[error("parse error: {0}")]
    Parse(String),

    #[error("serialization error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
