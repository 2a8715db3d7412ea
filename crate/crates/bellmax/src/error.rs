//! Error type shared across the crate.
//!
//! Every fallible operation returns [`Result`]. Variants are grouped by the
//! kind of precondition that failed so callers (tests, the CLI) can map them
//! to exit codes and skip decisions without string matching.

use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    /// An argument lies outside the mathematical domain of the operation
    /// (e.g. `y` outside `[0,1]`, a mean/moment pair outside the Bellman
    /// domain, a negative function where nonnegativity is required).
    #[error("domain error: {0}")]
    Domain(String),

    /// A tree description is structurally invalid (bad child indices, a leaf
    /// function attached to a different tree, unknown node id, ...).
    #[error("structure error: {0}")]
    Structure(String),

    /// Measures are inconsistent (non-positive, children not summing to the
    /// parent, root mass not 1, a zero-mass weighted average).
    #[error("measure error: {0}")]
    Measure(String),

    /// A requested object would exceed the hard size cap.
    #[error("size error: {0}")]
    TooLarge(String),

    /// An integral diverges at the left endpoint (exponent bookkeeping).
    #[error("non-integrable: {0}")]
    NonIntegrable(String),

    /// A geometric series or average fails its convergence condition.
    #[error("divergent series: {0}")]
    Divergence(String),

    /// Adaptive quadrature could not reach the requested tolerance within
    /// its evaluation budget; `achieved` is the best estimate so far.
    #[error("quadrature did not converge: {message} (achieved estimate {achieved})")]
    Convergence { message: String, achieved: f64 },

    /// The weight admits no finite best pair: the defining ratio is
    /// unbounded, so the weight is not in the relevant class.
    #[error("weight is not admissible: {0}")]
    NotApStar(String),

    /// A best pair degenerated (c <= 0 or the weight vanishes identically).
    #[error("degenerate constants: {0}")]
    DegenerateConstants(String),

    /// The brute-force constraint fit failed to match the prescribed
    /// mean/moment pair.
    #[error("constraint fit failed: {0}")]
    Fit(String),

    /// Invalid CLI/driver configuration (unknown suite, malformed grid, ...).
    #[error("config error: {0}")]
    Config(String),

    /// Underlying I/O failure.
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    /// JSON (de)serialization failure.
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;
