use thiserror::Error;

/// Errors raised by the polytope, potential and divergence routines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("domain error: {0}")]
    Domain(String),

    /// A flat geodesic left the polytope; `exit_time` is the first parameter
    /// at which some facet value reaches zero.
    #[error("flat geodesic exits the polytope at t = {exit_time}")]
    GeodesicExit { exit_time: f64 },

    #[error("inconsistent polytope: {0}")]
    Inconsistent(String),

    #[error("empty face: {0}")]
    EmptyFace(String),

    #[error("face normals do not extend to a lattice basis: {0}")]
    NonSmoothFace(String),

    #[error("numerical failure: {message} (last residual {residual:e})")]
    Numerical { message: String, residual: f64 },

    #[error("no solution: {0}")]
    NoSolution(String),

    #[error("not torifiable: {0}")]
    NotTorifiable(String),

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("no compact torification: {0}")]
    NoCompactTorification(String),

    #[error("minimizer lies on the boundary of the face: {0}")]
    BoundaryOfFace(String),

    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_dim(expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, got })
    }
}
