//! Crate-wide error type.

use crate::grid::NodeRole;

/// Errors produced by grid construction, operators, solvers, and analysis.
#[derive(Debug, Clone, thiserror::Error)]
pub enum Error {
    /// Spacing must satisfy 0 < h ≤ 1/4 with 1/h an integer.
    #[error("invalid lattice spacing h = {h}: {reason}")]
    InvalidSpacing { h: f64, reason: &'static str },

    /// Node index outside the grid's node list.
    #[error("node index {index} out of range (grid has {count} nodes)")]
    NodeOutOfRange { index: usize, count: usize },

    /// Operation applied to a node of the wrong role.
    #[error("node {index} has role {role:?}, expected {expected}")]
    WrongRole {
        index: usize,
        role: NodeRole,
        expected: &'static str,
    },

    /// A stencil neighbor required by the operation does not exist.
    #[error("node {index}: {detail}")]
    MissingStencil { index: usize, detail: &'static str },

    /// Field length does not match the owning grid.
    #[error("field has {got} values, grid has {expected} nodes")]
    LengthMismatch { expected: usize, got: usize },

    /// A value that must be finite is NaN or infinite.
    #[error("non-finite value in {what}")]
    NonFinite { what: &'static str },

    /// Iterative solver hit the sweep cap before meeting the tolerance.
    #[error("no convergence after {sweeps} sweeps: max update {last_update:e} > tol {tol:e}")]
    NoConvergence {
        sweeps: u64,
        last_update: f64,
        tol: f64,
    },

    /// A documented precondition was violated.
    #[error("precondition violated: {0}")]
    Precondition(String),

    /// Frequency quadrature found no boundary mass at some radius, so
    /// N(r) = rD(r)/H(r) is undefined there.
    #[error("degenerate frequency profile: H({r}) = {h_mass:e} below threshold")]
    DegenerateProfile { r: f64, h_mass: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;
