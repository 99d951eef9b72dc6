//! Finite-difference tooling for the gradient-degenerate Neumann problem
//!
//!   Δu = 0 in B₁⁺ = {x₁²+x₂² < 1, x₁ > 0},
//!   min{∂₁u, |∇′u|} = 0 on B₁′ = {x₁ = 0, |x₂| < 1},
//!   u = g on the arc ∂B₁ ∩ {x₁ ≥ 0},
//!
//! on a uniform half-disc lattice: grid construction, monotone discrete
//! operators, three sweep solvers (maximal Neumann subsolution, Signorini
//! thin-obstacle, minimal Perron supersolution), boundary-trace analysis
//! (contact partition, Almgren frequency, regularity-exponent fits,
//! complex-square identities), the homogeneous solution family, and
//! tangential sup-convolution comparison tooling.

pub mod analysis;
pub mod convolution;
pub mod error;
pub mod grid;
pub mod homogeneous;
pub mod operators;
pub mod solvers;

pub use analysis::{
    almgren_frequency, boundary_max_principle_check, boundary_trace, complex_square_check,
    default_exponent_radii, default_frequency_radii, extract_partition, fit_regularity_exponent,
    lipschitz_ratio, BoundaryPartition, BoundaryTrace, ComplexSquareReport, ExponentFit,
    FrequencyProfile,
};
pub use convolution::{
    comparison_check, harmonic_lift, tangential_sup_convolution, ComparisonOutcome,
    ComparisonWitness, LiftOutcome,
};
pub use error::{Error, Result};
pub use grid::{build_half_disc_grid, project_to_arc, Grid, NodeRole};
pub use operators::{
    boundary_residual, inward_normal_difference, laplacian_residual, upwind_tangential_slope,
    DifferenceOrder, Field,
};
pub use solvers::{
    default_tolerance, near_optimal_omega, solve_minimal_supersolution, solve_neumann,
    solve_neumann_relaxed, solve_signorini, solve_signorini_relaxed, BoundaryDatum, SolverReport,
};
