//! Closed-form κ-homogeneous solutions u = r^κ·m(θ), θ = atan2(|x₁|, x₂) ∈
//! [0, π], with m solving m″ + κ²m = 0 and the degenerate boundary condition
//! min{m′(0), |m(0)|} = min{−m′(π), |m(π)|} = 0 at both flat rays.
//!
//! Admissible angular profiles and their κ sets:
//!
//!   sin(κθ)   (ImPow):      κ odd, or κ half-odd (= (2k−1)/2)
//!   cos(κθ)   (RePowPlus):  κ integer, or κ ∈ {1/2, 5/2, 9/2, …}
//!   −cos(κθ)  (RePowMinus): κ integer, or κ ∈ {3/2, 7/2, 11/2, …}
//!   |x₁|      (AbsX1):      κ = 1 (the sin family written directly)
//!
//! These are the ground-truth oracles for the solvers and analysis modules.

use crate::error::{Error, Result};
use crate::grid::{Grid, NodeRole};
use crate::operators::{
    inward_normal_difference, laplacian_residual, upwind_tangential_slope, DifferenceOrder, Field,
};

/// Angular-profile family of a homogeneous solution.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Family {
    /// |x₁| = r·sin(θ); contact on the whole flat segment.
    AbsX1,
    /// Im((x₂+i|x₁|)^κ) = r^κ·sin(κθ).
    ImPow,
    /// Re((x₂+i|x₁|)^κ) = r^κ·cos(κθ).
    RePowPlus,
    /// −Re((x₂+i|x₁|)^κ) = −r^κ·cos(κθ).
    RePowMinus,
}

impl Family {
    pub fn name(self) -> &'static str {
        match self {
            Family::AbsX1 => "AbsX1",
            Family::ImPow => "ImPow",
            Family::RePowPlus => "RePowPlus",
            Family::RePowMinus => "RePowMinus",
        }
    }
}

/// Expected contact/free-boundary/Neumann partition of the flat segment
/// (−1,1) ∋ x₂ for an admissible homogeneous solution.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TablePartition {
    /// 𝒞 = (−1,1), Γ = ∅, 𝒩 = ∅.
    AllContact,
    /// 𝒞 = (−1,1)∖{0}, Γ = {0}, 𝒩 = ∅.
    ContactExceptOrigin,
    /// 𝒞 = (0,1), Γ = {0}, 𝒩 = (−1,0).
    SplitContactPositive,
    /// 𝒞 = (−1,0), Γ = {0}, 𝒩 = (0,1).
    SplitContactNegative,
    /// 𝒞 = ∅, Γ = ∅, 𝒩 = (−1,1).
    AllNeumann,
}

impl TablePartition {
    /// Is x₂ in the contact set 𝒞?
    pub fn contact_contains(self, x2: f64) -> bool {
        match self {
            TablePartition::AllContact => true,
            TablePartition::ContactExceptOrigin => x2 != 0.0,
            TablePartition::SplitContactPositive => x2 > 0.0,
            TablePartition::SplitContactNegative => x2 < 0.0,
            TablePartition::AllNeumann => false,
        }
    }

    /// Is x₂ in the non-contact (Neumann) set 𝒩?
    pub fn neumann_contains(self, x2: f64) -> bool {
        match self {
            TablePartition::AllContact | TablePartition::ContactExceptOrigin => false,
            TablePartition::SplitContactPositive => x2 < 0.0,
            TablePartition::SplitContactNegative => x2 > 0.0,
            TablePartition::AllNeumann => true,
        }
    }

    /// Free-boundary points Γ.
    pub fn gamma(self) -> &'static [f64] {
        match self {
            TablePartition::AllContact | TablePartition::AllNeumann => &[],
            _ => &[0.0],
        }
    }
}

/// An admissible κ-homogeneous solution with a scalar multiplier.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HomogeneousSolution {
    family: Family,
    /// κ stored as 2κ so admissibility is exact integer arithmetic.
    kappa_halves: i64,
    normalization: f64,
}

fn admissible(family: Family, halves: i64) -> bool {
    if halves <= 0 {
        return false;
    }
    let half_odd = halves % 2 == 1;
    match family {
        Family::AbsX1 => halves == 2,
        // κ odd (2κ ≡ 2 mod 4) or κ half-odd.
        Family::ImPow => half_odd || (halves / 2) % 2 == 1,
        // κ integer or 2κ ∈ {1, 5, 9, …}.
        Family::RePowPlus => !half_odd || halves % 4 == 1,
        // κ integer or 2κ ∈ {3, 7, 11, …}.
        Family::RePowMinus => !half_odd || halves % 4 == 3,
    }
}

impl HomogeneousSolution {
    /// Builds from a real κ; rejects κ that is not a half-integer or is
    /// inadmissible for the family.
    pub fn new(family: Family, kappa: f64, normalization: f64) -> Result<Self> {
        let halves = (2.0 * kappa).round();
        if !kappa.is_finite() || (2.0 * kappa - halves).abs() > 1e-12 {
            return Err(Error::Precondition(format!(
                "κ = {kappa} is not a half-integer"
            )));
        }
        Self::from_halves(family, halves as i64, normalization)
    }

    /// Builds from 2κ directly.
    pub fn from_halves(family: Family, kappa_halves: i64, normalization: f64) -> Result<Self> {
        if !admissible(family, kappa_halves) {
            return Err(Error::Precondition(format!(
                "(family {}, κ = {}) is not an admissible homogeneous pair",
                family.name(),
                kappa_halves as f64 / 2.0
            )));
        }
        if !normalization.is_finite() {
            return Err(Error::NonFinite {
                what: "normalization",
            });
        }
        Ok(HomogeneousSolution {
            family,
            kappa_halves,
            normalization,
        })
    }

    pub fn family(&self) -> Family {
        self.family
    }

    pub fn kappa(&self) -> f64 {
        self.kappa_halves as f64 / 2.0
    }

    pub fn kappa_halves(&self) -> i64 {
        self.kappa_halves
    }

    pub fn normalization(&self) -> f64 {
        self.normalization
    }

    /// The expected flat-boundary partition for this solution.
    pub fn table_partition(&self) -> TablePartition {
        table_partition(self)
    }
}

/// Raw profile evaluation r^κ·m(κθ) without the admissibility gate, for
/// perturbation studies of near-miss κ. Even in x₁.
pub fn eval_profile_raw(family: Family, kappa: f64, x1: f64, x2: f64) -> f64 {
    let a = x1.abs();
    match family {
        Family::AbsX1 => a,
        _ => {
            let r = (a * a + x2 * x2).sqrt();
            if r == 0.0 {
                return 0.0;
            }
            let theta = a.atan2(x2); // ∈ [0, π]
            let m = match family {
                Family::ImPow => (kappa * theta).sin(),
                Family::RePowPlus => (kappa * theta).cos(),
                Family::RePowMinus => -(kappa * theta).cos(),
                Family::AbsX1 => unreachable!(),
            };
            r.powf(kappa) * m
        }
    }
}

/// Evaluates the solution at (x₁, x₂); even in x₁.
pub fn eval_homogeneous(sol: &HomogeneousSolution, x1: f64, x2: f64) -> f64 {
    sol.normalization * eval_profile_raw(sol.family, sol.kappa(), x1, x2)
}

/// The contact/free-boundary/Neumann row for an admissible solution.
///
/// Half-odd sin profiles vanish on {x₂ > 0} with positive normal slope
/// there (contact on the positive ray); the half-odd ±cos profiles are
/// their x₂-reflections (contact on the negative ray); integer-κ cos
/// profiles have vanishing normal derivative on all of B₁′ (pure Neumann);
/// odd-κ sin profiles vanish identically on B₁′ with normal slope
/// κ·x₂^{κ−1} ≥ 0, degenerate only at the origin.
pub fn table_partition(sol: &HomogeneousSolution) -> TablePartition {
    let halves = sol.kappa_halves;
    let half_odd = halves % 2 == 1;
    match sol.family {
        Family::AbsX1 => TablePartition::AllContact,
        Family::ImPow => {
            if half_odd {
                TablePartition::SplitContactPositive
            } else if halves == 2 {
                // κ = 1: sin(θ)·r = |x₁|, same row as AbsX1.
                TablePartition::AllContact
            } else {
                TablePartition::ContactExceptOrigin
            }
        }
        Family::RePowPlus | Family::RePowMinus => {
            if half_odd {
                TablePartition::SplitContactNegative
            } else {
                TablePartition::AllNeumann
            }
        }
    }
}

/// Samples a raw profile on the grid and returns
/// (max interior |laplacian residual|·h², max flat |min(∂₁ order 2, T)|).
///
/// The order-2 inward difference is the analysis-grade stencil; order 1
/// would report O(h) even on exactly Neumann rows.
pub fn verify_profile_residual(family: Family, kappa: f64, grid: &Grid) -> (f64, f64) {
    let f = Field::from_fn(grid, |x1, x2| eval_profile_raw(family, kappa, x1, x2))
        .expect("profile values are finite");
    let h2 = grid.h() * grid.h();
    let mut max_int = 0f64;
    let mut max_bnd = 0f64;
    for idx in 0..grid.node_count() {
        match grid.role(idx) {
            NodeRole::Interior => {
                let r = laplacian_residual(grid, &f, idx).expect("interior node");
                max_int = max_int.max(r.abs() * h2);
            }
            NodeRole::FlatBoundary => {
                let dn = inward_normal_difference(grid, &f, idx, DifferenceOrder::Two)
                    .expect("flat node");
                let t = upwind_tangential_slope(grid, &f, idx).expect("flat node");
                max_bnd = max_bnd.max(dn.min(t).abs());
            }
            _ => {}
        }
    }
    (max_int, max_bnd)
}

/// Residual maxima of an admissible solution on a grid, including its
/// normalization factor.
pub fn verify_homogeneous_residual(sol: &HomogeneousSolution, grid: &Grid) -> (f64, f64) {
    let (i, b) = verify_profile_residual(sol.family, sol.kappa(), grid);
    let s = sol.normalization.abs();
    (i * s, b * s)
}
