//! Discrete operators: interior 5-point Laplacian residual, inward normal
//! difference ∂₁u on the flat boundary, a monotone upwind slope standing in
//! for the tangential gradient magnitude |∇′u|, and their composite
//! min{∂₁u, |∇′u|} boundary residual.
//!
//! Residuals are raw (unscaled); callers apply relative tolerances through
//! `Field::scale`.

use crate::error::{Error, Result};
use crate::grid::{Grid, NodeRole};

/// One real value per grid node, with the max absolute value cached.
#[derive(Debug, Clone)]
pub struct Field {
    values: Vec<f64>,
    scale: f64,
}

impl Field {
    /// Wraps a value vector, checking length and finiteness.
    pub fn new(grid: &Grid, values: Vec<f64>) -> Result<Field> {
        if values.len() != grid.node_count() {
            return Err(Error::LengthMismatch {
                expected: grid.node_count(),
                got: values.len(),
            });
        }
        let mut scale = 0f64;
        for &v in &values {
            if !v.is_finite() {
                return Err(Error::NonFinite {
                    what: "field values",
                });
            }
            scale = scale.max(v.abs());
        }
        Ok(Field { values, scale })
    }

    /// Samples a function of (x₁, x₂) at every node.
    pub fn from_fn(grid: &Grid, f: impl Fn(f64, f64) -> f64) -> Result<Field> {
        let values = (0..grid.node_count())
            .map(|idx| {
                let (x1, x2) = grid.point(idx);
                f(x1, x2)
            })
            .collect();
        Field::new(grid, values)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Cached max |value|.
    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn get(&self, idx: usize) -> f64 {
        self.values[idx]
    }

    /// Pointwise map into a new checked field.
    pub fn map(&self, grid: &Grid, f: impl Fn(f64) -> f64) -> Result<Field> {
        Field::new(grid, self.values.iter().map(|&v| f(v)).collect())
    }
}

/// Stencil order of the inward normal difference.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DifferenceOrder {
    /// (f(h,x₂) − f(0,x₂))/h; used inside solvers (keeps updates closed-form).
    One,
    /// (−3f(0,x₂) + 4f(h,x₂) − f(2h,x₂))/(2h); used in analysis and traces.
    Two,
}

fn check_len(grid: &Grid, f: &Field) -> Result<()> {
    if f.values.len() != grid.node_count() {
        return Err(Error::LengthMismatch {
            expected: grid.node_count(),
            got: f.values.len(),
        });
    }
    Ok(())
}

fn require_role(grid: &Grid, idx: usize, want: NodeRole, expected: &'static str) -> Result<()> {
    let role = grid.try_role(idx)?;
    if role != want {
        return Err(Error::WrongRole {
            index: idx,
            role,
            expected,
        });
    }
    Ok(())
}

/// 5-point Laplacian residual (f_E + f_W + f_N + f_S − 4f_C)/h² at an
/// interior node. O(h²)-consistent with Δf on C⁴ fields.
pub fn laplacian_residual(grid: &Grid, f: &Field, idx: usize) -> Result<f64> {
    check_len(grid, f)?;
    require_role(grid, idx, NodeRole::Interior, "Interior")?;
    let [w, e, s, n] = grid.stencil(idx);
    // Interior nodes have a full stencil by the grid invariant.
    let (w, e, s, n) = (w.unwrap(), e.unwrap(), s.unwrap(), n.unwrap());
    let h = grid.h();
    let v = &f.values;
    Ok((v[e] + v[w] + v[n] + v[s] - 4.0 * v[idx]) / (h * h))
}

/// Inward normal difference approximating ∂₁f at a flat-boundary node.
pub fn inward_normal_difference(
    grid: &Grid,
    f: &Field,
    idx: usize,
    order: DifferenceOrder,
) -> Result<f64> {
    check_len(grid, f)?;
    require_role(grid, idx, NodeRole::FlatBoundary, "FlatBoundary")?;
    let (_, j) = grid.coords(idx);
    let h = grid.h();
    let one = grid.index_of(1, j).ok_or(Error::MissingStencil {
        index: idx,
        detail: "missing inward neighbor (h, x₂)",
    })?;
    match order {
        DifferenceOrder::One => Ok((f.values[one] - f.values[idx]) / h),
        DifferenceOrder::Two => {
            let two = grid.index_of(2, j).ok_or(Error::MissingStencil {
                index: idx,
                detail: "missing second layer (2h, x₂) for the order-2 stencil",
            })?;
            Ok((-3.0 * f.values[idx] + 4.0 * f.values[one] - f.values[two]) / (2.0 * h))
        }
    }
}

/// Monotone upwind slope T(f, x) = max(f(0,x₂−h)−f, f(0,x₂+h)−f, 0)/h.
///
/// Nonnegative; zero exactly when the node value is ≥ both tangential
/// neighbors, so the zero set is the discrete tangential-local-maximum set.
pub fn upwind_tangential_slope(grid: &Grid, f: &Field, idx: usize) -> Result<f64> {
    check_len(grid, f)?;
    require_role(grid, idx, NodeRole::FlatBoundary, "FlatBoundary")?;
    let (_, j) = grid.coords(idx);
    let lo = grid.index_of(0, j - 1).ok_or(Error::MissingStencil {
        index: idx,
        detail: "missing tangential neighbor below",
    })?;
    let hi = grid.index_of(0, j + 1).ok_or(Error::MissingStencil {
        index: idx,
        detail: "missing tangential neighbor above",
    })?;
    let c = f.values[idx];
    Ok((f.values[lo] - c).max(f.values[hi] - c).max(0.0) / grid.h())
}

/// Degenerate boundary residual min(∂₁f order 1, T(f)) at a flat node.
pub fn boundary_residual(grid: &Grid, f: &Field, idx: usize) -> Result<f64> {
    let dn = inward_normal_difference(grid, f, idx, DifferenceOrder::One)?;
    let t = upwind_tangential_slope(grid, f, idx)?;
    Ok(dn.min(t))
}
