//! Discrete half-disc B₁⁺ = {x₁²+x₂² < 1, x₁ > 0} with its flat boundary
//! B₁′ = {x₁ = 0, |x₂| < 1} on a uniform lattice x = (i·h, j·h), i ≥ 0.
//!
//! Nodes are stored row-major in i with j ascending inside each row, so the
//! node order is lexicographic in (i, j) and sweep-based solvers are
//! bit-for-bit reproducible. Row i holds exactly the j with i² + j² ≤ n²,
//! n = 1/h, a contiguous range [−J_i, J_i]; this makes in-row neighbors
//! adjacent in memory and row-to-row neighbors computable from offsets.

use crate::error::{Error, Result};

/// Classification of a lattice node.
///
/// - `Interior`: all four stencil neighbors lie in the closed half-disc.
/// - `FlatBoundary`: x₁ = 0, |x₂| < 1−h; carries the degenerate condition.
/// - `OuterArc`: has a lattice neighbor outside the closed disc (or is one
///   of (0, ±(1−h)), which must carry arc data for the flat stencils at
///   |x₂| = 1−2h to close); receives Dirichlet data by radial projection.
/// - `Corner`: the endpoints (0, ±1), treated as arc nodes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum NodeRole {
    Interior,
    FlatBoundary,
    OuterArc,
    Corner,
}

impl NodeRole {
    /// Stable name used in CSV dumps.
    pub fn name(self) -> &'static str {
        match self {
            NodeRole::Interior => "Interior",
            NodeRole::FlatBoundary => "FlatBoundary",
            NodeRole::OuterArc => "OuterArc",
            NodeRole::Corner => "Corner",
        }
    }
}

/// Immutable half-disc lattice. Safe to share across threads.
#[derive(Debug, Clone)]
pub struct Grid {
    h: f64,
    n: i64,
    /// J_i = ⌊√(n²−i²)⌋ for i in 0..=n.
    row_j_max: Vec<i64>,
    /// Start of row i in node index space; last entry is the node count.
    row_offset: Vec<usize>,
    roles: Vec<NodeRole>,
}

/// Largest s ≥ 0 with s² ≤ v.
fn isqrt(v: i64) -> i64 {
    debug_assert!(v >= 0);
    let mut s = (v as f64).sqrt() as i64;
    while s * s > v {
        s -= 1;
    }
    while (s + 1) * (s + 1) <= v {
        s += 1;
    }
    s
}

/// Builds the lattice for spacing h. Rejects h > 1/4, non-positive h, and
/// spacings whose reciprocal is not an integer.
pub fn build_half_disc_grid(h: f64) -> Result<Grid> {
    if !h.is_finite() || h <= 0.0 {
        return Err(Error::InvalidSpacing {
            h,
            reason: "spacing must be positive and finite",
        });
    }
    let n = (1.0 / h).round();
    if n < 4.0 {
        return Err(Error::InvalidSpacing {
            h,
            reason: "spacing must satisfy h ≤ 1/4 (coarser stencils degenerate)",
        });
    }
    if (n * h - 1.0).abs() > 1e-9 || n > 1e7 {
        return Err(Error::InvalidSpacing {
            h,
            reason: "1/h must be an integer",
        });
    }
    let n = n as i64;
    // Use 1/n as the working spacing so mirror-image coordinates are exact.
    let h = 1.0 / n as f64;

    let mut row_j_max = Vec::with_capacity(n as usize + 1);
    let mut row_offset = Vec::with_capacity(n as usize + 2);
    let mut count = 0usize;
    for i in 0..=n {
        let j_max = isqrt(n * n - i * i);
        row_offset.push(count);
        count += (2 * j_max + 1) as usize;
        row_j_max.push(j_max);
    }
    row_offset.push(count);

    let mut roles = vec![NodeRole::Interior; count];
    for i in 0..=n {
        let j_max = row_j_max[i as usize];
        for j in -j_max..=j_max {
            let idx = row_offset[i as usize] + (j + j_max) as usize;
            roles[idx] = if i == 0 {
                if j.abs() == n {
                    NodeRole::Corner
                } else if j.abs() <= n - 2 {
                    NodeRole::FlatBoundary
                } else {
                    // (0, ±(1−h)): all four neighbors stay in the closed
                    // disc, but the node must carry arc data so the flat
                    // stencil one step in is closed.
                    NodeRole::OuterArc
                }
            } else {
                // Eastern or tangential neighbor leaving the closed disc
                // marks the node as an arc-data node. The western neighbor
                // (i−1, j) always exists because J is nonincreasing in i.
                let east_out = (i + 1) * (i + 1) + j * j > n * n;
                let tang_out = i * i + (j.abs() + 1) * (j.abs() + 1) > n * n;
                if east_out || tang_out {
                    NodeRole::OuterArc
                } else {
                    NodeRole::Interior
                }
            };
        }
    }

    Ok(Grid {
        h,
        n,
        row_j_max,
        row_offset,
        roles,
    })
}

impl Grid {
    /// Lattice spacing (exactly 1/n).
    pub fn h(&self) -> f64 {
        self.h
    }

    /// Reciprocal spacing n = 1/h.
    pub fn n(&self) -> i64 {
        self.n
    }

    /// Total number of lattice nodes.
    pub fn node_count(&self) -> usize {
        self.roles.len()
    }

    /// Node index for lattice coordinates, if the node exists.
    pub fn index_of(&self, i: i64, j: i64) -> Option<usize> {
        if i < 0 || i > self.n {
            return None;
        }
        let j_max = self.row_j_max[i as usize];
        if j.abs() > j_max {
            return None;
        }
        Some(self.row_offset[i as usize] + (j + j_max) as usize)
    }

    /// Lattice coordinates (i, j) of a node index.
    pub fn coords(&self, idx: usize) -> (i64, i64) {
        debug_assert!(idx < self.node_count());
        // Rows are short (≤ 2n+1); binary search the offset table.
        let i = match self.row_offset.binary_search(&idx) {
            Ok(mut r) => {
                // Empty rows cannot occur (every row has 2J+1 ≥ 1 nodes),
                // but multiple offsets may share a value at the table end.
                while r + 1 < self.row_offset.len() - 1 && self.row_offset[r + 1] == idx {
                    r += 1;
                }
                r
            }
            Err(r) => r - 1,
        };
        let j_max = self.row_j_max[i];
        let j = (idx - self.row_offset[i]) as i64 - j_max;
        (i as i64, j)
    }

    /// Physical coordinates (x₁, x₂) = (i·h, j·h) of a node index.
    pub fn point(&self, idx: usize) -> (f64, f64) {
        let (i, j) = self.coords(idx);
        (i as f64 * self.h, j as f64 * self.h)
    }

    /// Role of a node index.
    pub fn role(&self, idx: usize) -> NodeRole {
        self.roles[idx]
    }

    /// Checked role lookup.
    pub fn try_role(&self, idx: usize) -> Result<NodeRole> {
        self.roles
            .get(idx)
            .copied()
            .ok_or(Error::NodeOutOfRange {
                index: idx,
                count: self.node_count(),
            })
    }

    /// Largest |j| present in row i (panics if the row does not exist).
    pub fn row_j_max(&self, i: i64) -> i64 {
        self.row_j_max[i as usize]
    }

    /// Start of row i in node index space.
    pub fn row_offset(&self, i: i64) -> usize {
        self.row_offset[i as usize]
    }

    /// Inclusive j-range of Interior nodes in row i, if any.
    ///
    /// Row i ≥ 1 is interior exactly on the contiguous range
    /// |j| ≤ min(J_i − 1, J_{i+1}): the in-row neighbors need |j|+1 ≤ J_i
    /// and the eastern neighbor needs |j| ≤ J_{i+1}; the western row is
    /// always wider. Row 0 and row n have no interior nodes.
    pub fn interior_j_span(&self, i: i64) -> Option<(i64, i64)> {
        if i < 1 || i >= self.n {
            return None;
        }
        let k = (self.row_j_max[i as usize] - 1).min(self.row_j_max[i as usize + 1]);
        if k < 0 {
            None
        } else {
            Some((-k, k))
        }
    }

    /// Indices of the four stencil neighbors (W, E, S, N), if present.
    pub fn stencil(&self, idx: usize) -> [Option<usize>; 4] {
        let (i, j) = self.coords(idx);
        [
            self.index_of(i - 1, j),
            self.index_of(i + 1, j),
            self.index_of(i, j - 1),
            self.index_of(i, j + 1),
        ]
    }

    /// FlatBoundary node indices in ascending x₂ order.
    pub fn flat_nodes(&self) -> Vec<usize> {
        let j_max = self.row_j_max[0];
        (-(self.n - 2)..=(self.n - 2))
            .map(|j| self.row_offset[0] + (j + j_max) as usize)
            .collect()
    }

    /// Node indices with arc data (OuterArc and Corner), ascending.
    pub fn arc_nodes(&self) -> Vec<usize> {
        (0..self.node_count())
            .filter(|&k| matches!(self.roles[k], NodeRole::OuterArc | NodeRole::Corner))
            .collect()
    }

    /// Writes the node table as CSV with header `i,j,x1,x2,role`.
    pub fn dump_csv<W: std::io::Write>(&self, w: &mut W) -> std::io::Result<()> {
        w.write_all(b"i,j,x1,x2,role\n")?;
        for idx in 0..self.node_count() {
            let (i, j) = self.coords(idx);
            let (x1, x2) = self.point(idx);
            writeln!(w, "{},{},{},{},{}", i, j, x1, x2, self.roles[idx].name())?;
        }
        Ok(())
    }
}

/// Radial projection of an arc node onto the unit circle.
///
/// Rejects nodes that are not OuterArc/Corner. The projection of a node at
/// distance r from the origin moves it by |1−r| ≤ h·√2.
pub fn project_to_arc(grid: &Grid, idx: usize) -> Result<(f64, f64)> {
    let role = grid.try_role(idx)?;
    if !matches!(role, NodeRole::OuterArc | NodeRole::Corner) {
        return Err(Error::WrongRole {
            index: idx,
            role,
            expected: "OuterArc or Corner",
        });
    }
    let (x1, x2) = grid.point(idx);
    let r = (x1 * x1 + x2 * x2).sqrt();
    // Arc nodes are never the origin: (0,0) is FlatBoundary.
    Ok((x1 / r, x2 / r))
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Role of (i, j) re-derived directly from the definitions, without the
    /// row machinery, as an independent oracle.
    fn oracle_role(n: i64, i: i64, j: i64) -> NodeRole {
        assert!(i >= 0 && i * i + j * j <= n * n);
        if i == 0 {
            return if j.abs() == n {
                NodeRole::Corner
            } else if j.abs() <= n - 2 {
                NodeRole::FlatBoundary
            } else {
                NodeRole::OuterArc
            };
        }
        let outside = |a: i64, b: i64| a * a + b * b > n * n;
        if outside(i + 1, j) || outside(i, j + 1) || outside(i, j - 1) {
            NodeRole::OuterArc
        } else {
            NodeRole::Interior
        }
    }

    #[test]
    fn rejects_bad_spacings() {
        assert!(build_half_disc_grid(1.0 / 3.0).is_err());
        assert!(build_half_disc_grid(0.13).is_err());
        assert!(build_half_disc_grid(0.3).is_err());
        assert!(build_half_disc_grid(0.5).is_err());
        assert!(build_half_disc_grid(0.0).is_err());
        assert!(build_half_disc_grid(-0.125).is_err());
        assert!(build_half_disc_grid(f64::NAN).is_err());
        assert!(build_half_disc_grid(0.25).is_ok());
        assert!(build_half_disc_grid(0.125).is_ok());
    }

    #[test]
    fn quarter_grid_matches_brute_force_enumeration() {
        // Independent enumeration of {(i,j): i ≥ 0, i²+j² ≤ 16} in
        // lexicographic order.
        let n = 4i64;
        let mut expect = Vec::new();
        for i in 0..=n {
            for j in -n..=n {
                if i * i + j * j <= n * n {
                    expect.push((i, j));
                }
            }
        }
        // Row sizes 9,7,7,5,1.
        assert_eq!(expect.len(), 29);

        let g = build_half_disc_grid(0.25).unwrap();
        assert_eq!(g.node_count(), expect.len());
        for (idx, &(i, j)) in expect.iter().enumerate() {
            assert_eq!(g.coords(idx), (i, j), "node order must be lexicographic");
            assert_eq!(g.index_of(i, j), Some(idx));
            assert_eq!(g.role(idx), oracle_role(n, i, j), "role of ({i},{j})");
            let (x1, x2) = g.point(idx);
            assert_eq!(x1, i as f64 * 0.25);
            assert_eq!(x2, j as f64 * 0.25);
        }
    }

    #[test]
    fn eighth_grid_roles_partition_and_invariants() {
        let g = build_half_disc_grid(0.125).unwrap();
        let n = g.n();
        let mut counts = [0usize; 4];
        for idx in 0..g.node_count() {
            let (i, j) = g.coords(idx);
            assert_eq!(g.role(idx), oracle_role(n, i, j));
            match g.role(idx) {
                NodeRole::Interior => {
                    counts[0] += 1;
                    for nb in g.stencil(idx) {
                        assert!(nb.is_some(), "interior node ({i},{j}) missing a neighbor");
                    }
                }
                NodeRole::FlatBoundary => {
                    counts[1] += 1;
                    assert_eq!(i, 0);
                    assert!(j.abs() <= n - 2);
                    assert!(g.index_of(1, j).is_some());
                    assert!(g.index_of(0, j - 1).is_some());
                    assert!(g.index_of(0, j + 1).is_some());
                }
                NodeRole::OuterArc => counts[2] += 1,
                NodeRole::Corner => counts[3] += 1,
            }
        }
        assert_eq!(counts.iter().sum::<usize>(), g.node_count());
        assert_eq!(counts[3], 2);
        assert_eq!(counts[1], (2 * (n - 2) + 1) as usize);
    }

    #[test]
    fn interior_span_agrees_with_roles() {
        let g = build_half_disc_grid(1.0 / 16.0).unwrap();
        for i in 0..=g.n() {
            let span = g.interior_j_span(i);
            for j in -g.row_j_max(i)..=g.row_j_max(i) {
                let idx = g.index_of(i, j).unwrap();
                let inside = span.is_some_and(|(lo, hi)| j >= lo && j <= hi);
                assert_eq!(
                    g.role(idx) == NodeRole::Interior,
                    inside,
                    "row {i}, j {j}: span {span:?}"
                );
            }
        }
    }

    #[test]
    fn projection_examples_and_idempotence() {
        let g = build_half_disc_grid(0.25).unwrap();

        let corner = g.index_of(0, 4).unwrap();
        assert_eq!(project_to_arc(&g, corner).unwrap(), (0.0, 1.0));

        let tip = g.index_of(4, 0).unwrap();
        assert_eq!(project_to_arc(&g, tip).unwrap(), (1.0, 0.0));

        // (0.75, 0.5)/√0.8125, checked against high-precision arithmetic.
        let p = g.index_of(3, 2).unwrap();
        let (x1, x2) = project_to_arc(&g, p).unwrap();
        assert!((x1 - 0.8320502943378437).abs() < 1e-15);
        assert!((x2 - 0.5547001962252291).abs() < 1e-15);

        for idx in g.arc_nodes() {
            let (px, py) = project_to_arc(&g, idx).unwrap();
            let r = (px * px + py * py).sqrt();
            assert!((r - 1.0).abs() < 1e-15, "projection lands on the circle");
            // Re-normalizing an already-projected point does not move it.
            assert!((px / r - px).abs() < 1e-15 && (py / r - py).abs() < 1e-15);
            let (x1, x2) = g.point(idx);
            let d = ((x1 - px).powi(2) + (x2 - py).powi(2)).sqrt();
            assert!(d <= g.h() * 2f64.sqrt() + 1e-15, "projection moved too far");
        }

        let flat = g.index_of(0, 0).unwrap();
        assert!(project_to_arc(&g, flat).is_err());
        let interior = g.index_of(1, 0).unwrap();
        assert!(project_to_arc(&g, interior).is_err());
    }

    #[test]
    fn mirror_symmetry_and_refinement_nesting() {
        let g = build_half_disc_grid(0.125).unwrap();
        for idx in 0..g.node_count() {
            let (i, j) = g.coords(idx);
            let m = g.index_of(i, -j).expect("mirror node exists");
            assert_eq!(g.role(idx), g.role(m));
            let (x1, x2) = g.point(idx);
            let (m1, m2) = g.point(m);
            assert_eq!(x1, m1);
            assert_eq!(x2, -m2);
        }

        let fine = build_half_disc_grid(0.0625).unwrap();
        for idx in 0..g.node_count() {
            let (i, j) = g.coords(idx);
            assert!(
                fine.index_of(2 * i, 2 * j).is_some(),
                "coarse node ({i},{j}) missing from the refined grid"
            );
        }
    }

    #[test]
    fn csv_dump_shape() {
        let g = build_half_disc_grid(0.25).unwrap();
        let mut buf = Vec::new();
        g.dump_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 1 + g.node_count());
        assert_eq!(lines[0], "i,j,x1,x2,role");
        assert_eq!(lines[1], "0,-4,0,-1,Corner");
        assert_eq!(lines[2], "0,-3,0,-0.75,OuterArc");
        assert_eq!(lines[3], "0,-2,0,-0.5,FlatBoundary");
        assert_eq!(lines[lines.len() - 1], "4,0,1,0,OuterArc");
    }
}
