//! Deterministic artifacts: JSON reports with fixed-precision floats,
//! solution CSVs, and atomic writes (temp file + rename). Identical
//! invocations must produce byte-identical files, so floats are always
//! rendered as {:.12e} in JSON and {:.17e} in CSV (full f64 round-trip),
//! object keys are sorted, and nothing time- or pointer-dependent is
//! emitted.

use std::io;
use std::path::{Path, PathBuf};

use halfdisc::{build_half_disc_grid, Field, Grid};
use serde_json::ser::Formatter;
use serde_json::{Map, Value};

/// Report schema version, bumped on any breaking field change.
pub const SCHEMA: u64 = 1;

/// Finite floats become JSON numbers; NaN/±∞ become null (JSON has no
/// non-finite literals).
pub fn num(v: f64) -> Value {
    serde_json::Number::from_f64(v).map_or(Value::Null, Value::Number)
}

pub fn obj(fields: Vec<(&str, Value)>) -> Value {
    let mut m = Map::new();
    for (k, v) in fields {
        m.insert(k.to_string(), v);
    }
    Value::Object(m)
}

/// Serializer that pins every f64 to {:.12e}.
struct FixedFloats;

impl Formatter for FixedFloats {
    fn write_f64<W: ?Sized + io::Write>(&mut self, w: &mut W, v: f64) -> io::Result<()> {
        write!(w, "{v:.12e}")
    }
}

pub fn to_json_bytes(v: &Value) -> Vec<u8> {
    use serde::Serialize;
    let mut out = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut out, FixedFloats);
    v.serialize(&mut ser).expect("in-memory JSON serialization");
    out.push(b'\n');
    out
}

/// Writes bytes to `path` atomically: a sibling temp file is renamed over
/// the target, so readers never observe a partial artifact.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> io::Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty());
    let tmp: PathBuf = {
        let mut name = path.file_name().unwrap_or_default().to_os_string();
        name.push(format!(".tmp-{}", std::process::id()));
        match dir {
            Some(d) => d.join(name),
            None => PathBuf::from(name),
        }
    };
    if let Some(d) = dir {
        std::fs::create_dir_all(d)?;
    }
    std::fs::write(&tmp, bytes)?;
    std::fs::rename(&tmp, path)
}

pub fn write_json(path: &Path, v: &Value) -> io::Result<()> {
    write_atomic(path, &to_json_bytes(v))
}

/// Solution CSV: header `i,j,x1,x2,u`, one row per grid node in the
/// deterministic lexicographic node order, "\n" line endings.
pub fn write_solution_csv(path: &Path, grid: &Grid, f: &Field) -> io::Result<()> {
    let mut out = String::with_capacity(64 * grid.node_count());
    out.push_str("i,j,x1,x2,u\n");
    for idx in 0..grid.node_count() {
        let (i, j) = grid.coords(idx);
        let (x1, x2) = grid.point(idx);
        let u = f.values()[idx];
        out.push_str(&format!("{i},{j},{x1:.17e},{x2:.17e},{u:.17e}\n"));
    }
    write_atomic(path, out.as_bytes())
}

/// Reads a solution CSV back into its grid and field. The spacing is
/// recovered from the first off-axis node (h = x₁/i), so a CSV written by
/// the solve command round-trips without extra flags.
pub fn read_solution_csv(path: &Path) -> Result<(Grid, Field), String> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| format!("unreadable file '{}': {e}", path.display()))?;
    let mut lines = text.lines();
    match lines.next() {
        Some("i,j,x1,x2,u") => {}
        _ => return Err(format!("'{}': missing i,j,x1,x2,u header", path.display())),
    }
    let mut rows = Vec::new();
    let mut h = None;
    for (ln, line) in lines.enumerate() {
        if line.is_empty() {
            continue;
        }
        let mut parts = line.split(',');
        let mut take = |what: &str| {
            parts
                .next()
                .ok_or(format!("'{}' line {}: missing {what}", path.display(), ln + 2))
        };
        let i: i64 = take("i")?.parse().map_err(|e| format!("bad i: {e}"))?;
        let j: i64 = take("j")?.parse().map_err(|e| format!("bad j: {e}"))?;
        let _x1: f64 = take("x1")?.parse().map_err(|e| format!("bad x1: {e}"))?;
        let _x2: f64 = take("x2")?.parse().map_err(|e| format!("bad x2: {e}"))?;
        let u: f64 = take("u")?.parse().map_err(|e| format!("bad u: {e}"))?;
        if i > 0 && h.is_none() {
            h = Some(_x1 / i as f64);
        }
        rows.push((i, j, u));
    }
    let h = h.ok_or("no off-axis node; cannot infer spacing")?;
    let n = 1.0 / h;
    if (n.round() - n).abs() > 1e-9 {
        return Err(format!("inferred spacing 1/{n} is not a unit fraction"));
    }
    let grid = build_half_disc_grid(1.0 / n.round()).map_err(|e| e.to_string())?;
    if grid.node_count() != rows.len() {
        return Err(format!(
            "row count {} does not match the h = 1/{} half-disc ({} nodes)",
            rows.len(),
            n.round(),
            grid.node_count()
        ));
    }
    let mut values = vec![f64::NAN; grid.node_count()];
    for (idx, &(i, j, u)) in rows.iter().enumerate() {
        // Node order in the CSV is the grid's own lexicographic order.
        let (gi, gj) = grid.coords(idx);
        if (gi, gj) != (i, j) {
            return Err(format!(
                "row {} has indices ({i}, {j}), expected ({gi}, {gj}); \
                 rows must keep the written order",
                idx + 2
            ));
        }
        values[idx] = u;
    }
    let f = Field::new(&grid, values).map_err(|e| e.to_string())?;
    Ok((grid, f))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn json_fixed_precision_and_null_nonfinite() {
        let v = obj(vec![
            ("a", num(1.0 / 3.0)),
            ("b", num(f64::INFINITY)),
            ("n", Value::from(7u64)),
        ]);
        let s = String::from_utf8(to_json_bytes(&v)).unwrap();
        assert_eq!(s, "{\"a\":3.333333333333e-1,\"b\":null,\"n\":7}\n");
    }

    #[test]
    fn csv_round_trip_is_exact() {
        let g = build_half_disc_grid(1.0 / 8.0).unwrap();
        let f = Field::from_fn(&g, |x1, x2| (x1 * 3.7 - x2).sin() / 3.0).unwrap();
        let dir = std::env::temp_dir().join(format!("dnl-report-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("u.csv");
        write_solution_csv(&path, &g, &f).unwrap();
        let (g2, f2) = read_solution_csv(&path).unwrap();
        assert_eq!(g2.node_count(), g.node_count());
        // {:.17e} round-trips every f64 bit pattern.
        for (a, b) in f.values().iter().zip(f2.values()) {
            assert_eq!(a, b);
        }
        // No stray temp file left behind.
        assert_eq!(std::fs::read_dir(&dir).unwrap().count(), 1);
        std::fs::remove_dir_all(&dir).unwrap();
    }
}
