//! The six subcommands. Each writes its artifacts atomically under --out,
//! prints the written paths plus headline numbers, and returns a typed
//! error: usage/input problems exit 2, solver failures exit 1. Wall-clock
//! timings go to stdout only, never into JSON, so identical invocations
//! produce byte-identical reports.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use halfdisc::homogeneous::{verify_profile_residual, Family, HomogeneousSolution};
use halfdisc::{
    almgren_frequency, boundary_max_principle_check, boundary_trace, build_half_disc_grid,
    complex_square_check, default_exponent_radii, default_frequency_radii, default_tolerance,
    extract_partition, fit_regularity_exponent, lipschitz_ratio, near_optimal_omega,
    solve_minimal_supersolution, solve_neumann_relaxed, solve_signorini_relaxed, BoundaryDatum,
    BoundaryPartition, BoundaryTrace, Error, Field, Grid, SolverReport,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::Value;

use crate::expr::Datum;
use crate::report::{num, obj, write_json, write_solution_csv, SCHEMA};

pub enum CmdError {
    /// Bad arguments or unreadable/malformed inputs: exit 2.
    Usage(String),
    /// A solve failed to converge: exit 1.
    Solver(String),
}

impl From<Error> for CmdError {
    fn from(e: Error) -> Self {
        match e {
            Error::NoConvergence { .. } => CmdError::Solver(e.to_string()),
            other => CmdError::Usage(other.to_string()),
        }
    }
}

impl From<std::io::Error> for CmdError {
    fn from(e: std::io::Error) -> Self {
        CmdError::Usage(e.to_string())
    }
}

type CmdResult<T> = Result<T, CmdError>;

/// Analysis parallelism cap from DNL_THREADS (≥ 1); defaults to the
/// machine's parallelism.
pub fn thread_cap() -> CmdResult<usize> {
    match std::env::var("DNL_THREADS") {
        Ok(s) => match s.trim().parse::<usize>() {
            Ok(n) if n >= 1 => Ok(n),
            _ => Err(CmdError::Usage(format!(
                "DNL_THREADS must be a positive integer, got '{s}'"
            ))),
        },
        Err(_) => Ok(std::thread::available_parallelism().map_or(1, |n| n.get())),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Method {
    Neumann,
    Signorini,
    Minimal,
}

impl Method {
    fn name(self) -> &'static str {
        match self {
            Method::Neumann => "neumann",
            Method::Signorini => "signorini",
            Method::Minimal => "minimal",
        }
    }
}

fn datum_of(spec: &str) -> CmdResult<Arc<Datum>> {
    Datum::parse(spec).map(Arc::new).map_err(CmdError::Usage)
}

fn boundary_datum(d: &Arc<Datum>) -> BoundaryDatum {
    let d = Arc::clone(d);
    BoundaryDatum::from_fn(move |x1, x2| d.eval(x1, x2))
}

fn solve_one(
    grid: &Grid,
    d: &Arc<Datum>,
    method: Method,
    c: f64,
    tol: Option<f64>,
) -> CmdResult<(Field, SolverReport)> {
    let g = boundary_datum(d);
    let tol = match tol {
        Some(t) => t,
        None => default_tolerance(grid, &g)?,
    };
    let omega = near_optimal_omega(grid);
    let out = match method {
        Method::Neumann => solve_neumann_relaxed(grid, &g, tol, omega)?,
        Method::Signorini => solve_signorini_relaxed(grid, &g, c, tol, omega)?,
        Method::Minimal => solve_minimal_supersolution(grid, &g, tol)?,
    };
    Ok(out)
}

fn solver_json(method: Method, grid: &Grid, rep: &SolverReport, csv: &str) -> Value {
    obj(vec![
        ("method", Value::from(method.name())),
        ("h", num(grid.h())),
        ("iterations", Value::from(rep.iterations)),
        ("final_max_update", num(rep.final_max_update)),
        (
            "final_max_interior_residual",
            num(rep.final_max_interior_residual),
        ),
        (
            "final_max_boundary_residual",
            num(rep.final_max_boundary_residual),
        ),
        (
            "monotone",
            rep.monotone.map_or(Value::Null, Value::from),
        ),
        ("csv", Value::from(csv)),
    ])
}

fn facet_json(p: &BoundaryPartition, grid: &Grid) -> Value {
    let facets: Vec<Value> = p
        .facets
        .iter()
        .map(|f| {
            obj(vec![
                ("x2_lo", num(f.x2_lo)),
                ("x2_hi", num(f.x2_hi)),
                ("value", num(f.value)),
            ])
        })
        .collect();
    let gamma: Vec<Value> = p
        .freeboundary
        .iter()
        .map(|&idx| num(grid.point(idx).1))
        .collect();
    obj(vec![
        ("facet_count", Value::from(p.facets.len() as u64)),
        ("facets", Value::Array(facets)),
        ("gamma_x2", Value::Array(gamma)),
        ("contact_nodes", Value::from(p.contact.len() as u64)),
        ("noncontact_nodes", Value::from(p.noncontact.len() as u64)),
        ("gap", num(p.gap)),
        ("eps_contact", num(p.eps_contact)),
        ("eps_facet", num(p.eps_facet)),
    ])
}

/// Seeded subintervals [a, b] with at least one interior flat node, as
/// positions into the trace's node list. One fixed sequence per seed, so
/// every solution in a run is tested on the same intervals.
fn seeded_intervals(node_count: usize, count: usize, seed: u64) -> Vec<(usize, usize)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let a = rng.gen_range(0..node_count);
        let b = rng.gen_range(0..node_count);
        let (a, b) = if a <= b { (a, b) } else { (b, a) };
        if b - a >= 2 {
            out.push((a, b));
        }
    }
    out
}

fn bmp_json(trace: &BoundaryTrace, intervals: &[(usize, usize)], slack: f64) -> CmdResult<Value> {
    let mut failures = 0u64;
    let mut first: Option<Value> = None;
    for &(ka, kb) in intervals {
        let a = trace.nodes[ka].x2;
        let b = trace.nodes[kb].x2;
        let out = boundary_max_principle_check(trace, a, b, slack)?;
        if !out.pass {
            failures += 1;
            if first.is_none() {
                let w = out.witness.expect("failed check carries a witness");
                first = Some(obj(vec![
                    ("a", num(a)),
                    ("b", num(b)),
                    ("x2", num(w.x2)),
                    ("u", num(w.u)),
                ]));
            }
        }
    }
    Ok(obj(vec![
        ("intervals", Value::from(intervals.len() as u64)),
        ("slack", num(slack)),
        ("failures", Value::from(failures)),
        ("first_failure", first.unwrap_or(Value::Null)),
    ]))
}

fn parse_radii(spec: &Option<String>) -> CmdResult<Option<Vec<f64>>> {
    let Some(s) = spec else { return Ok(None) };
    let mut out = Vec::new();
    for part in s.split(',') {
        let r: f64 = part
            .trim()
            .parse()
            .map_err(|_| CmdError::Usage(format!("malformed radius '{part}'")))?;
        out.push(r);
    }
    Ok(Some(out))
}

pub struct SolveOpts {
    pub method: Method,
    pub g: String,
    pub h: f64,
    pub c: f64,
    pub tol: Option<f64>,
    pub out: PathBuf,
}

pub fn cmd_solve(o: &SolveOpts) -> CmdResult<()> {
    let grid = build_half_disc_grid(o.h)?;
    let d = datum_of(&o.g)?;
    let (u, rep) = solve_one(&grid, &d, o.method, o.c, o.tol)?;
    let csv_name = format!("u_{}.csv", o.method.name());
    let csv = o.out.join(&csv_name);
    write_solution_csv(&csv, &grid, &u)?;
    let mut report = solver_json(o.method, &grid, &rep, &csv_name);
    let extra = report.as_object_mut().expect("solver_json is an object");
    extra.insert("schema".into(), Value::from(SCHEMA));
    extra.insert("command".into(), Value::from("solve"));
    extra.insert("g".into(), Value::from(o.g.as_str()));
    if o.method == Method::Signorini {
        extra.insert("c".into(), num(o.c));
    }
    let path = o.out.join("report_solve.json");
    write_json(&path, &report)?;
    println!("wrote {}", csv.display());
    println!("wrote {}", path.display());
    println!(
        "{}: {} sweeps, final update {:.3e}, wall {:.2}s",
        o.method.name(),
        rep.iterations,
        rep.final_max_update,
        rep.wall_seconds
    );
    Ok(())
}

pub struct CompareOpts {
    pub g: String,
    pub h: f64,
    pub c: f64,
    pub tol: Option<f64>,
    pub seed: u64,
    pub bmp_intervals: usize,
    pub out: PathBuf,
}

/// The full pipeline on one datum: three solutions, their partitions,
/// pairwise ordering with slack 10·h·scale, and the boundary-maximum
/// -principle verdict per solution over one shared set of seeded
/// subintervals.
pub fn cmd_compare(o: &CompareOpts) -> CmdResult<()> {
    let grid = build_half_disc_grid(o.h)?;
    let d = datum_of(&o.g)?;
    let started = std::time::Instant::now();

    let cap = thread_cap()?;
    let (neumann, signorini, minimal);
    if cap >= 2 {
        let (r_neu, r_sig, r_min) = std::thread::scope(|s| {
            let hn = s.spawn(|| solve_one(&grid, &d, Method::Neumann, o.c, o.tol));
            let hs = if cap >= 3 {
                Some(s.spawn(|| solve_one(&grid, &d, Method::Signorini, o.c, o.tol)))
            } else {
                None
            };
            let rm = solve_one(&grid, &d, Method::Minimal, o.c, o.tol);
            let rs = match hs {
                Some(hs) => hs.join().expect("signorini solve panicked"),
                None => solve_one(&grid, &d, Method::Signorini, o.c, o.tol),
            };
            (hn.join().expect("neumann solve panicked"), rs, rm)
        });
        neumann = r_neu?;
        signorini = r_sig?;
        minimal = r_min?;
    } else {
        neumann = solve_one(&grid, &d, Method::Neumann, o.c, o.tol)?;
        signorini = solve_one(&grid, &d, Method::Signorini, o.c, o.tol)?;
        minimal = solve_one(&grid, &d, Method::Minimal, o.c, o.tol)?;
    }

    let scale = minimal
        .0
        .scale()
        .max(signorini.0.scale())
        .max(neumann.0.scale());
    let slack = 10.0 * o.h * scale;

    let mut solvers = Vec::new();
    let mut intervals: Option<Vec<(usize, usize)>> = None;
    let mut facet_counts = Vec::new();
    for (method, (u, rep)) in [
        (Method::Neumann, &neumann),
        (Method::Signorini, &signorini),
        (Method::Minimal, &minimal),
    ] {
        let csv_name = format!("u_{}.csv", method.name());
        write_solution_csv(&o.out.join(&csv_name), &grid, u)?;
        let trace = boundary_trace(&grid, u)?;
        let part = extract_partition(&trace, o.h);
        let ivals = intervals.get_or_insert_with(|| {
            seeded_intervals(trace.nodes.len(), o.bmp_intervals, o.seed)
        });
        let bmp = bmp_json(&trace, ivals, slack)?;
        facet_counts.push((method, part.facets.len(), bmp["failures"].clone()));
        let mut v = solver_json(method, &grid, rep, &csv_name);
        let m = v.as_object_mut().expect("solver_json is an object");
        m.insert("partition".into(), facet_json(&part, &grid));
        m.insert("bmp".into(), bmp);
        solvers.push(v);
    }

    // Pairwise sup-distances and the two ordering checks.
    let pair = |a: &Field, b: &Field| -> f64 {
        a.values()
            .iter()
            .zip(b.values())
            .fold(0f64, |m, (x, y)| m.max((x - y).abs()))
    };
    let excess = |lo: &Field, hi: &Field| -> f64 {
        lo.values()
            .iter()
            .zip(hi.values())
            .fold(f64::NEG_INFINITY, |m, (x, y)| m.max(x - y))
    };
    let d_mn = pair(&minimal.0, &neumann.0);
    let d_ms = pair(&minimal.0, &signorini.0);
    let d_sn = pair(&signorini.0, &neumann.0);
    let e_ms = excess(&minimal.0, &signorini.0);
    let e_sn = excess(&signorini.0, &neumann.0);
    let ordering = obj(vec![
        ("slack", num(slack)),
        ("minimal_minus_signorini_max", num(e_ms)),
        ("signorini_minus_neumann_max", num(e_sn)),
        ("pass", Value::from(e_ms <= slack && e_sn <= slack)),
    ]);
    let distances = obj(vec![
        ("minimal_neumann", num(d_mn)),
        ("minimal_signorini", num(d_ms)),
        ("signorini_neumann", num(d_sn)),
        ("max", num(d_mn.max(d_ms).max(d_sn))),
        (
            "pairwise_distinct",
            Value::from(d_mn > slack && d_ms > slack && d_sn > slack),
        ),
    ]);

    let report = obj(vec![
        ("schema", Value::from(SCHEMA)),
        ("command", Value::from("compare")),
        ("g", Value::from(o.g.as_str())),
        ("h", num(o.h)),
        ("c", num(o.c)),
        ("seed", Value::from(o.seed)),
        ("scale", num(scale)),
        ("solvers", Value::Array(solvers)),
        ("ordering", ordering),
        ("distances", distances),
    ]);
    let path = o.out.join("report_compare.json");
    write_json(&path, &report)?;
    println!("wrote {}", path.display());
    for (method, facets, bmp_failures) in &facet_counts {
        println!(
            "{}: facets {}, bmp failures {}/{}",
            method.name(),
            facets,
            bmp_failures,
            o.bmp_intervals
        );
    }
    println!(
        "ordering excess: minimal-signorini {:.3e}, signorini-neumann {:.3e} (slack {:.3e})",
        e_ms, e_sn, slack
    );
    println!("wall {:.2}s", started.elapsed().as_secs_f64());
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Check {
    Partition,
    Frequency,
    Exponent,
    Complex,
    Bmp,
    Lipschitz,
}

pub struct AnalyzeOpts {
    pub solution: PathBuf,
    pub checks: Vec<Check>,
    pub seed: u64,
    pub bmp_intervals: usize,
    pub out: PathBuf,
}

pub fn cmd_analyze(o: &AnalyzeOpts) -> CmdResult<()> {
    let (grid, u) = crate::report::read_solution_csv(&o.solution).map_err(CmdError::Usage)?;
    let h = grid.h();
    let trace = boundary_trace(&grid, &u)?;
    let part = extract_partition(&trace, h);
    let gamma_x2: Vec<f64> = part
        .freeboundary
        .iter()
        .map(|&idx| grid.point(idx).1)
        .collect();

    let mut fields: Vec<(&str, Value)> = vec![
        ("schema", Value::from(SCHEMA)),
        ("command", Value::from("analyze")),
        ("solution", Value::from(o.solution.display().to_string())),
        ("h", num(h)),
    ];
    for check in &o.checks {
        match check {
            Check::Partition => fields.push(("partition", facet_json(&part, &grid))),
            Check::Frequency => {
                let mut profiles = Vec::new();
                for &y in &gamma_x2 {
                    let radii = default_frequency_radii(&grid, y);
                    let prof = almgren_frequency(&grid, &u, y, &radii)?;
                    let samples: Vec<Value> = prof
                        .samples
                        .iter()
                        .map(|s| {
                            obj(vec![
                                ("r", num(s.r)),
                                ("h_mass", num(s.h_mass)),
                                ("dirichlet", num(s.dirichlet)),
                                ("n", num(s.n)),
                            ])
                        })
                        .collect();
                    profiles.push(obj(vec![
                        ("center_x2", num(y)),
                        ("n0", num(prof.n0)),
                        ("samples", Value::Array(samples)),
                    ]));
                }
                fields.push(("frequency", Value::Array(profiles)));
            }
            Check::Exponent => {
                let mut fits = Vec::new();
                for &y in &gamma_x2 {
                    let radii = default_exponent_radii(&grid, y);
                    let fit = fit_regularity_exponent(&grid, &u, y, &radii)?;
                    fits.push(obj(vec![
                        ("point_x2", num(y)),
                        ("alpha", fit.alpha.map_or(Value::Null, num)),
                        ("smooth", Value::from(fit.smooth)),
                        ("r_squared", num(fit.r_squared)),
                        (
                            "osc",
                            Value::Array(fit.osc.iter().map(|&v| num(v)).collect()),
                        ),
                        (
                            "radii",
                            Value::Array(fit.radii.iter().map(|&v| num(v)).collect()),
                        ),
                    ]));
                }
                fields.push(("exponent", Value::Array(fits)));
            }
            Check::Complex => {
                let rep = complex_square_check(&grid, &u)?;
                fields.push((
                    "complex_square",
                    obj(vec![
                        ("max_im", num(rep.max_im)),
                        ("max_mismatch", num(rep.max_mismatch)),
                        ("collar", num(rep.collar)),
                    ]),
                ));
            }
            Check::Bmp => {
                let slack = 10.0 * h * u.scale();
                let ivals = seeded_intervals(trace.nodes.len(), o.bmp_intervals, o.seed);
                fields.push(("bmp", bmp_json(&trace, &ivals, slack)?));
            }
            Check::Lipschitz => {
                fields.push(("lipschitz_ratio", num(lipschitz_ratio(&grid, &u))));
            }
        }
    }
    let report = obj(fields);
    let path = o.out.join("report_analyze.json");
    write_json(&path, &report)?;
    println!("wrote {}", path.display());
    println!(
        "h = 1/{:.0}, facets {}, gamma nodes {}",
        1.0 / h,
        part.facets.len(),
        gamma_x2.len()
    );
    Ok(())
}

pub struct VerifyOpts {
    pub kappa_max: f64,
    pub h_list: Vec<f64>,
    pub out: PathBuf,
}

/// Residual/refinement table over every admissible homogeneous profile
/// with κ ≤ kappa-max: interior and flat-boundary residual maxima per
/// spacing, plus whether the boundary column decreases under refinement.
pub fn cmd_verify_homogeneous(o: &VerifyOpts) -> CmdResult<()> {
    if o.h_list.is_empty() {
        return Err(CmdError::Usage("empty --h-list".into()));
    }
    if !o.kappa_max.is_finite() || o.kappa_max < 0.5 {
        return Err(CmdError::Usage(format!(
            "--kappa-max must be at least 1/2, got {}",
            o.kappa_max
        )));
    }
    let grids: Vec<Grid> = o
        .h_list
        .iter()
        .map(|&h| build_half_disc_grid(h))
        .collect::<Result<_, _>>()?;

    let families = [
        Family::AbsX1,
        Family::ImPow,
        Family::RePowPlus,
        Family::RePowMinus,
    ];
    let mut rows = Vec::new();
    println!(
        "{:<12} {:>5}  {}",
        "family",
        "kappa",
        o.h_list
            .iter()
            .map(|h| format!("{:>12}", format!("1/{:.0}", 1.0 / h)))
            .collect::<Vec<_>>()
            .join(" ")
    );
    let max_halves = (2.0 * o.kappa_max).floor() as i64;
    for halves in 1..=max_halves {
        for family in families {
            let Ok(sol) = HomogeneousSolution::from_halves(family, halves, 1.0) else {
                continue;
            };
            let kappa = sol.kappa();
            let mut interior = Vec::new();
            let mut boundary = Vec::new();
            for grid in &grids {
                let (i, b) = verify_profile_residual(family, kappa, grid);
                interior.push(i);
                boundary.push(b);
            }
            let decreasing = boundary.windows(2).all(|w| w[1] < w[0]);
            println!(
                "{:<12} {:>5}  {}  {}",
                family.name(),
                format!("{}/2", halves),
                boundary
                    .iter()
                    .map(|b| format!("{b:>12.4e}"))
                    .collect::<Vec<_>>()
                    .join(" "),
                if decreasing { "decreasing" } else { "NOT decreasing" }
            );
            rows.push(obj(vec![
                ("family", Value::from(family.name())),
                ("kappa", num(kappa)),
                (
                    "interior",
                    Value::Array(interior.into_iter().map(num).collect()),
                ),
                (
                    "boundary",
                    Value::Array(boundary.into_iter().map(num).collect()),
                ),
                ("boundary_decreasing", Value::from(decreasing)),
            ]));
        }
    }
    let report = obj(vec![
        ("schema", Value::from(SCHEMA)),
        ("command", Value::from("verify-homogeneous")),
        ("kappa_max", num(o.kappa_max)),
        (
            "h_list",
            Value::Array(o.h_list.iter().map(|&h| num(h)).collect()),
        ),
        ("rows", Value::Array(rows)),
    ]);
    let path = o.out.join("report_homogeneous.json");
    write_json(&path, &report)?;
    println!("wrote {}", path.display());
    Ok(())
}

pub struct FrequencyOpts {
    pub solution: PathBuf,
    pub center: f64,
    pub radii: Option<String>,
    pub out: PathBuf,
}

pub fn cmd_frequency(o: &FrequencyOpts) -> CmdResult<()> {
    let (grid, u) = crate::report::read_solution_csv(&o.solution).map_err(CmdError::Usage)?;
    let radii = match parse_radii(&o.radii)? {
        Some(r) => r,
        None => default_frequency_radii(&grid, o.center),
    };
    let prof = almgren_frequency(&grid, &u, o.center, &radii)?;
    let samples: Vec<Value> = prof
        .samples
        .iter()
        .map(|s| {
            obj(vec![
                ("r", num(s.r)),
                ("h_mass", num(s.h_mass)),
                ("dirichlet", num(s.dirichlet)),
                ("n", num(s.n)),
            ])
        })
        .collect();
    let report = obj(vec![
        ("schema", Value::from(SCHEMA)),
        ("command", Value::from("frequency")),
        ("solution", Value::from(o.solution.display().to_string())),
        ("center_x2", num(o.center)),
        ("n0", num(prof.n0)),
        ("samples", Value::Array(samples)),
    ]);
    let jpath = o.out.join("profile.json");
    write_json(&jpath, &report)?;
    // Plot-ready two-column text: r N.
    let mut txt = String::new();
    for s in &prof.samples {
        txt.push_str(&format!("{:.12e} {:.12e}\n", s.r, s.n));
    }
    let tpath = o.out.join("profile.txt");
    crate::report::write_atomic(&tpath, txt.as_bytes())?;
    println!("wrote {}", jpath.display());
    println!("wrote {}", tpath.display());
    println!("n0 = {:.4}", prof.n0);
    Ok(())
}

pub struct ExponentOpts {
    pub solution: PathBuf,
    pub point: f64,
    pub radii: Option<String>,
    pub out: PathBuf,
}

pub fn cmd_exponent(o: &ExponentOpts) -> CmdResult<()> {
    let (grid, u) = crate::report::read_solution_csv(&o.solution).map_err(CmdError::Usage)?;
    let radii = match parse_radii(&o.radii)? {
        Some(r) => r,
        None => default_exponent_radii(&grid, o.point),
    };
    let fit = fit_regularity_exponent(&grid, &u, o.point, &radii)?;
    let report = obj(vec![
        ("schema", Value::from(SCHEMA)),
        ("command", Value::from("exponent")),
        ("solution", Value::from(o.solution.display().to_string())),
        ("point_x2", num(o.point)),
        ("alpha", fit.alpha.map_or(Value::Null, num)),
        ("smooth", Value::from(fit.smooth)),
        ("r_squared", num(fit.r_squared)),
        (
            "radii",
            Value::Array(fit.radii.iter().map(|&v| num(v)).collect()),
        ),
        (
            "osc",
            Value::Array(fit.osc.iter().map(|&v| num(v)).collect()),
        ),
    ]);
    let path = o.out.join("fit.json");
    write_json(&path, &report)?;
    println!("wrote {}", path.display());
    match fit.alpha {
        Some(a) => println!("alpha = {a:.4} (r^2 {:.4})", fit.r_squared),
        None => println!("smooth (oscillation at rounding level)"),
    }
    Ok(())
}

/// Shared --out handling: create the directory up front so every artifact
/// write can assume it exists.
pub fn ensure_out(dir: &Path) -> CmdResult<()> {
    std::fs::create_dir_all(dir)?;
    Ok(())
}
