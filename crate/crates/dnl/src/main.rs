//! dnl: command-line front end for the half-disc laboratory. Solves the
//! three boundary-value problems on uniform grids, runs the trace
//! analyses, and emits CSV/JSON artifacts plus plot-ready data.
//!
//! Exit status: 0 success, 1 solver failure, 2 argument or input error
//! (single-line diagnostic on stderr).

use std::path::PathBuf;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};

mod commands;
mod expr;
mod report;

use commands::{
    cmd_analyze, cmd_compare, cmd_exponent, cmd_frequency, cmd_solve, cmd_verify_homogeneous,
    ensure_out, AnalyzeOpts, Check, CmdError, CompareOpts, ExponentOpts, FrequencyOpts, Method,
    SolveOpts, VerifyOpts,
};

/// Accepts "1/256" or a decimal like "0.00390625".
fn parse_spacing(s: &str) -> Result<f64, String> {
    let bad = || format!("malformed spacing '{s}'");
    let v = if let Some((n, d)) = s.split_once('/') {
        let n: f64 = n.trim().parse().map_err(|_| bad())?;
        let d: f64 = d.trim().parse().map_err(|_| bad())?;
        n / d
    } else {
        s.trim().parse().map_err(|_| bad())?
    };
    if !v.is_finite() || v <= 0.0 || v >= 1.0 {
        return Err(format!("spacing must lie in (0, 1), got '{s}'"));
    }
    Ok(v)
}

fn parse_spacing_list(s: &str) -> Result<Vec<f64>, String> {
    s.split(',').map(|p| parse_spacing(p.trim())).collect()
}

#[derive(Parser)]
#[command(
    name = "dnl",
    version,
    about = "Finite-difference laboratory for the gradient-degenerate Neumann problem on the half disc"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args)]
struct Common {
    /// Output directory for artifacts.
    #[arg(long, default_value = ".")]
    out: PathBuf,
    /// Config file of `key = value` lines standing in for flags; explicit
    /// flags win on conflict.
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Solve one boundary-value problem and write the solution CSV.
    Solve {
        #[arg(long, value_enum)]
        method: Method,
        /// Boundary datum: expression in x1, x2 or a two-column file
        /// (arc angle, value).
        #[arg(long)]
        g: String,
        /// Grid spacing, e.g. 1/256 or 0.00390625.
        #[arg(long, value_parser = parse_spacing)]
        h: f64,
        /// Signorini obstacle level.
        #[arg(long, default_value_t = 0.0)]
        c: f64,
        /// Solver tolerance (max sweep update); default 1e-10 times the
        /// datum scale.
        #[arg(long)]
        tol: Option<f64>,
        #[command(flatten)]
        common: Common,
    },
    /// Solve all three problems, compare them, and run the boundary
    /// maximum principle over seeded subintervals.
    Compare {
        #[arg(long)]
        g: String,
        #[arg(long, value_parser = parse_spacing)]
        h: f64,
        #[arg(long, default_value_t = 0.0)]
        c: f64,
        #[arg(long)]
        tol: Option<f64>,
        /// Seed for the subinterval sampler.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Number of seeded subintervals per solution.
        #[arg(long, default_value_t = 200)]
        bmp_intervals: usize,
        #[command(flatten)]
        common: Common,
    },
    /// Run trace analyses on a solution CSV.
    Analyze {
        #[arg(long)]
        solution: PathBuf,
        /// Comma-separated subset of the checks to run.
        #[arg(
            long,
            value_enum,
            value_delimiter = ',',
            default_values_t = vec![
                Check::Partition,
                Check::Frequency,
                Check::Exponent,
                Check::Complex,
                Check::Bmp,
                Check::Lipschitz,
            ]
        )]
        checks: Vec<Check>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 200)]
        bmp_intervals: usize,
        #[command(flatten)]
        common: Common,
    },
    /// Residual/refinement table over the admissible homogeneous profiles.
    VerifyHomogeneous {
        /// Largest homogeneity degree to enumerate (half-integers up to
        /// this bound).
        #[arg(long, default_value_t = 4.0)]
        kappa_max: f64,
        /// Comma-separated spacings for the refinement columns.
        #[arg(long, value_parser = parse_spacing_list, default_value = "1/64,1/128,1/256")]
        h_list: std::vec::Vec<f64>,
        #[command(flatten)]
        common: Common,
    },
    /// Almgren frequency profile of a solution around a flat node.
    Frequency {
        #[arg(long)]
        solution: PathBuf,
        /// Base point x2 on the flat boundary (a lattice node).
        #[arg(long)]
        center: f64,
        /// Comma-separated radii; defaults to a geometric ladder.
        #[arg(long)]
        radii: Option<String>,
        #[command(flatten)]
        common: Common,
    },
    /// Regularity-exponent fit of a solution at a flat node.
    Exponent {
        #[arg(long)]
        solution: PathBuf,
        #[arg(long)]
        point: f64,
        #[arg(long)]
        radii: Option<String>,
        #[command(flatten)]
        common: Common,
    },
}

/// Splices config-file entries into the raw argument list. Every
/// `key = value` line becomes a trailing `--key value` pair unless the
/// flag already appears explicitly, so command-line flags win.
fn merge_config(mut argv: Vec<String>) -> Result<Vec<String>, String> {
    let mut path: Option<String> = None;
    let mut i = 0;
    while i < argv.len() {
        if argv[i] == "--config" {
            if i + 1 >= argv.len() {
                return Err("--config needs a file path".into());
            }
            path = Some(argv[i + 1].clone());
            i += 2;
        } else {
            if let Some(p) = argv[i].strip_prefix("--config=") {
                path = Some(p.to_string());
            }
            i += 1;
        }
    }
    let Some(path) = path else { return Ok(argv) };
    let text = std::fs::read_to_string(&path)
        .map_err(|e| format!("cannot read config '{path}': {e}"))?;
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(format!(
                "config '{path}' line {}: expected key = value",
                lineno + 1
            ));
        };
        let key = key.trim();
        let value = value.trim();
        if key.is_empty() {
            return Err(format!("config '{path}' line {}: empty key", lineno + 1));
        }
        let flag = format!("--{key}");
        let prefixed = format!("--{key}=");
        let explicit = argv
            .iter()
            .any(|a| a == &flag || a.starts_with(&prefixed));
        if !explicit {
            argv.push(flag);
            argv.push(value.to_string());
        }
    }
    Ok(argv)
}

fn run(cli: Cli) -> Result<(), CmdError> {
    match cli.cmd {
        Cmd::Solve {
            method,
            g,
            h,
            c,
            tol,
            common,
        } => {
            ensure_out(&common.out)?;
            cmd_solve(&SolveOpts {
                method,
                g,
                h,
                c,
                tol,
                out: common.out,
            })
        }
        Cmd::Compare {
            g,
            h,
            c,
            tol,
            seed,
            bmp_intervals,
            common,
        } => {
            ensure_out(&common.out)?;
            cmd_compare(&CompareOpts {
                g,
                h,
                c,
                tol,
                seed,
                bmp_intervals,
                out: common.out,
            })
        }
        Cmd::Analyze {
            solution,
            checks,
            seed,
            bmp_intervals,
            common,
        } => {
            ensure_out(&common.out)?;
            cmd_analyze(&AnalyzeOpts {
                solution,
                checks,
                seed,
                bmp_intervals,
                out: common.out,
            })
        }
        Cmd::VerifyHomogeneous {
            kappa_max,
            h_list,
            common,
        } => {
            ensure_out(&common.out)?;
            cmd_verify_homogeneous(&VerifyOpts {
                kappa_max,
                h_list,
                out: common.out,
            })
        }
        Cmd::Frequency {
            solution,
            center,
            radii,
            common,
        } => {
            ensure_out(&common.out)?;
            cmd_frequency(&FrequencyOpts {
                solution,
                center,
                radii,
                out: common.out,
            })
        }
        Cmd::Exponent {
            solution,
            point,
            radii,
            common,
        } => {
            ensure_out(&common.out)?;
            cmd_exponent(&ExponentOpts {
                solution,
                point,
                radii,
                out: common.out,
            })
        }
    }
}

fn main() -> ExitCode {
    let argv: Vec<String> = std::env::args().collect();
    let argv = match merge_config(argv) {
        Ok(a) => a,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    let cli = match Cli::try_parse_from(&argv) {
        Ok(c) => c,
        Err(e) => {
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{e}");
                return ExitCode::SUCCESS;
            }
            // One-line diagnostic: the first non-empty line of clap's
            // rendered error.
            let text = e.to_string();
            let line = text.lines().find(|l| !l.trim().is_empty()).unwrap_or("error");
            eprintln!("{line}");
            return ExitCode::from(2);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CmdError::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(CmdError::Solver(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}
