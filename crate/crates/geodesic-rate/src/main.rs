//! Command-line front end. Exit codes: 0 success or pass, 1 analytic
//! failure (non-convergence, verification fail), 2 usage or domain
//! error, 3 I/O error.

// `!(...)` range guards are deliberate: they reject NaN inputs, which
// the complementary comparison would silently admit.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

use clap::{Args, Parser, Subcommand};
use geodesic_rate::closed_form::{
    assemble_closed_form, b_opt_exact, breakpoint, density_exact, rate_exact, shape_exact,
};
use geodesic_rate::error::Error;
use geodesic_rate::full::solve_full;
use geodesic_rate::io::{
    self, read_solve_json, verification_report_json, write_shape_csv, write_solve_json, IoError,
    SolveRecord, SweepRow,
};
use geodesic_rate::metric::verify_geodesic;
use geodesic_rate::relaxed::SolverOptions;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

const EXIT_FAIL: u8 = 1;
const EXIT_USAGE: u8 = 2;
const EXIT_IO: u8 = 3;

#[derive(Parser)]
#[command(
    name = "geodesic-rate",
    about = "Rate, shape and solver tools for the planted-geodesic problem",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print the exact rate and optimum geometry for one a as JSON.
    Rate {
        #[arg(long)]
        a: f64,
    },
    /// Sample the exact shape and density into a CSV.
    Shape {
        #[arg(long)]
        a: f64,
        #[arg(long, default_value_t = 101)]
        samples: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Emit shape CSVs for the two standard figure families.
    Figures {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 201)]
        samples: usize,
    },
    /// Run the full numerical solver and write the solution JSON.
    Solve {
        #[arg(long)]
        a: f64,
        #[arg(long, default_value_t = 512)]
        grid: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check the no-shortcut condition for a solution file or an
    /// exactly assembled profile.
    Verify(VerifyArgs),
    /// Solve a range of a values and write a summary CSV.
    Sweep {
        #[arg(long)]
        a_min: f64,
        #[arg(long)]
        a_max: f64,
        #[arg(long)]
        step: f64,
        #[arg(long, default_value_t = 256)]
        grid: usize,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Worker threads; defaults to available parallelism.
        #[arg(long)]
        jobs: Option<usize>,
    },
}

#[derive(Args)]
struct VerifyArgs {
    /// Solution JSON produced by `solve`.
    input: Option<PathBuf>,
    /// Assemble the exact profile for this a instead of reading a file.
    #[arg(long)]
    a: Option<f64>,
    #[arg(long, default_value_t = 500)]
    grid: usize,
    /// Margin tolerance; defaults to 10 / grid.
    #[arg(long)]
    tol: Option<f64>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(match e {
                CmdError::Usage(_) => EXIT_USAGE,
                CmdError::Io(_) => EXIT_IO,
            })
        }
    }
}

enum CmdError {
    Usage(String),
    Io(std::io::Error),
}

impl std::fmt::Display for CmdError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CmdError::Usage(m) => write!(f, "{m}"),
            CmdError::Io(e) => write!(f, "{e}"),
        }
    }
}

impl From<Error> for CmdError {
    fn from(e: Error) -> Self {
        CmdError::Usage(e.to_string())
    }
}

impl From<std::io::Error> for CmdError {
    fn from(e: std::io::Error) -> Self {
        CmdError::Io(e)
    }
}

impl From<IoError> for CmdError {
    fn from(e: IoError) -> Self {
        match e {
            IoError::Io(inner) => CmdError::Io(inner),
            other => CmdError::Usage(other.to_string()),
        }
    }
}

fn run(cmd: Command) -> Result<ExitCode, CmdError> {
    match cmd {
        Command::Rate { a } => cmd_rate(a),
        Command::Shape { a, samples, out } => cmd_shape(a, samples, &out),
        Command::Figures { out, samples } => cmd_figures(&out, samples),
        Command::Solve { a, grid, out } => cmd_solve(a, grid, out.as_deref()),
        Command::Verify(args) => cmd_verify(&args),
        Command::Sweep {
            a_min,
            a_max,
            step,
            grid,
            out,
            jobs,
        } => cmd_sweep(a_min, a_max, step, grid, out.as_deref(), jobs),
    }
}

fn cmd_rate(a: f64) -> Result<ExitCode, CmdError> {
    let i = rate_exact(a)?;
    // Breakpoint and optimal slack are tabulated for a <= 1/2; the
    // a > 1/2 case is its mirror image in time.
    let ap = a.min(1.0 - a);
    let (x_b, t_b_ap) = breakpoint(ap)?;
    let t_b = if a <= 0.5 { t_b_ap } else { 1.0 - t_b_ap };
    let b_opt = b_opt_exact(ap)?;
    println!(
        "{{\"a\":{},\"I\":{},\"t_B\":{},\"x_B\":{},\"b_opt\":{},\"r3_coefficient\":{}}}",
        io::fmt_sig9(a),
        io::fmt_sig9(i),
        io::fmt_sig9(t_b),
        io::fmt_sig9(x_b),
        io::fmt_sig9(b_opt),
        io::fmt_sig9(i / 8.0)
    );
    Ok(ExitCode::SUCCESS)
}

fn shape_rows(a: f64, samples: usize) -> Result<Vec<(f64, f64, f64)>, CmdError> {
    if samples < 2 {
        return Err(CmdError::Usage(format!("samples = {samples}, need >= 2")));
    }
    let mut rows = Vec::with_capacity(samples);
    for k in 0..samples {
        let t = k as f64 / (samples - 1) as f64;
        let f = shape_exact(a, t)?;
        // Density is cellwise in the solver; at t = 1 report the
        // left-limit value so every row is defined.
        let td = if k + 1 == samples {
            (t - 0.5 / (samples - 1) as f64).max(0.0)
        } else {
            t
        };
        let rho = density_exact(a, td)?;
        rows.push((t, f, rho));
    }
    Ok(rows)
}

fn cmd_shape(a: f64, samples: usize, out: &Path) -> Result<ExitCode, CmdError> {
    rate_exact(a)?;
    let rows = shape_rows(a, samples)?;
    write_shape_csv(out, &rows)?;
    Ok(ExitCode::SUCCESS)
}

fn cmd_figures(out: &Path, samples: usize) -> Result<ExitCode, CmdError> {
    std::fs::create_dir_all(out).map_err(CmdError::Io)?;
    for a in [0.02, 0.05, 0.125, 0.2, 0.35, 0.5] {
        let rows = shape_rows(a, samples)?;
        let name = format!("shape_a{}.csv", a.to_string().replace('.', "p"));
        write_shape_csv(&out.join(name), &rows)?;
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_solve(a: f64, grid: usize, out: Option<&Path>) -> Result<ExitCode, CmdError> {
    rate_exact(a)?;
    if grid < 16 {
        return Err(CmdError::Usage(format!("grid = {grid}, need >= 16")));
    }
    let sol = solve_full(a, &SolverOptions::with_cells(grid))?;
    let rec = SolveRecord::from(&sol);
    match out {
        Some(path) => write_solve_json(path, &rec)?,
        None => println!(
            "{}",
            serde_json::to_string_pretty(&rec).expect("static schema")
        ),
    }
    eprintln!(
        "a = {}  I_total = {}  b_star = {}  converged = {}",
        io::fmt_sig9(sol.a),
        io::fmt_sig9(sol.i_total),
        io::fmt_sig9(sol.b_star),
        rec.converged
    );
    Ok(if rec.converged {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(EXIT_FAIL)
    })
}

fn cmd_verify(args: &VerifyArgs) -> Result<ExitCode, CmdError> {
    let (profile, a) = match (&args.input, args.a) {
        (Some(path), None) => {
            let rec = read_solve_json(path)?;
            (rec.to_profile()?, rec.a)
        }
        (None, Some(a)) => {
            rate_exact(a)?;
            (assemble_closed_form(a, args.grid)?, a)
        }
        _ => {
            return Err(CmdError::Usage(
                "provide either a solution file or --a".into(),
            ))
        }
    };
    let n = profile.grid().n_cells();
    let tol = args.tol.unwrap_or(10.0 / n as f64);
    // The verifier wants the through-point on a node; snap a to the
    // nearest one (identity whenever a is already aligned).
    let a_node = (a * n as f64).round() / n as f64;
    let report = verify_geodesic(&profile, a_node, tol)?;
    println!("{}", verification_report_json(&report));
    Ok(if report.passed {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(EXIT_FAIL)
    })
}

fn cmd_sweep(
    a_min: f64,
    a_max: f64,
    step: f64,
    grid: usize,
    out: Option<&Path>,
    jobs: Option<usize>,
) -> Result<ExitCode, CmdError> {
    if !(a_min > 0.0 && a_min <= a_max && a_max < 1.0) || !(step > 0.0) {
        return Err(CmdError::Usage(format!(
            "invalid sweep range: a_min = {a_min}, a_max = {a_max}, step = {step}"
        )));
    }
    if grid < 16 {
        return Err(CmdError::Usage(format!("grid = {grid}, need >= 16")));
    }
    let mut targets = Vec::new();
    let mut k = 0usize;
    loop {
        let a = a_min + k as f64 * step;
        if a > a_max + 1e-12 {
            break;
        }
        targets.push(a);
        k += 1;
    }

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.unwrap_or(0))
        .build()
        .map_err(|e| CmdError::Usage(e.to_string()))?;
    let opts = SolverOptions::with_cells(grid);
    let results: Vec<Result<SweepRow, Error>> = pool.install(|| {
        use rayon::prelude::*;
        targets
            .par_iter()
            .map(|&a| {
                let sol = solve_full(a, &opts)?;
                let exact = rate_exact(sol.a_grid)?;
                Ok(SweepRow {
                    a,
                    i_exact: exact,
                    i_solver: sol.i_total,
                    rel_err: (sol.i_total - exact).abs() / exact,
                    b_star: sol.b_star,
                    t_b_est: sol.t_b_est,
                    x_b_est: sol.x_b_est,
                    converged: sol.report.converged,
                })
            })
            .collect()
    });
    let mut rows = Vec::with_capacity(results.len());
    for r in results {
        rows.push(r?);
    }
    // par_iter preserves input order, and targets are built in
    // ascending a, so rows are already sorted.
    let csv = io::sweep_csv_string(&rows);
    match out {
        Some(path) => std::fs::write(path, &csv)?,
        None => print!("{csv}"),
    }
    let all_ok = rows.iter().all(|r| r.converged);
    Ok(if all_ok {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(EXIT_FAIL)
    })
}
