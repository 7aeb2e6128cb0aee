//! Command-line front end.
//!
//! Exit codes: 0 success, 1 input error, 2 solver did not converge,
//! 3 residual check failed.

mod files;
mod probe;

pub use files::{
    read_trajectory, read_trajectory_file, write_trajectory, write_trajectory_file, ConstraintSection, GridSection,
    ProblemFile,
};
pub use probe::{random_segment, run_probe, ProbeSample, ProbeSummary};

use std::ffi::OsString;
use std::io::{self, ErrorKind, Write};
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use log::{info, LevelFilter};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::conditions::{residual_report, ResidualReport};
use crate::error::{Error, Result};
use crate::functional::needle_sensitivity;
use crate::model::ProblemSpec;
use crate::solver::{
    default_initial, nonexistence_diagnostic, solve, NonexistenceDiagnostic, SolveResult, SolverConfig,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INPUT: i32 = 1;
pub const EXIT_NOT_CONVERGED: i32 = 2;
pub const EXIT_CHECK_FAILED: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "fvc", version, about = "Fractional Bolza problems: solve, check and sweep")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Minimize the discretized functional.
    Solve {
        /// Problem JSON.
        problem: PathBuf,
        /// Override the number of grid cells.
        #[arg(long)]
        n_cells: Option<usize>,
        /// Override the per-stage iteration cap.
        #[arg(long)]
        max_iters: Option<usize>,
        /// Report JSON (printed to stdout when omitted).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Write the optimal trajectory as CSV.
        #[arg(long)]
        traj_out: Option<PathBuf>,
        /// Seed of the needle spot check.
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Evaluate the necessary-condition residuals of a trajectory.
    Check {
        /// Problem JSON.
        problem: PathBuf,
        /// Trajectory CSV as written by `solve --traj-out`.
        trajectory: PathBuf,
        /// Largest residual that still passes.
        #[arg(long, default_value_t = 1e-6)]
        tol: f64,
        /// Grid the trajectory lives on, if not the problem's.
        #[arg(long)]
        n_cells: Option<usize>,
        /// Write the full residual report as JSON.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Solve the problem for several orders α.
    SweepAlpha {
        /// Problem JSON.
        problem: PathBuf,
        /// Comma-separated list, e.g. `1.0,0.75,0.5`.
        #[arg(long, allow_hyphen_values = true)]
        alphas: String,
        /// Override the number of grid cells.
        #[arg(long)]
        n_cells: Option<usize>,
        /// Override the per-stage iteration cap.
        #[arg(long)]
        max_iters: Option<usize>,
        /// CSV output (printed to stdout when omitted).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Memory-rigidity probe on random left segments.
    Probe {
        /// Order of the memory kernel, in (0, 1].
        #[arg(long)]
        alpha: f64,
        /// Degree of the polynomial fitted to each tail.
        #[arg(long, default_value_t = 0)]
        degree: usize,
        /// Number of random segments.
        #[arg(long, default_value_t = 100)]
        samples: usize,
        /// Cells per segment.
        #[arg(long, default_value_t = 64)]
        n_cells: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Write the per-sample residuals as JSON.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

/// Configures logging from `FVC_LOG` (`quiet`, `info` or `debug`).
pub fn init_logging() {
    let value = std::env::var("FVC_LOG").unwrap_or_default();
    let level = match value.as_str() {
        "quiet" => LevelFilter::Error,
        "info" => LevelFilter::Info,
        "debug" => LevelFilter::Debug,
        _ => LevelFilter::Warn,
    };
    let _ = env_logger::Builder::new()
        .filter_level(level)
        .format_timestamp(None)
        .target(env_logger::Target::Stderr)
        .try_init();
    if !value.is_empty() && !matches!(value.as_str(), "quiet" | "info" | "debug") {
        log::warn!("FVC_LOG = '{value}' not recognized; expected quiet, info or debug");
    }
}

/// Standard output that discards writes once the reader has gone away,
/// so `fvc ... | head` keeps its exit code.
struct Stdout;

impl Write for Stdout {
    fn write(&mut self, buf: &[u8]) -> io::Result<usize> {
        match io::stdout().write(buf) {
            Err(e) if e.kind() == ErrorKind::BrokenPipe => Ok(buf.len()),
            r => r,
        }
    }

    fn flush(&mut self) -> io::Result<()> {
        match io::stdout().flush() {
            Err(e) if e.kind() == ErrorKind::BrokenPipe => Ok(()),
            r => r,
        }
    }
}

macro_rules! say {
    ($($arg:tt)*) => {
        writeln!(Stdout, $($arg)*)?
    };
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_INPUT } else { EXIT_OK };
        }
    };
    let outcome = match cli.command {
        Command::Solve {
            problem,
            n_cells,
            max_iters,
            out,
            traj_out,
            seed,
        } => cmd_solve(&problem, n_cells, max_iters, out.as_deref(), traj_out.as_deref(), seed),
        Command::Check {
            problem,
            trajectory,
            tol,
            n_cells,
            out,
        } => cmd_check(&problem, &trajectory, tol, n_cells, out.as_deref()),
        Command::SweepAlpha {
            problem,
            alphas,
            n_cells,
            max_iters,
            out,
        } => cmd_sweep_alpha(&problem, &alphas, n_cells, max_iters, out.as_deref()),
        Command::Probe {
            alpha,
            degree,
            samples,
            n_cells,
            seed,
            out,
        } => cmd_probe(alpha, degree, samples, n_cells, seed, out.as_deref()),
    };
    match outcome {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::Diverged(_) => EXIT_NOT_CONVERGED,
                _ => EXIT_INPUT,
            }
        }
    }
}

fn load(problem: &Path, n_cells: Option<usize>, max_iters: Option<usize>) -> Result<(ProblemSpec, SolverConfig)> {
    let file = ProblemFile::read(problem)?;
    let spec = file.to_spec(n_cells)?;
    let mut config = file.solver_config();
    if let Some(m) = max_iters {
        config.max_iters = m;
    }
    config.validate().map_err(|e| Error::Input(e.to_string()))?;
    Ok((spec, config))
}

fn write_json<T: Serialize>(value: &T, path: Option<&Path>) -> Result<()> {
    match path {
        Some(p) => {
            let mut f = std::io::BufWriter::new(std::fs::File::create(p)?);
            serde_json::to_writer_pretty(&mut f, value)?;
            writeln!(f)?;
            f.flush()?;
        }
        None => {
            let mut out = io::BufWriter::new(Stdout);
            serde_json::to_writer_pretty(&mut out, value)?;
            writeln!(out)?;
            out.flush()?;
        }
    }
    Ok(())
}

#[derive(Debug, Clone, Serialize)]
pub struct ProblemSummary {
    pub alpha: f64,
    pub beta: f64,
    pub interval: [f64; 2],
    pub dim: usize,
    pub n_cells: usize,
}

impl ProblemSummary {
    pub fn of(spec: &ProblemSpec) -> Self {
        let g = spec.grid();
        Self {
            alpha: spec.alpha(),
            beta: spec.beta(),
            interval: [g.a(), g.b()],
            dim: spec.dim(),
            n_cells: g.n_cells(),
        }
    }
}

/// Smallest needle sensitivity over random interior nodes and values.
#[derive(Debug, Clone, Serialize)]
pub struct NeedleCheck {
    pub seed: u64,
    pub samples: usize,
    pub min_sensitivity: f64,
    pub tau_at_min: f64,
    pub v_at_min: Vec<f64>,
}

pub const NEEDLE_SAMPLES: usize = 16;

pub fn needle_check(spec: &ProblemSpec, result: &SolveResult, radius: f64, seed: u64) -> Result<Option<NeedleCheck>> {
    let grid = *spec.grid();
    if grid.n_cells() < 2 {
        return Ok(None);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = spec.dim();
    let reach = (result.traj.u.sup_norm() + 1.0).min(radius);
    let mut best: Option<NeedleCheck> = None;
    for _ in 0..NEEDLE_SAMPLES {
        let i = rng.random_range(1..grid.n_cells());
        let v: Vec<f64> = loop {
            let v: Vec<f64> = (0..n).map(|_| rng.random_range(-reach..=reach)).collect();
            if crate::grid::norm(&v) <= reach {
                break v;
            }
        };
        let tau = grid.node(i);
        let s = needle_sensitivity(spec, &result.traj, tau, &v)?;
        if best.as_ref().is_none_or(|b| s < b.min_sensitivity) {
            best = Some(NeedleCheck {
                seed,
                samples: NEEDLE_SAMPLES,
                min_sensitivity: s,
                tau_at_min: tau,
                v_at_min: v,
            });
        }
    }
    Ok(best)
}

/// Everything `fvc solve` writes to its report file.
#[derive(Debug, Clone, Serialize)]
pub struct SolveReport {
    pub problem: ProblemSummary,
    #[serde(flatten)]
    pub result: SolveResult,
    pub nonexistence: NonexistenceDiagnostic,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub needle_check: Option<NeedleCheck>,
}

fn solve_spec(spec: &ProblemSpec, config: &SolverConfig) -> Result<SolveResult> {
    solve(spec, config, &default_initial(spec)?)
}

pub fn cmd_solve(
    problem: &Path,
    n_cells: Option<usize>,
    max_iters: Option<usize>,
    out: Option<&Path>,
    traj_out: Option<&Path>,
    seed: u64,
) -> Result<i32> {
    let (spec, config) = load(problem, n_cells, max_iters)?;
    let result = solve_spec(&spec, &config)?;
    info!(
        "objective {:.10e}, {} iterations, converged {}",
        result.objective, result.iterations, result.converged
    );
    let report = SolveReport {
        problem: ProblemSummary::of(&spec),
        nonexistence: nonexistence_diagnostic(&spec, &result)?,
        needle_check: needle_check(&spec, &result, config.radius, seed)?,
        result,
    };
    if let Some(p) = traj_out {
        write_trajectory_file(&report.result.traj, p)?;
    }
    write_json(&report, out)?;
    if out.is_some() {
        say!(
            "objective = {}  converged = {}  iterations = {}  transversality_b = {:e}",
            report.result.objective,
            report.result.converged,
            report.result.iterations,
            report.result.report.transversality_b
        );
    }
    if !report.result.converged {
        eprintln!("solver stopped without meeting the tolerance");
        return Ok(EXIT_NOT_CONVERGED);
    }
    Ok(EXIT_OK)
}

/// Whether every residual of `report` is at most `tol` and the
/// second-order and cone conditions hold.
pub fn check_passes(report: &ResidualReport, tol: f64) -> bool {
    report.el_residual_sup <= tol
        && report.transversality_a <= tol
        && report.transversality_b <= tol
        && report.legendre_ok
        && report.psi_in_cone != Some(false)
}

pub fn cmd_check(
    problem: &Path,
    trajectory: &Path,
    tol: f64,
    n_cells: Option<usize>,
    out: Option<&Path>,
) -> Result<i32> {
    if !(tol >= 0.0) {
        return Err(Error::Input(format!("--tol {tol} must be non-negative")));
    }
    let file = ProblemFile::read(problem)?;
    let spec = file.to_spec(n_cells)?;
    let legendre_tol = file.solver_config().legendre_tol;
    let traj = read_trajectory_file(trajectory, spec.grid(), spec.dim())?;
    let report = match residual_report(&spec, &traj, legendre_tol) {
        Ok(r) => r,
        Err(e @ Error::Regularity { .. }) => {
            eprintln!("check failed: {e}");
            return Ok(EXIT_CHECK_FAILED);
        }
        Err(e) => return Err(e),
    };
    let pass = check_passes(&report, tol);
    say!("el_residual_sup = {:e}", report.el_residual_sup);
    say!("transversality_a = {:e}", report.transversality_a);
    say!("transversality_b = {:e}", report.transversality_b);
    say!("legendre_ok = {}", report.legendre_ok);
    if let Some(c) = report.psi_in_cone {
        say!("psi_in_cone = {c}");
    }
    say!("{} at tol = {tol:e}", if pass { "PASS" } else { "FAIL" });
    if let Some(p) = out {
        write_json(&report, Some(p))?;
    }
    Ok(if pass { EXIT_OK } else { EXIT_CHECK_FAILED })
}

fn parse_alphas(list: &str) -> Result<Vec<f64>> {
    let alphas = list
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| {
            s.parse::<f64>()
                .map_err(|_| Error::Input(format!("--alphas: '{s}' is not a number")))
        })
        .collect::<Result<Vec<_>>>()?;
    if alphas.is_empty() {
        return Err(Error::Input("--alphas: empty list".into()));
    }
    Ok(alphas)
}

/// One row of the sweep table.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub alpha: f64,
    pub objective: f64,
    pub grad_norm: f64,
    pub transversality_b: f64,
    pub nonexistence_flag: bool,
    #[serde(skip)]
    pub converged: bool,
}

/// Solves `spec` at each order in `alphas`.
pub fn sweep_alpha(spec: &ProblemSpec, config: &SolverConfig, alphas: &[f64]) -> Result<Vec<SweepRow>> {
    let specs: Vec<ProblemSpec> = alphas.iter().map(|&a| spec.with_alpha(a)).collect();
    for s in &specs {
        crate::model::validate(s).into_result()?;
    }
    specs
        .iter()
        .map(|s| {
            let r = solve_spec(s, config)?;
            let diag = nonexistence_diagnostic(s, &r)?;
            info!(
                "alpha {}: objective {:.10e}, flag {}",
                s.alpha(),
                r.objective,
                diag.flagged()
            );
            Ok(SweepRow {
                alpha: s.alpha(),
                objective: r.objective,
                grad_norm: r.grad_norm,
                transversality_b: r.report.transversality_b,
                nonexistence_flag: diag.flagged(),
                converged: r.converged,
            })
        })
        .collect()
}

pub fn cmd_sweep_alpha(
    problem: &Path,
    alphas: &str,
    n_cells: Option<usize>,
    max_iters: Option<usize>,
    out: Option<&Path>,
) -> Result<i32> {
    let alphas = parse_alphas(alphas)?;
    let (spec, config) = load(problem, n_cells, max_iters)?;
    let rows = sweep_alpha(&spec, &config, &alphas)?;
    let sink: Box<dyn Write> = match out {
        Some(p) => Box::new(std::io::BufWriter::new(std::fs::File::create(p)?)),
        None => Box::new(io::BufWriter::new(Stdout)),
    };
    let mut w = csv::Writer::from_writer(sink);
    for row in &rows {
        w.serialize(row)?;
    }
    w.flush()?;
    if rows.iter().all(|r| r.converged) {
        Ok(EXIT_OK)
    } else {
        eprintln!("some orders did not converge");
        Ok(EXIT_NOT_CONVERGED)
    }
}

pub fn cmd_probe(
    alpha: f64,
    degree: usize,
    samples: usize,
    n_cells: usize,
    seed: u64,
    out: Option<&Path>,
) -> Result<i32> {
    if samples == 0 || n_cells == 0 {
        return Err(Error::Input("--samples and --n-cells must be positive".into()));
    }
    let summary = run_probe(alpha, degree, samples, n_cells, seed).map_err(|e| Error::Input(e.to_string()))?;
    write_json(&summary, out)?;
    if out.is_some() {
        say!(
            "min = {:e}  median = {:e}  max = {:e}  zero segment = {:e}",
            summary.min_residual,
            summary.median_residual,
            summary.max_residual,
            summary.zero_segment_residual
        );
    }
    Ok(if summary.min_residual > 0.0 {
        EXIT_OK
    } else {
        EXIT_CHECK_FAILED
    })
}
