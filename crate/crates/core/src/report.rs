//! Command-line surface and report formats.
//!
//! Every command produces a serializable report wrapped in a versioned
//! envelope. JSON output uses shortest round-trip float formatting, so a
//! report re-parses into bit-identical values.

use std::f64::consts::FRAC_PI_2;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
#[cfg(feature = "parallel")]
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectral::{self, GridSpec, SolveOptions, SpectralResult};
use crate::trial::{bound_constants, BoundReport, TrialParams, WedgeConfig};
use crate::variational::{self, ExistenceWitness, OptimizedBound, RayleighReport};

pub const SCHEMA_VERSION: u32 = 1;

/// Column order of the sweep table.
pub const SWEEP_COLUMNS: [&str; 8] = [
    "theta",
    "alpha",
    "capital_lambda",
    "bound_thm2",
    "bound_optimized",
    "lambda_fd",
    "fd_error_budget",
    "status",
];

#[derive(Debug, Parser)]
#[command(
    name = "brokenline",
    version,
    about = "Ground-state bounds for a delta interaction on a broken line"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Explicit bound constants and the upper bound on the ground state.
    Bound(CommonArgs),
    /// Rayleigh quotient of one trial function.
    Rayleigh(CommonArgs),
    /// Existence witness and explicit-bound check.
    Verify(CommonArgs),
    /// Minimize the Rayleigh quotient over the trial family.
    Optimize(CommonArgs),
    /// Finite-difference ground state.
    Solve(SolveArgs),
    /// Bounds (and optionally the solver) over a grid of angles.
    Sweep(CommonArgs),
    /// Log-log exponent fit of the binding energy near one end of the angle range.
    Fit(FitArgs),
}

#[derive(Debug, Clone, Args)]
pub struct CommonArgs {
    /// Half-angle; repeat or separate with commas for several values.
    #[arg(long, value_delimiter = ',', num_args = 1.., allow_negative_numbers = true)]
    pub theta: Vec<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub theta_min: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub theta_max: Option<f64>,
    #[arg(long)]
    pub theta_steps: Option<usize>,
    /// Read every angle in degrees.
    #[arg(long)]
    pub degrees: bool,
    #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
    pub alpha: f64,
    #[arg(long, allow_negative_numbers = true)]
    pub rho: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub n: Option<f64>,
    /// Solver box half-width.
    #[arg(long = "box", allow_negative_numbers = true)]
    pub half_width: Option<f64>,
    /// Solver spacing on the finest grid.
    #[arg(long, allow_negative_numbers = true)]
    pub spacing: Option<f64>,
    /// Also run the finite-difference solver (sweep).
    #[arg(long)]
    pub with_solver: bool,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    pub format: Format,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct SolveArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Write the finest-grid matrix in coordinate text format.
    #[arg(long)]
    pub dump_matrix: Option<PathBuf>,
    /// Write the finest-grid eigenfunction as CSV.
    #[arg(long)]
    pub dump_eigenfunction: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct FitArgs {
    #[arg(long, value_enum)]
    pub side: Side,
    /// Sweep table (CSV) to fit; without it a sweep with the solver is run.
    #[arg(long)]
    pub input: Option<PathBuf>,
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    Zero,
    #[value(name = "pi_half")]
    PiHalf,
}

/// Versioned wrapper of every JSON report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Envelope<T> {
    pub schema: u32,
    pub command: String,
    pub result: T,
}

impl<T: Serialize> Envelope<T> {
    pub fn new(command: &str, result: T) -> Self {
        Self {
            schema: SCHEMA_VERSION,
            command: command.to_string(),
            result,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("reports contain only finite numbers")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub existence: ExistenceWitness,
    /// Quotient at the explicit-bound parameters.
    pub explicit: RayleighReport,
    pub bound: BoundReport,
    /// `explicit.quotient <= bound.lambda_upper_bound`.
    pub explicit_bound_holds: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OptimizeReport {
    pub optimized: OptimizedBound,
    pub bound_thm2: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    pub solver: SpectralResult,
    /// Absent on the straight line.
    pub bound_thm2: Option<f64>,
    /// `best_estimate + error_budget < bound_thm2`.
    pub below_bound: Option<bool>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RowStatus {
    Ok,
    /// Error budgets overlap, so the ordering cannot be resolved.
    Inconclusive,
    /// A strict ordering between the bounds failed.
    Violation,
    Error,
}

impl RowStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            RowStatus::Ok => "ok",
            RowStatus::Inconclusive => "inconclusive",
            RowStatus::Violation => "violation",
            RowStatus::Error => "error",
        }
    }

    fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "ok" => RowStatus::Ok,
            "inconclusive" => RowStatus::Inconclusive,
            "violation" => RowStatus::Violation,
            "error" => RowStatus::Error,
            _ => return None,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub theta: f64,
    pub alpha: f64,
    pub capital_lambda: Option<f64>,
    pub bound_thm2: Option<f64>,
    pub bound_optimized: Option<f64>,
    pub lambda_fd: Option<f64>,
    pub fd_error_budget: Option<f64>,
    pub status: RowStatus,
    /// Error message for failed rows; not part of the CSV table.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub side: Side,
    pub slope: f64,
    pub intercept: f64,
    /// Standard error of the slope; zero with exactly two degrees of freedom lost.
    pub slope_std_error: f64,
    /// Root-mean-square residual of the log-log fit.
    pub residual_rms: f64,
    /// Exponent predicted by the asymptotic analysis.
    pub predicted_slope: f64,
    pub points: Vec<FitPoint>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitPoint {
    pub theta: f64,
    pub x: f64,
    pub y: f64,
}

/// Options for filling in sweep rows.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SweepOptions {
    pub with_solver: bool,
    pub solver: SolveOptions,
}

pub fn cmd_bound(cfg: &WedgeConfig) -> Result<BoundReport> {
    bound_constants(cfg)
}

fn sweep_row(theta: f64, alpha: f64, opts: &SweepOptions) -> SweepRow {
    let mut row = SweepRow {
        theta,
        alpha,
        capital_lambda: None,
        bound_thm2: None,
        bound_optimized: None,
        lambda_fd: None,
        fd_error_budget: None,
        status: RowStatus::Ok,
        detail: None,
    };
    let outcome = (|| -> Result<()> {
        let cfg = WedgeConfig::new(theta, alpha)?;
        let bound = bound_constants(&cfg)?;
        row.capital_lambda = Some(bound.capital_lambda);
        row.bound_thm2 = Some(bound.lambda_upper_bound);
        let optimized = variational::optimize_bound(&cfg)?.best.quotient;
        row.bound_optimized = Some(optimized);
        if optimized > bound.lambda_upper_bound {
            row.status = RowStatus::Violation;
        }
        if opts.with_solver {
            let fd = spectral::solve(&cfg, &opts.solver)?;
            let (value, budget) = (fd.best_estimate(), fd.error_budget());
            row.lambda_fd = Some(value);
            row.fd_error_budget = Some(budget);
            if row.status == RowStatus::Ok {
                row.status = if value - budget > optimized {
                    RowStatus::Violation
                } else if value + budget >= optimized {
                    RowStatus::Inconclusive
                } else {
                    RowStatus::Ok
                };
            }
        }
        Ok(())
    })();
    if let Err(e) = outcome {
        row.status = RowStatus::Error;
        row.detail = Some(e.to_string());
    }
    row
}

/// One row per angle, computed concurrently and returned in input order.
/// Failures are recorded per row.
pub fn cmd_sweep(thetas: &[f64], alpha: f64, opts: &SweepOptions) -> Result<Vec<SweepRow>> {
    if thetas.len() < 2 {
        return Err(Error::domain(
            "theta",
            format!("a sweep needs at least 2 angles, got {}", thetas.len()),
        ));
    }
    if !(alpha.is_finite() && alpha > 0.0) {
        return Err(Error::domain(
            "alpha",
            format!("must be positive and finite, got {alpha}"),
        ));
    }
    #[cfg(feature = "parallel")]
    let rows = thetas.par_iter().map(|&t| sweep_row(t, alpha, opts)).collect();
    #[cfg(not(feature = "parallel"))]
    let rows = thetas.iter().map(|&t| sweep_row(t, alpha, opts)).collect();
    Ok(rows)
}

/// Least-squares slope of the binding energy in log-log coordinates.
///
/// `pi_half`: `ln(-α²/4 - λ)` against `ln(π/2 - θ)`, predicted slope 4.
/// `zero`: `ln(1 + λ/α²)` against `ln θ`, predicted slope 2/3.
pub fn cmd_fit_asymptotics(side: Side, rows: &[SweepRow]) -> Result<FitReport> {
    let mut points: Vec<FitPoint> = rows
        .iter()
        .filter(|r| matches!(r.status, RowStatus::Ok | RowStatus::Inconclusive))
        .filter_map(|r| {
            let lambda = r.lambda_fd?;
            let alpha2 = r.alpha * r.alpha;
            let (x, y) = match side {
                Side::PiHalf => (FRAC_PI_2 - r.theta, -0.25 * alpha2 - lambda),
                Side::Zero => (r.theta, 1.0 + lambda / alpha2),
            };
            (x > 0.0 && y > 0.0 && x.is_finite() && y.is_finite()).then(|| FitPoint {
                theta: r.theta,
                x: x.ln(),
                y: y.ln(),
            })
        })
        .collect();
    points.sort_by(|a, b| a.theta.total_cmp(&b.theta));
    let distinct = points.windows(2).filter(|w| w[0].theta != w[1].theta).count() + usize::from(!points.is_empty());
    if points.len() < 3 || distinct < 3 {
        return Err(Error::domain(
            "theta",
            format!(
                "fit needs at least 3 usable rows with distinct angles, got {} rows and {distinct} distinct angles",
                points.len()
            ),
        ));
    }
    let k = points.len() as f64;
    let mx = points.iter().map(|p| p.x).sum::<f64>() / k;
    let my = points.iter().map(|p| p.y).sum::<f64>() / k;
    let sxx: f64 = points.iter().map(|p| (p.x - mx).powi(2)).sum();
    let sxy: f64 = points.iter().map(|p| (p.x - mx) * (p.y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ssr: f64 = points.iter().map(|p| (p.y - intercept - slope * p.x).powi(2)).sum();
    let slope_std_error = if points.len() > 2 {
        (ssr / (k - 2.0) / sxx).sqrt()
    } else {
        0.0
    };
    Ok(FitReport {
        side,
        slope,
        intercept,
        slope_std_error,
        residual_rms: (ssr / k).sqrt(),
        predicted_slope: match side {
            Side::PiHalf => 4.0,
            Side::Zero => 2.0 / 3.0,
        },
        points,
    })
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

pub fn write_sweep_csv<W: Write>(rows: &[SweepRow], out: W) -> Result<()> {
    let io_err = |e: csv::Error| Error::domain("out", e.to_string());
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(out);
    w.write_record(SWEEP_COLUMNS).map_err(io_err)?;
    for r in rows {
        w.write_record([
            r.theta.to_string(),
            r.alpha.to_string(),
            fmt_opt(r.capital_lambda),
            fmt_opt(r.bound_thm2),
            fmt_opt(r.bound_optimized),
            fmt_opt(r.lambda_fd),
            fmt_opt(r.fd_error_budget),
            r.status.as_str().to_string(),
        ])
        .map_err(io_err)?;
    }
    w.flush().map_err(|e| Error::domain("out", e.to_string()))?;
    Ok(())
}

pub fn read_sweep_csv<R: io::Read>(input: R) -> Result<Vec<SweepRow>> {
    let bad = |msg: String| Error::domain("input", msg);
    let mut rd = csv::Reader::from_reader(input);
    let headers = rd.headers().map_err(|e| bad(e.to_string()))?.clone();
    if headers.iter().collect::<Vec<_>>() != SWEEP_COLUMNS {
        return Err(bad(format!(
            "unexpected header {:?}",
            headers.iter().collect::<Vec<_>>()
        )));
    }
    let num = |s: &str| -> Result<Option<f64>> {
        if s.is_empty() {
            Ok(None)
        } else {
            s.parse().map(Some).map_err(|_| bad(format!("not a number: {s:?}")))
        }
    };
    let mut rows = Vec::new();
    for rec in rd.records() {
        let rec = rec.map_err(|e| bad(e.to_string()))?;
        let field = |i: usize| rec.get(i).unwrap_or("");
        rows.push(SweepRow {
            theta: num(field(0))?.ok_or_else(|| bad("missing theta".into()))?,
            alpha: num(field(1))?.ok_or_else(|| bad("missing alpha".into()))?,
            capital_lambda: num(field(2))?,
            bound_thm2: num(field(3))?,
            bound_optimized: num(field(4))?,
            lambda_fd: num(field(5))?,
            fd_error_budget: num(field(6))?,
            status: RowStatus::parse(field(7)).ok_or_else(|| bad(format!("unknown status {:?}", field(7))))?,
            detail: None,
        });
    }
    Ok(rows)
}

pub fn write_bound_csv<W: Write>(rows: &[BoundReport], out: W) -> Result<()> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(out);
    for r in rows {
        w.serialize(r).map_err(|e| Error::domain("out", e.to_string()))?;
    }
    w.flush().map_err(|e| Error::domain("out", e.to_string()))?;
    Ok(())
}

/// Fully resolved inputs of one invocation.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub thetas: Vec<f64>,
    pub alpha: f64,
    pub rho: Option<f64>,
    pub n: Option<f64>,
    pub solver: SolveOptions,
    pub with_solver: bool,
    pub format: Format,
    pub out: Option<PathBuf>,
}

fn flag_name(param: &'static str) -> &'static str {
    match param {
        "theta" => "--theta",
        "alpha" => "--alpha",
        "rho" => "--rho",
        "n" => "--n",
        "half_width" => "--box",
        "spacing" | "cells" => "--spacing",
        other => other,
    }
}

/// Renames parameter names in validation errors to the flag that set them.
fn with_flag(e: Error) -> Error {
    match e {
        Error::Domain { name, reason } => Error::Domain {
            name: flag_name(name),
            reason,
        },
        other => other,
    }
}

impl RunConfig {
    pub fn from_args(args: &CommonArgs) -> Result<Self> {
        let to_rad = |x: f64| if args.degrees { x.to_radians() } else { x };
        let mut thetas: Vec<f64> = args.theta.iter().map(|&t| to_rad(t)).collect();
        match (args.theta_min, args.theta_max, args.theta_steps) {
            (None, None, None) => {}
            (Some(lo), Some(hi), Some(steps)) => {
                if !thetas.is_empty() {
                    return Err(Error::domain(
                        "--theta",
                        "give either --theta or --theta-min/--theta-max/--theta-steps",
                    ));
                }
                if steps < 2 {
                    return Err(Error::domain(
                        "--theta-steps",
                        format!("need at least 2 steps, got {steps}"),
                    ));
                }
                let (lo, hi) = (to_rad(lo), to_rad(hi));
                if !(lo < hi) {
                    return Err(Error::domain(
                        "--theta-min",
                        format!("must be below --theta-max, got {lo} >= {hi}"),
                    ));
                }
                thetas = (0..steps)
                    .map(|k| {
                        if k + 1 == steps {
                            hi
                        } else {
                            lo + (hi - lo) * k as f64 / (steps - 1) as f64
                        }
                    })
                    .collect();
            }
            _ => {
                return Err(Error::domain(
                    "--theta-min",
                    "--theta-min, --theta-max and --theta-steps must be given together",
                ))
            }
        }
        for &t in &thetas {
            WedgeConfig::new(t, args.alpha).map_err(with_flag)?;
        }
        if !(args.alpha.is_finite() && args.alpha > 0.0) {
            return Err(Error::domain(
                "--alpha",
                format!("must be positive and finite, got {}", args.alpha),
            ));
        }
        if let Some(rho) = args.rho {
            if !(rho.is_finite() && rho > 0.0) {
                return Err(Error::domain("--rho", format!("must be positive, got {rho}")));
            }
        }
        if let Some(n) = args.n {
            if !(n.is_finite() && n > 0.0) {
                return Err(Error::domain("--n", format!("must be positive, got {n}")));
            }
        }
        let mut solver = SolveOptions::default();
        let half_width = args
            .half_width
            .unwrap_or_else(|| SolveOptions::default_half_width(args.alpha));
        if args.half_width.is_some() || args.spacing.is_some() {
            let grid = match args.spacing {
                Some(h) => GridSpec::from_spacing(half_width, h),
                None => GridSpec::new(half_width, 512),
            }
            .map_err(with_flag)?;
            grid.check_box(args.alpha).map_err(with_flag)?;
            solver = solver.with_box(half_width, grid.cells());
        }
        Ok(Self {
            thetas,
            alpha: args.alpha,
            rho: args.rho,
            n: args.n,
            solver,
            with_solver: args.with_solver,
            format: args.format,
            out: args.out.clone(),
        })
    }

    fn single_theta(&self) -> Result<f64> {
        match self.thetas.as_slice() {
            [t] => Ok(*t),
            [] => Err(Error::domain("--theta", "required")),
            _ => Err(Error::domain("--theta", "this command takes a single angle")),
        }
    }

    fn cfg(&self) -> Result<WedgeConfig> {
        WedgeConfig::new(self.single_theta()?, self.alpha).map_err(with_flag)
    }

    fn trial_params(&self, cfg: &WedgeConfig) -> Result<TrialParams> {
        let default = TrialParams::theorem_default(cfg)?;
        TrialParams::new(cfg, self.rho.unwrap_or(default.rho), self.n.unwrap_or(default.n)).map_err(with_flag)
    }

    fn json_only(&self, command: &str) -> Result<()> {
        if self.format == Format::Csv {
            return Err(Error::domain(
                "--format",
                format!("csv output is not available for {command}"),
            ));
        }
        Ok(())
    }
}

/// Exit status: 0 success, 1 validation error, 2 numerical failure.
pub fn exit_code(e: &Error) -> i32 {
    if e.is_validation() {
        1
    } else {
        2
    }
}

fn open_out(path: &Option<PathBuf>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).map_err(|e| Error::domain("--out", format!("{}: {e}", p.display())))?,
        )),
        None => Box::new(io::stdout().lock()),
    })
}

fn emit_json<T: Serialize>(cfg: &RunConfig, command: &str, result: T) -> Result<()> {
    let mut out = open_out(&cfg.out)?;
    writeln!(out, "{}", Envelope::new(command, result).to_json()).map_err(|e| Error::domain("--out", e.to_string()))?;
    out.flush().map_err(|e| Error::domain("--out", e.to_string()))
}

fn write_file(path: &Path, f: impl FnOnce(&mut BufWriter<File>) -> io::Result<()>) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::domain("dump", format!("{}: {e}", path.display())))?;
    let mut w = BufWriter::new(file);
    f(&mut w)
        .and_then(|_| w.flush())
        .map_err(|e| Error::domain("dump", format!("{}: {e}", path.display())))
}

fn sweep_options(cfg: &RunConfig, with_solver: bool) -> SweepOptions {
    SweepOptions {
        with_solver,
        solver: cfg.solver,
    }
}

/// Runs one parsed command, writing its report.
pub fn run(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Bound(args) => {
            let cfg = RunConfig::from_args(args)?;
            if cfg.thetas.is_empty() {
                return Err(Error::domain("--theta", "required"));
            }
            let reports = cfg
                .thetas
                .iter()
                .map(|&t| cmd_bound(&WedgeConfig::new(t, cfg.alpha)?))
                .collect::<Result<Vec<_>>>()?;
            match cfg.format {
                Format::Csv => write_bound_csv(&reports, open_out(&cfg.out)?),
                Format::Json if reports.len() == 1 => emit_json(&cfg, "bound", reports[0]),
                Format::Json => emit_json(&cfg, "bound", reports),
            }
        }
        Command::Rayleigh(args) => {
            let cfg = RunConfig::from_args(args)?;
            cfg.json_only("rayleigh")?;
            let w = cfg.cfg()?;
            let params = cfg.trial_params(&w)?;
            emit_json(&cfg, "rayleigh", variational::rayleigh(&w, &params)?)
        }
        Command::Verify(args) => {
            let cfg = RunConfig::from_args(args)?;
            cfg.json_only("verify")?;
            let w = cfg.cfg()?;
            let bound = bound_constants(&w)?;
            let rho = cfg.rho.unwrap_or(bound.rho);
            let existence = variational::verify_thm1(&w, rho).map_err(with_flag)?;
            let explicit = variational::rayleigh(&w, &TrialParams::theorem_default(&w)?)?;
            emit_json(
                &cfg,
                "verify",
                VerifyReport {
                    existence,
                    explicit,
                    bound,
                    explicit_bound_holds: explicit.quotient <= bound.lambda_upper_bound,
                },
            )
        }
        Command::Optimize(args) => {
            let cfg = RunConfig::from_args(args)?;
            cfg.json_only("optimize")?;
            let w = cfg.cfg()?;
            let optimized = variational::optimize_bound(&w)?;
            emit_json(
                &cfg,
                "optimize",
                OptimizeReport {
                    optimized,
                    bound_thm2: bound_constants(&w)?.lambda_upper_bound,
                },
            )
        }
        Command::Solve(args) => {
            let cfg = RunConfig::from_args(&args.common)?;
            cfg.json_only("solve")?;
            let theta = cfg.single_theta()?;
            let w = if theta == FRAC_PI_2 {
                WedgeConfig::straight_line(cfg.alpha)?
            } else {
                cfg.cfg()?
            };
            let mut solver = spectral::solve(&w, &cfg.solver)?;
            if let Some(path) = &args.dump_matrix {
                let a = spectral::assemble(&w, &solver.grid)?;
                write_file(path, |f| a.write_coo(f))?;
            }
            if let Some(path) = &args.dump_eigenfunction {
                write_file(path, |f| {
                    spectral::write_eigenfunction_csv(&solver.grid, &solver.eigenvector, f)
                })?;
            }
            solver.eigenvector = Vec::new();
            let bound_thm2 = bound_constants(&w).ok().map(|b| b.lambda_upper_bound);
            let below_bound = bound_thm2.map(|b| solver.best_estimate() + solver.error_budget() < b);
            emit_json(
                &cfg,
                "solve",
                SolveReport {
                    solver,
                    bound_thm2,
                    below_bound,
                },
            )
        }
        Command::Sweep(args) => {
            let cfg = RunConfig::from_args(args)?;
            let rows = cmd_sweep(&cfg.thetas, cfg.alpha, &sweep_options(&cfg, cfg.with_solver)).map_err(with_flag)?;
            match cfg.format {
                Format::Csv => write_sweep_csv(&rows, open_out(&cfg.out)?),
                Format::Json => emit_json(&cfg, "sweep", rows),
            }
        }
        Command::Fit(args) => {
            let cfg = RunConfig::from_args(&args.common)?;
            cfg.json_only("fit")?;
            let rows = match &args.input {
                Some(path) => {
                    let f =
                        File::open(path).map_err(|e| Error::domain("--input", format!("{}: {e}", path.display())))?;
                    read_sweep_csv(f)?
                }
                None => cmd_sweep(&cfg.thetas, cfg.alpha, &sweep_options(&cfg, true)).map_err(with_flag)?,
            };
            emit_json(&cfg, "fit", cmd_fit_asymptotics(args.side, &rows)?)
        }
    }
}

/// Parses `argv`, runs, and maps the outcome to an exit status. Diagnostics
/// go to stderr as a single line.
pub fn main_with_args<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = e.print();
                    0
                }
                _ => {
                    let msg = e.to_string();
                    let first = msg.lines().find(|l| !l.trim().is_empty()).unwrap_or("usage error");
                    eprintln!("{first}");
                    1
                }
            };
        }
    };
    match run(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}
