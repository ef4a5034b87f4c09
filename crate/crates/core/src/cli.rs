//! The `tfbs` command-line front end.
//!
//! [`parse_config`] turns arguments into a validated [`RunConfig`]; [`run`] executes it and
//! writes CSV or a report. Output is deterministic for a fixed configuration.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;

use clap::error::ErrorKind;
use clap::{Args, CommandFactory, Parser, Subcommand, ValueEnum};

use crate::analysis::{
    convergence_study, random_m1_meshes, verify_kernel_properties, Axis, ConvergenceRow,
    StudyConfig,
};
use crate::caputo::KernelMode;
use crate::error::Result;
use crate::mesh::{SpatialMesh, TemporalMesh};
use crate::problem::{example1, example2, Example2Variant, HomogenizedSpec, ProblemFile};
use crate::soe::SoeApproximation;
use crate::spatial::{matrix_property_checks, CompactOperator};
use crate::stepper::{solve, SolverOptions};

/// Slack used by `verify-matrices`.
pub const MATRIX_SLACK: f64 = 1e-10;
/// Largest SOE size accepted by `verify-soe`.
pub const MAX_SOE_LEN: usize = 2000;

#[derive(Debug, Parser)]
#[command(name = "tfbs", version, about = "Time-fractional Black-Scholes solver")]
#[command(arg_required_else_help = true)]
struct Cli {
    #[command(subcommand)]
    command: CliCommand,
}

#[derive(Debug, Subcommand)]
enum CliCommand {
    /// Solve one problem and dump `t,x,u` for every time level.
    Solve {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long = "N", default_value_t = 64)]
        n: usize,
        #[arg(long = "M", default_value_t = 64)]
        m: usize,
    },
    /// Refinement study in time or space; writes `N,error,rate` or `M,error,rate`.
    Convergence {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long, default_value = "time")]
        axis: String,
        /// Coarsest (time study) or fixed number of time steps.
        #[arg(long = "N", default_value_t = 8)]
        n: usize,
        /// Coarsest (space study) or fixed number of spatial intervals.
        #[arg(long = "M", default_value_t = 1000)]
        m: usize,
        #[arg(long, default_value_t = 4)]
        doublings: usize,
        /// Reference resolution when the problem has no exact solution.
        #[arg(long, default_value_t = 1024)]
        reference: usize,
    },
    /// Kernel positivity, monotonicity and lower bound on random admissible meshes.
    VerifyKernels {
        #[arg(long, default_value_t = 0.5)]
        alpha: f64,
        #[arg(long, default_value_t = 1e-12)]
        epsilon: f64,
        #[arg(long, default_value_t = 100)]
        meshes: usize,
        #[arg(long = "max-N", default_value_t = 64)]
        max_n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Build an SOE approximation and report its sampled error.
    VerifySoe {
        #[arg(long, default_value_t = 0.5)]
        alpha: f64,
        #[arg(long, default_value_t = 1e-12)]
        epsilon: f64,
        #[arg(long, default_value_t = 1e-4)]
        dt: f64,
        #[arg(long = "T", default_value_t = 1.0)]
        horizon: f64,
        #[arg(long, default_value_t = 100_000)]
        samples: usize,
    },
    /// Rayleigh-quotient sweep of the compact-scheme matrices.
    VerifyMatrices {
        #[arg(long, default_value_t = 0.5)]
        a: f64,
        #[arg(long, default_value_t = 0.5, allow_hyphen_values = true)]
        b: f64,
        #[arg(long = "M", default_value_t = 64)]
        m: usize,
        #[arg(long, default_value_t = 1000)]
        vectors: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ProblemArg {
    Example1,
    Example2,
    Custom,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ModeArg {
    Fast,
    Direct,
}

#[derive(Debug, Args)]
struct CommonArgs {
    #[arg(long, value_enum, default_value = "example1")]
    problem: ProblemArg,
    /// TOML problem description for `--problem custom`.
    #[arg(long)]
    problem_file: Option<PathBuf>,
    /// Coefficient set of example2.
    #[arg(long, default_value = "printed")]
    variant: String,
    #[arg(long, default_value_t = 0.5)]
    alpha: f64,
    /// Grading exponent; defaults to 2/alpha.
    #[arg(long)]
    gamma: Option<f64>,
    #[arg(long, default_value_t = 1e-12)]
    epsilon: f64,
    #[arg(long, value_enum, default_value = "fast")]
    mode: ModeArg,
    #[arg(long)]
    allow_m1_violation: bool,
    /// Write CSV here instead of stdout.
    #[arg(long)]
    output: Option<PathBuf>,
}

/// Problem selection.
#[derive(Debug, Clone, PartialEq)]
pub enum ProblemChoice {
    Example1,
    Example2(Example2Variant),
    Custom(PathBuf),
}

/// Problem, order, mesh grading, solver options and output shared by `solve` and
/// `convergence`.
#[derive(Debug, Clone, PartialEq)]
pub struct ProblemConfig {
    pub problem: ProblemChoice,
    pub alpha: f64,
    pub gamma: f64,
    pub solver: SolverOptions,
    pub output: Option<PathBuf>,
}

impl ProblemConfig {
    pub fn load(&self) -> Result<HomogenizedSpec> {
        match &self.problem {
            ProblemChoice::Example1 => example1(self.alpha),
            ProblemChoice::Example2(v) => example2(self.alpha, *v),
            ProblemChoice::Custom(path) => ProblemFile::read(path)?.build(self.alpha),
        }
    }
}

/// A validated command.
#[derive(Debug, Clone, PartialEq)]
pub enum RunConfig {
    Solve {
        problem: ProblemConfig,
        n: usize,
        m: usize,
    },
    Convergence {
        problem: ProblemConfig,
        axis: Axis,
        n: usize,
        m: usize,
        doublings: usize,
        reference: usize,
    },
    VerifyKernels {
        alpha: f64,
        epsilon: f64,
        meshes: usize,
        max_n: usize,
        seed: u64,
    },
    VerifySoe {
        alpha: f64,
        epsilon: f64,
        delta_t: f64,
        horizon: f64,
        samples: usize,
    },
    VerifyMatrices {
        a: f64,
        b: f64,
        m: usize,
        vectors: usize,
        seed: u64,
    },
}

/// Result of a successful [`run`]. Verification commands may complete but fail.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RunStatus {
    Success,
    VerificationFailed,
}

fn usage_error(message: String) -> clap::Error {
    Cli::command().error(ErrorKind::ValueValidation, message)
}

fn check_alpha(alpha: f64) -> std::result::Result<(), clap::Error> {
    if alpha > 0.0 && alpha < 1.0 {
        Ok(())
    } else {
        Err(usage_error(format!(
            "--alpha must lie in (0, 1), got {alpha}"
        )))
    }
}

fn check_epsilon(epsilon: f64) -> std::result::Result<(), clap::Error> {
    if epsilon > 0.0 && epsilon < 1.0 {
        Ok(())
    } else {
        Err(usage_error(format!(
            "--epsilon must lie in (0, 1), got {epsilon}"
        )))
    }
}

fn check_min(name: &str, value: usize, min: usize) -> std::result::Result<(), clap::Error> {
    if value >= min {
        Ok(())
    } else {
        Err(usage_error(format!(
            "--{name} must be at least {min}, got {value}"
        )))
    }
}

fn problem_config(c: CommonArgs) -> std::result::Result<ProblemConfig, clap::Error> {
    check_alpha(c.alpha)?;
    check_epsilon(c.epsilon)?;
    let gamma = c.gamma.unwrap_or(2.0 / c.alpha);
    if !(gamma >= 1.0 && gamma.is_finite()) {
        return Err(usage_error(format!(
            "--gamma must be at least 1, got {gamma}"
        )));
    }
    let problem = match (c.problem, c.problem_file) {
        (ProblemArg::Example1, None) => ProblemChoice::Example1,
        (ProblemArg::Example2, None) => ProblemChoice::Example2(
            c.variant
                .parse()
                .map_err(|e: crate::Error| usage_error(format!("--variant: {e}")))?,
        ),
        (ProblemArg::Custom, Some(path)) => ProblemChoice::Custom(path),
        (ProblemArg::Custom, None) => {
            return Err(usage_error(
                "--problem custom requires --problem-file".into(),
            ))
        }
        (_, Some(_)) => {
            return Err(usage_error(
                "--problem-file requires --problem custom".into(),
            ))
        }
    };
    Ok(ProblemConfig {
        problem,
        alpha: c.alpha,
        gamma,
        solver: SolverOptions {
            mode: match c.mode {
                ModeArg::Fast => KernelMode::Fast,
                ModeArg::Direct => KernelMode::Direct,
            },
            epsilon: c.epsilon,
            allow_m1_violation: c.allow_m1_violation,
        },
        output: c.output,
    })
}

/// Parse and validate command-line arguments (the first item is the program name).
pub fn parse_config<I, T>(args: I) -> std::result::Result<RunConfig, clap::Error>
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = Cli::try_parse_from(args)?;
    Ok(match cli.command {
        CliCommand::Solve { common, n, m } => {
            check_min("N", n, 1)?;
            check_min("M", m, 4)?;
            RunConfig::Solve {
                problem: problem_config(common)?,
                n,
                m,
            }
        }
        CliCommand::Convergence {
            common,
            axis,
            n,
            m,
            doublings,
            reference,
        } => {
            check_min("N", n, 1)?;
            check_min("M", m, 4)?;
            let axis: Axis = axis
                .parse()
                .map_err(|e: crate::Error| usage_error(format!("--axis: {e}")))?;
            RunConfig::Convergence {
                problem: problem_config(common)?,
                axis,
                n,
                m,
                doublings,
                reference,
            }
        }
        CliCommand::VerifyKernels {
            alpha,
            epsilon,
            meshes,
            max_n,
            seed,
        } => {
            check_alpha(alpha)?;
            check_epsilon(epsilon)?;
            check_min("meshes", meshes, 1)?;
            check_min("max-N", max_n, 2)?;
            RunConfig::VerifyKernels {
                alpha,
                epsilon,
                meshes,
                max_n,
                seed,
            }
        }
        CliCommand::VerifySoe {
            alpha,
            epsilon,
            dt,
            horizon,
            samples,
        } => {
            check_alpha(alpha)?;
            check_epsilon(epsilon)?;
            if !(dt > 0.0 && horizon > dt && horizon.is_finite()) {
                return Err(usage_error(format!(
                    "need 0 < --dt < --T, got dt = {dt}, T = {horizon}"
                )));
            }
            check_min("samples", samples, 2)?;
            RunConfig::VerifySoe {
                alpha,
                epsilon,
                delta_t: dt,
                horizon,
                samples,
            }
        }
        CliCommand::VerifyMatrices {
            a,
            b,
            m,
            vectors,
            seed,
        } => {
            if !(a > 0.0 && b.is_finite()) {
                return Err(usage_error(format!("--a must be positive, got {a}")));
            }
            check_min("M", m, 4)?;
            RunConfig::VerifyMatrices {
                a,
                b,
                m,
                vectors,
                seed,
            }
        }
    })
}

fn open_output<'a>(
    path: &Option<PathBuf>,
    stdout: &'a mut dyn Write,
) -> io::Result<Box<dyn Write + 'a>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(stdout),
    })
}

/// Render study rows as CSV; the first row has an empty rate.
pub fn write_convergence_csv(
    out: &mut dyn Write,
    axis: Axis,
    rows: &[ConvergenceRow],
) -> io::Result<()> {
    let label = match axis {
        Axis::Time => "N",
        Axis::Space => "M",
    };
    writeln!(out, "{label},error,rate")?;
    for row in rows {
        match row.rate {
            Some(rate) => writeln!(out, "{},{:.9e},{:.9e}", row.size, row.error, rate)?,
            None => writeln!(out, "{},{:.9e},", row.size, row.error)?,
        }
    }
    Ok(())
}

fn io_err(e: io::Error) -> crate::Error {
    crate::error::invalid("output", e.to_string())
}

fn pass_fail(ok: bool) -> &'static str {
    if ok {
        "PASS"
    } else {
        "FAIL"
    }
}

/// Execute a configuration. CSV goes to the configured output (default `stdout`);
/// verification reports always go to `stdout`.
pub fn run(config: &RunConfig, stdout: &mut dyn Write) -> Result<RunStatus> {
    match config {
        RunConfig::Solve { problem, n, m } => {
            let spec = problem.load()?;
            let tmesh = TemporalMesh::graded(spec.horizon, *n, problem.gamma, spec.alpha)?;
            let smesh = SpatialMesh::new(spec.x_left, spec.x_right, *m)?;
            let grid = solve(&spec, &tmesh, &smesh, &problem.solver)?;
            let mut out = open_output(&problem.output, stdout).map_err(io_err)?;
            writeln!(out, "t,x,u").map_err(io_err)?;
            for level in 0..grid.n_levels() {
                let t = tmesh.t(level);
                let u = grid.level(level);
                for i in 0..=*m {
                    let value = if i == 0 || i == *m { 0.0 } else { u[i - 1] };
                    writeln!(out, "{:.9e},{:.9e},{:.9e}", t, smesh.x(i), value).map_err(io_err)?;
                }
            }
            out.flush().map_err(io_err)?;
            Ok(RunStatus::Success)
        }
        RunConfig::Convergence {
            problem,
            axis,
            n,
            m,
            doublings,
            reference,
        } => {
            let spec = problem.load()?;
            let rows = convergence_study(
                &spec,
                &StudyConfig {
                    axis: *axis,
                    base_n: *n,
                    base_m: *m,
                    doublings: *doublings,
                    gamma: problem.gamma,
                    solver: problem.solver,
                    reference: *reference,
                },
            )?;
            let mut out = open_output(&problem.output, stdout).map_err(io_err)?;
            write_convergence_csv(&mut out, *axis, &rows).map_err(io_err)?;
            out.flush().map_err(io_err)?;
            Ok(RunStatus::Success)
        }
        RunConfig::VerifyKernels {
            alpha,
            epsilon,
            meshes,
            max_n,
            seed,
        } => {
            let meshes = random_m1_meshes(*alpha, 1.0, *meshes, *max_n, *seed)?;
            let report = verify_kernel_properties(*alpha, &meshes, *epsilon)?;
            for (i, m) in report
                .meshes
                .iter()
                .enumerate()
                .filter(|(_, m)| !m.passed())
            {
                writeln!(stdout, "mesh {i} (N = {}): {m:?}", m.n_steps).map_err(io_err)?;
            }
            let ok = report.passed();
            writeln!(
                stdout,
                "verify-kernels alpha={alpha} epsilon={epsilon:e} meshes={} soe_len={} failures={} {}",
                report.meshes.len(),
                report.soe_len,
                report.failures(),
                pass_fail(ok)
            )
            .map_err(io_err)?;
            Ok(if ok {
                RunStatus::Success
            } else {
                RunStatus::VerificationFailed
            })
        }
        RunConfig::VerifySoe {
            alpha,
            epsilon,
            delta_t,
            horizon,
            samples,
        } => {
            let soe = SoeApproximation::build(*alpha, *epsilon, *delta_t, *horizon)?;
            let err = soe.max_error(*samples);
            let ok = err <= *epsilon && soe.len() <= MAX_SOE_LEN;
            writeln!(
                stdout,
                "verify-soe alpha={alpha} epsilon={epsilon:e} dt={delta_t:e} T={horizon} N_q={} max_error={err:.3e} {}",
                soe.len(),
                pass_fail(ok)
            )
            .map_err(io_err)?;
            Ok(if ok {
                RunStatus::Success
            } else {
                RunStatus::VerificationFailed
            })
        }
        RunConfig::VerifyMatrices {
            a,
            b,
            m,
            vectors,
            seed,
        } => {
            let op = CompactOperator::new(*a, *b, 1.0 / *m as f64, *m)?;
            let r = matrix_property_checks(&op, *vectors, *seed);
            let ok = r.passed(MATRIX_SLACK);
            writeln!(
                stdout,
                "verify-matrices a={a} b={b} M={m} samples={} hth=[{:.6}, {:.6}] ha_max={:.3e} combined_max={:.3e} {}",
                r.samples,
                r.hth_min,
                r.hth_max,
                r.ha_max,
                r.combined_max,
                pass_fail(ok)
            )
            .map_err(io_err)?;
            Ok(if ok {
                RunStatus::Success
            } else {
                RunStatus::VerificationFailed
            })
        }
    }
}

/// Parse, run and map the outcome to a process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let config = match parse_config(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    let stdout = io::stdout();
    let mut lock = stdout.lock();
    match run(&config, &mut lock) {
        Ok(RunStatus::Success) => 0,
        Ok(RunStatus::VerificationFailed) => 1,
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}
