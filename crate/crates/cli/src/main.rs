//! `translator-lab`: solve, diagnose, grassmann and growth workflows.
//!
//! Exit status: 0 on success, 1 when a check fails or the solver does not
//! converge, 2 on usage and I/O errors.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use translator_lab::LabError;

#[derive(Parser, Debug)]
#[command(name = "translator-lab", version, about = "Numerical laboratory for graphical translating solitons")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Solve a Dirichlet problem and write the patch and a solver log.
    Solve(SolveArgs),
    /// Run the identity and inequality checks on a patch.
    Diagnose(DiagnoseArgs),
    /// Jordan angles, w, v and h of a plane; threshold constants.
    Grassmann(GrassmannArgs),
    /// Conformal volume growth profile of a patch.
    Growth(GrowthArgs),
}

#[derive(Args, Debug)]
struct SolveArgs {
    /// Problem file (JSON).
    #[arg(long)]
    problem: Option<PathBuf>,
    /// Nodes per axis, overriding the problem's shape.
    #[arg(long)]
    grid: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Config file; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct DiagnoseArgs {
    /// Patch header (JSON) written by `solve`.
    #[arg(long)]
    patch: Option<PathBuf>,
    /// Comma-separated check names.
    #[arg(long, value_delimiter = ',')]
    checks: Option<Vec<String>>,
    /// Run translator-only checks even if the patch is not detected as a translator.
    #[arg(long)]
    assume_translator: bool,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    stability_trials: Option<usize>,
    #[arg(long)]
    competitor_trials: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct GrassmannArgs {
    /// Z as a JSON matrix, inline or in a file.
    #[arg(long)]
    z: Option<String>,
    /// Orthonormal frame of P as a JSON matrix, inline or in a file.
    #[arg(long)]
    p: Option<String>,
    /// Orthonormal frame of the reference plane.
    #[arg(long)]
    q: Option<String>,
    /// Print the threshold constants.
    #[arg(long)]
    thresholds: bool,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct GrowthArgs {
    #[arg(long)]
    patch: Option<PathBuf>,
    /// Comma-separated ambient coordinates of the origin.
    #[arg(long)]
    origin: Option<String>,
    #[arg(long)]
    steps: Option<usize>,
    #[arg(long)]
    rho_max: Option<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Debug)]
pub struct CliError {
    pub code: u8,
    pub message: String,
}

impl CliError {
    pub fn usage(message: impl Into<String>) -> Self {
        CliError { code: 2, message: message.into() }
    }

    pub fn failed(message: impl Into<String>) -> Self {
        CliError { code: 1, message: message.into() }
    }
}

impl From<LabError> for CliError {
    fn from(e: LabError) -> Self {
        let code = match e {
            LabError::NotConverged { .. }
            | LabError::SingularJacobian { .. }
            | LabError::LinearSolver(_)
            | LabError::Integrator(_) => 1,
            _ => 2,
        };
        CliError { code, message: e.to_string() }
    }
}

fn init_threads() -> Result<(), CliError> {
    let Ok(raw) = std::env::var("TRANSLATOR_LAB_THREADS") else {
        return Ok(());
    };
    let threads: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|t| *t > 0)
        .ok_or_else(|| CliError::usage(format!("TRANSLATOR_LAB_THREADS must be a positive integer, got {raw:?}")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| CliError::usage(format!("thread pool: {e}")))
}

fn run(cli: Cli) -> Result<(), CliError> {
    init_threads()?;
    match cli.command {
        Command::Solve(a) => {
            let mut c: config::SolveConfig = config::load(a.config.as_deref())?;
            c.problem = a.problem.or(c.problem);
            c.grid = a.grid.or(c.grid);
            c.out = a.out.unwrap_or(c.out);
            commands::solve(&c)
        }
        Command::Diagnose(a) => {
            let mut c: config::DiagnoseConfig = config::load(a.config.as_deref())?;
            c.patch = a.patch.or(c.patch);
            c.suite.checks = a.checks.or(c.suite.checks);
            c.suite.assume_translator |= a.assume_translator;
            c.seed = a.seed.unwrap_or(c.seed);
            c.stability_trials = a.stability_trials.unwrap_or(c.stability_trials);
            c.competitor_trials = a.competitor_trials.unwrap_or(c.competitor_trials);
            c.out = a.out.unwrap_or(c.out);
            commands::diagnose(&c)
        }
        Command::Grassmann(a) => {
            let mut c: config::GrassmannConfig = config::load(a.config.as_deref())?;
            if let Some(z) = a.z {
                c.z = Some(config::parse_matrix(&z)?);
            }
            if let Some(p) = a.p {
                c.p = Some(config::parse_matrix(&p)?);
            }
            if let Some(q) = a.q {
                c.q = Some(config::parse_matrix(&q)?);
            }
            c.thresholds |= a.thresholds;
            c.out = a.out.or(c.out);
            commands::grassmann(&c)
        }
        Command::Growth(a) => {
            let mut c: config::GrowthConfig = config::load(a.config.as_deref())?;
            c.patch = a.patch.or(c.patch);
            if let Some(o) = a.origin {
                c.origin = Some(config::parse_point(&o)?);
            }
            c.growth.steps = a.steps.unwrap_or(c.growth.steps);
            c.growth.rho_max = a.rho_max.or(c.growth.rho_max);
            c.out = a.out.unwrap_or(c.out);
            commands::growth(&c)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message);
            ExitCode::from(e.code)
        }
    }
}
