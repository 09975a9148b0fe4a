mod classical;
mod input;
mod kernel;
mod report;
mod verify;

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use heatdeform::classical::Classical;
use heatdeform::linalg::real_vec;
use heatdeform::problem::Problem;
use heatdeform::{CVec, C64};

pub const EXIT_PASS: u8 = 0;
pub const EXIT_CONFIG: u8 = 2;
pub const EXIT_RADIUS: u8 = 3;
pub const EXIT_VERIFY: u8 = 4;

/// A failure that ends the run with a given exit code.
#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub message: String,
}

impl Failure {
    pub fn config(message: impl Into<String>) -> Self {
        Failure {
            code: EXIT_CONFIG,
            message: message.into(),
        }
    }
}

impl From<heatdeform::Error> for Failure {
    fn from(e: heatdeform::Error) -> Self {
        use heatdeform::Error as E;
        let code = match &e {
            E::OutOfRadius { .. } | E::FocalPoint { .. } => EXIT_RADIUS,
            E::Problem(_) | E::InvalidModel(_) | E::Budget { .. } | E::UndefinedAtZero | E::BoundaryMass { .. } => {
                EXIT_CONFIG
            }
            _ => EXIT_VERIFY,
        };
        let mut message = e.to_string();
        if matches!(e, E::Budget { .. }) {
            message.push_str("; lower --nmax or --quad");
        }
        Failure { code, message }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::config(format!("i/o error: {e}"))
    }
}

#[derive(Parser)]
#[command(name = "heatdeform", version, about = "Deformation-series heat and Schrödinger kernels")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Trajectories, action, prefactor data and classical identity residuals.
    Classical(ClassicalArgs),
    /// Kernel evaluation p = p0 · pconj at a batch of points.
    Kernel(KernelArgs),
    /// Full invariant suite with pass/fail per check.
    Verify(VerifyArgs),
}

#[derive(Args, Clone)]
pub struct Common {
    /// Problem definition file (JSON).
    #[arg(long)]
    pub problem: PathBuf,
    /// Comma-separated complex times, e.g. `0.2,0.3i,0.1+0.05i`.
    #[arg(long, default_value = "0.2")]
    pub t: String,
    /// Points `x:y;x:y` or `grid:LO:HI:N`; random points from `--seed` if absent.
    #[arg(long)]
    pub xy: Option<String>,
    /// Output directory.
    #[arg(long, default_value = "heatdeform-out")]
    pub out: PathBuf,
    /// RK4 steps of the boundary-value solver.
    #[arg(long, default_value_t = heatdeform::classical::DEFAULT_STEPS)]
    pub steps: usize,
    /// Seed for random probe points.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Args, Clone)]
pub struct SeriesArgs {
    /// Highest series order.
    #[arg(long)]
    pub nmax: Option<usize>,
    /// Tail-bound tolerance for early stopping.
    #[arg(long, default_value_t = heatdeform::series::DEFAULT_TOL)]
    pub tol: f64,
    /// Gauss–Legendre nodes per simplex dimension.
    #[arg(long)]
    pub quad: Option<usize>,
    /// Gauss–Legendre order of the deformation-matrix τ-integral.
    #[arg(long, default_value_t = heatdeform::deformation::DEFAULT_QUADRATURE_ORDER)]
    pub kernel_quad: usize,
    /// Chebyshev nodes per direction of the deformation-matrix table.
    #[arg(long, default_value_t = heatdeform::deformation::DEFAULT_GRID)]
    pub grid: usize,
}

#[derive(Args)]
pub struct ClassicalArgs {
    #[command(flatten)]
    pub common: Common,
    /// Trajectory samples per unit rescaled time.
    #[arg(long, default_value_t = 32)]
    pub samples: usize,
}

#[derive(Args)]
pub struct KernelArgs {
    #[command(flatten)]
    pub common: Common,
    #[command(flatten)]
    pub series: SeriesArgs,
}

#[derive(Args)]
pub struct VerifyArgs {
    #[command(flatten)]
    pub common: Common,
    #[command(flatten)]
    pub series: SeriesArgs,
    /// Random point-mass configurations for the positivity check.
    #[arg(long, default_value_t = 20)]
    pub masses: usize,
}

/// Loaded problem, parsed times and points, and a ready output directory.
pub struct Context {
    pub problem: Problem,
    pub classical: Classical,
    pub times: Vec<C64>,
    pub points: Vec<(CVec, CVec)>,
    pub out: PathBuf,
    pub rng: ChaCha8Rng,
}

impl Context {
    pub fn new(common: &Common, default_points: usize) -> Result<Self, Failure> {
        if common.steps < 8 {
            return Err(Failure::config(format!("--steps must be at least 8, got {}", common.steps)));
        }
        let problem = Problem::from_path(&common.problem)?;
        let nu = problem.model.nu();
        let times = input::parse_times(&common.t).map_err(Failure::config)?;
        let mut rng = ChaCha8Rng::seed_from_u64(common.seed);
        let points = match &common.xy {
            Some(text) => input::parse_points(text, nu).map_err(Failure::config)?,
            None => (0..default_points)
                .map(|_| {
                    let mut v = || real_vec(&(0..nu).map(|_| rng.gen_range(-1.0..1.0)).collect::<Vec<_>>());
                    (v(), v())
                })
                .collect(),
        };
        fs::create_dir_all(&common.out)?;
        let classical = Classical::with_steps(problem.model.clone(), common.steps);
        Ok(Context {
            problem,
            classical,
            times,
            points,
            out: common.out.clone(),
            rng,
        })
    }
}

impl SeriesArgs {
    pub fn config(&self, default_nmax: usize, default_quad: usize) -> Result<heatdeform::series::SeriesConfig, Failure> {
        let n_max = self.nmax.unwrap_or(default_nmax);
        let nodes = self.quad.unwrap_or(default_quad);
        if n_max == 0 || nodes == 0 || self.kernel_quad == 0 || self.grid < 2 {
            return Err(Failure::config("--nmax, --quad and --kernel-quad must be positive, --grid at least 2"));
        }
        if !(self.tol >= 0.0) {
            return Err(Failure::config(format!("--tol must be non-negative, got {}", self.tol)));
        }
        Ok(heatdeform::series::SeriesConfig {
            n_max,
            nodes,
            tol: self.tol,
            kernel: heatdeform::deformation::KernelConfig {
                quadrature_order: self.kernel_quad,
                grid: self.grid,
            },
            ..heatdeform::series::SeriesConfig::default()
        })
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Classical(args) => classical::run(&args),
        Command::Kernel(args) => kernel::run(&args),
        Command::Verify(args) => verify::run(&args),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
