use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "liftlab", version, about = "Lifting checks, spectral rates and tuning for ADMM and gradient descent on graph consensus")]
pub struct Cli {
    /// Print one JSON line with inputs and outputs instead of the human summary.
    #[arg(long, global = true)]
    pub json: bool,
    /// Worker threads for parallel grids and sweeps (default: all cores).
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check that M_A lifts M_G for uniform (γ, ρ).
    Verify(VerifyArgs),
    /// Spectrum and convergence rate of T_G or T_A.
    Rate(RateArgs),
    /// Optimal α for GD or (γ, ρ) for ADMM.
    Tune(TuneArgs),
    /// Tune both methods across a graph family and write the CSV.
    Sweep(SweepArgs),
    /// Run the ADMM or GD recursion.
    Simulate(SimulateArgs),
    /// Mixing time of a cycle walk or its lifting.
    Mix(MixArgs),
    /// Write S, Q, T_G, T_A, M_G, M_A as CSV plus a JSON manifest.
    ExportMatrices(ExportArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Alg {
    Gd,
    Admm,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum GdMethod {
    /// α* = 2/(λ_max + λ₂) from the Laplacian spectrum.
    Closed,
    /// Golden section search on full spectra of T_G.
    Search,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum FamilyArg {
    Cycle,
    Torus,
    Barbell,
}

#[derive(Debug, Args)]
pub struct GraphArg {
    /// cycle:N, torus:K, barbell:K, k4minus, complete-minus:N or file:PATH
    #[arg(long)]
    pub graph: String,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[command(flatten)]
    pub graph: GraphArg,
    #[arg(long, default_value_t = 0.5)]
    pub gamma: f64,
    #[arg(long, default_value_t = 1.0)]
    pub rho: f64,
    /// Largest accepted residual.
    #[arg(long, default_value_t = 1e-10)]
    pub tol: f64,
    /// Also write the certificate JSON here.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct RateArgs {
    #[command(flatten)]
    pub graph: GraphArg,
    #[arg(long, value_enum)]
    pub alg: Alg,
    /// GD step size.
    #[arg(long, required_if_eq("alg", "gd"))]
    pub alpha: Option<f64>,
    #[arg(long, required_if_eq("alg", "admm"))]
    pub gamma: Option<f64>,
    #[arg(long, required_if_eq("alg", "admm"))]
    pub rho: Option<f64>,
    /// Width of the band around modulus 1 counted as unit eigenvalues.
    #[arg(long, default_value_t = liftlab::spectral::UNIT_TOL)]
    pub unit_tol: f64,
    /// Eigenvalues listed in the human summary.
    #[arg(long, default_value_t = 6)]
    pub show: usize,
}

/// Search domain overrides; flags win over the config file.
#[derive(Debug, Args)]
pub struct SearchArgs {
    /// key = value file with any of the flags below (underscored names).
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub gamma_min: Option<f64>,
    #[arg(long)]
    pub gamma_max: Option<f64>,
    #[arg(long)]
    pub gamma_points: Option<usize>,
    #[arg(long)]
    pub rho_min: Option<f64>,
    #[arg(long)]
    pub rho_max: Option<f64>,
    #[arg(long)]
    pub rho_points: Option<usize>,
    #[arg(long)]
    pub refine_tol: Option<f64>,
    #[arg(long)]
    pub refine_budget: Option<usize>,
}

#[derive(Debug, Args)]
pub struct TuneArgs {
    #[command(flatten)]
    pub graph: GraphArg,
    #[arg(long, value_enum)]
    pub alg: Alg,
    #[arg(long, value_enum, default_value_t = GdMethod::Closed)]
    pub method: GdMethod,
    /// Bracket width at which the GD search stops.
    #[arg(long, default_value_t = 1e-12)]
    pub tol: f64,
    /// Evaluation budget of the GD search.
    #[arg(long, default_value_t = 200)]
    pub budget: usize,
    #[command(flatten)]
    pub search: SearchArgs,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[arg(long, value_enum)]
    pub family: FamilyArg,
    #[arg(long, required_unless_present = "indices")]
    pub from: Option<usize>,
    #[arg(long, required_unless_present = "indices")]
    pub to: Option<usize>,
    #[arg(long, default_value_t = 1)]
    pub step: usize,
    /// Explicit comma-separated index list instead of --from/--to/--step.
    #[arg(long, value_delimiter = ',', conflicts_with_all = ["from", "to"])]
    pub indices: Option<Vec<usize>>,
    /// Difference β̂₂ between indices of equal parity.
    #[arg(long)]
    pub parity: bool,
    /// CSV destination; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Also write the JSON summary here.
    #[arg(long)]
    pub summary: Option<PathBuf>,
    #[command(flatten)]
    pub search: SearchArgs,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub graph: GraphArg,
    #[arg(long, value_enum, default_value_t = Alg::Admm)]
    pub alg: Alg,
    #[arg(long, required_if_eq("alg", "gd"))]
    pub alpha: Option<f64>,
    #[arg(long, default_value_t = 1.0)]
    pub gamma: f64,
    #[arg(long, default_value_t = 1.0)]
    pub rho: f64,
    #[arg(long, default_value_t = 100)]
    pub steps: usize,
    /// Initial vertex values: `e:I` (unit vector), `random` (seeded by
    /// LIFTLAB_SEED) or a comma-separated list.
    #[arg(long, default_value = "e:0")]
    pub z0: String,
    /// Compare every ADMM iterate with powers of T_A.
    #[arg(long)]
    pub check_linear: bool,
    /// Tolerance for --check-linear.
    #[arg(long, default_value_t = 1e-9)]
    pub tol: f64,
    /// Trajectory CSV (t, residual).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Add the tracked vector to the trajectory CSV.
    #[arg(long, requires = "out")]
    pub with_state: bool,
}

#[derive(Debug, Args)]
pub struct MixArgs {
    /// lifted-cycle:N or lazy-cycle:N
    #[arg(long)]
    pub chain: String,
    /// Probability of switching direction in the lifted chain.
    #[arg(long = "switch")]
    pub switch_prob: Option<f64>,
    /// Holding probability of the lazy chain.
    #[arg(long, default_value_t = 0.5)]
    pub hold: f64,
    #[arg(long, default_value_t = 0.25)]
    pub eps: f64,
    #[arg(long, default_value_t = 1_000_000)]
    pub t_max: usize,
}

#[derive(Debug, Args)]
pub struct ExportArgs {
    #[command(flatten)]
    pub graph: GraphArg,
    #[arg(long, default_value_t = 0.5)]
    pub gamma: f64,
    #[arg(long, default_value_t = 1.0)]
    pub rho: f64,
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
}
