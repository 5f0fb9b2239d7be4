use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "conjugen", version, about = "Build and check pairs of conjugate functions on R^n")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve a grid, integrate h, and check the conjugacy conditions.
    Solve(SolveArgs),
    /// Recompute the conjugacy report from a stored artifact.
    Verify(VerifyArgs),
    /// Check that the stored φ lie on the real hypersurface (n = 3 or 4).
    Hypersurface(HypersurfaceArgs),
    /// Compare Newton against the closed-form solution for a linear F.
    Oracle(OracleArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum BackendArg {
    General,
    Trilinear5,
}

#[derive(Debug, Args)]
pub struct SolveArgs {
    /// Dimension of the real space.
    #[arg(long = "n")]
    pub n: Option<usize>,
    #[arg(long, value_enum, default_value = "general")]
    pub backend: BackendArg,
    /// Generating function, in terms of phi1 … phik.
    #[arg(long = "f")]
    pub f: String,
    /// One `min:max:count` per axis, comma separated.
    #[arg(long)]
    pub grid: String,
    /// Newton stops once max |F_i − X_i| is at or below this.
    #[arg(long, default_value_t = 1e-12)]
    pub tol_residual: f64,
    #[arg(long, default_value_t = 50)]
    pub max_iters: usize,
    /// Random perturbations tried after the all-ones seed.
    #[arg(long, default_value_t = 8)]
    pub retries: usize,
    #[arg(long, default_value_t = 0xC0FFEE)]
    pub rng_seed: u64,
    /// Explicit starting φ, as `re,im;re,im;…` (a bare `re` means zero imaginary part).
    #[arg(long)]
    pub seed_phi: Option<String>,
    /// Flat index of the cell where h = 0; defaults to the first solved cell.
    #[arg(long)]
    pub base_cell: Option<usize>,
    /// Bound on each report field divided by mean |∇f|².
    #[arg(long, default_value_t = 0.25)]
    pub tol_report: f64,
    /// Largest acceptable fraction of failed or unreached cells.
    #[arg(long, default_value_t = 0.01)]
    pub max_failed_fraction: f64,
    /// JSON artifact path.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// One row per cell.
    #[arg(long)]
    pub csv: Option<PathBuf>,
    /// Whitespace-separated `x1 x2 f g` slices.
    #[arg(long)]
    pub plotdata: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    /// JSON artifact written by `solve`.
    pub artifact: PathBuf,
    #[arg(long, default_value_t = 0.25)]
    pub tol_report: f64,
}

#[derive(Debug, Args)]
pub struct HypersurfaceArgs {
    /// JSON artifact written by `solve`.
    pub artifact: PathBuf,
    /// Bound on the scale-normalized residuals.
    #[arg(long, default_value_t = 1e-9)]
    pub tol: f64,
}

#[derive(Debug, Args)]
pub struct OracleArgs {
    #[arg(long = "n")]
    pub n: Option<usize>,
    #[arg(long, value_enum, default_value = "general")]
    pub backend: BackendArg,
    /// Coefficients of F = Σ a_j φ_j, as `re,im;re,im;…`.
    #[arg(long)]
    pub a: String,
    /// Real point, comma separated.
    #[arg(long)]
    pub point: String,
    #[arg(long, default_value_t = 1e-10)]
    pub tol: f64,
}
