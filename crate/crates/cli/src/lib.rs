//! Command-line front end for robust non-linear matrix factorization.
//!
//! [`run`] parses an argument vector, executes one subcommand and returns the
//! process exit code: 0 on success, 1 for usage or I/O errors and 2 for
//! numerical failures. Diagnostics go to standard error.

pub mod bench;
mod commands;
pub mod config_file;
pub mod io;

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{ArgAction, Args, Parser, Subcommand, ValueEnum};
use rnlmf::{PenaltyC, PenaltyE, RnlmfConfig};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Io(String),
    #[error(transparent)]
    Core(#[from] rnlmf::Error),
}

impl CliError {
    fn io(path: &Path, err: impl std::fmt::Display) -> Self {
        CliError::Io(format!("{}: {err}", path.display()))
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Core(e) if e.is_numeric() => 2,
            _ => 1,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "rnlmf", version, about = "Robust non-linear matrix factorization", args_override_self = true)]
pub struct Cli {
    /// File of `key = value` lines supplying option defaults.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Sample a union of polynomial manifolds and corrupt it.
    Synth(SynthArgs),
    /// Fit the factorization and write the denoised matrix.
    Denoise(DenoiseArgs),
    /// Denoise new columns with a fixed dictionary.
    Ose(OseArgs),
    /// Cluster columns from the learned codes.
    Cluster(ClusterArgs),
    /// Robust PCA baseline.
    Rpca(RpcaArgs),
    /// Benchmarks.
    #[command(subcommand)]
    Bench(BenchCommand),
}

#[derive(Debug, Subcommand)]
pub enum BenchCommand {
    /// Denoising RMSE of RNLMF, RPCA and the noisy input on synthetic data.
    Synthetic(BenchArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum NoiseArg {
    Sparse,
    Column,
    Saltpepper,
    Occlusion,
    /// Salt-and-pepper followed by block occlusion.
    #[value(name = "saltpepper+occlusion")]
    SaltpepperOcclusion,
}

#[derive(Debug, Clone, Args)]
pub struct DataArgs {
    /// Number of manifolds.
    #[arg(long, default_value_t = 3)]
    pub k: usize,
    /// Latent dimension of each manifold.
    #[arg(long, default_value_t = 3)]
    pub r: usize,
    /// Polynomial degree.
    #[arg(long, default_value_t = 3)]
    pub p: usize,
    /// Ambient dimension.
    #[arg(long, default_value_t = 30)]
    pub m: usize,
    /// Columns per manifold.
    #[arg(long, default_value_t = 300)]
    pub samples: usize,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[command(flatten)]
    pub data: DataArgs,
    /// Fraction of entries (sparse) or columns (other kinds) corrupted.
    #[arg(long, default_value_t = 0.3)]
    pub rho: f64,
    #[arg(long, value_enum, default_value = "sparse")]
    pub noise: NoiseArg,
    /// Noise standard deviation relative to the data's.
    #[arg(long, default_value_t = 1.0)]
    pub sigma_e_ratio: f64,
    /// Fraction of entries set in each salt-and-pepper column.
    #[arg(long, default_value_t = 0.25)]
    pub density: f64,
    #[arg(long, default_value_t = 0)]
    pub image_h: usize,
    #[arg(long, default_value_t = 0)]
    pub image_w: usize,
    /// Randomly permute the columns.
    #[arg(long, action = ArgAction::Set, num_args = 0..=1, default_value_t = false, default_missing_value = "true")]
    pub shuffle: bool,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value = ".")]
    pub out_dir: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct SolverArgs {
    /// Dictionary atoms.
    #[arg(long)]
    pub d: Option<usize>,
    #[arg(long, default_value_t = 5e-3)]
    pub lambda_c: f64,
    #[arg(long, default_value_t = 1e-3)]
    pub lambda_e: f64,
    /// Penalty on the codes: frob, l1 or nuclear.
    #[arg(long, default_value = "frob")]
    pub penalty_c: PenaltyC,
    /// Penalty on the noise: l1, l21 or frob.
    #[arg(long, default_value = "l1")]
    pub penalty_e: PenaltyE,
    #[arg(long, default_value_t = 1.0)]
    pub sigma_scale: f64,
    /// Fixed kernel width, overriding the data-driven choice.
    #[arg(long)]
    pub sigma: Option<f64>,
    #[arg(long, default_value_t = 0.5)]
    pub eta: f64,
    #[arg(long, default_value_t = 1.0)]
    pub tau_d: f64,
    #[arg(long, default_value_t = 0.0)]
    pub mu: f64,
    #[arg(long, default_value_t = 1.0)]
    pub xi: f64,
    #[arg(long, default_value_t = 300)]
    pub max_iters: usize,
    #[arg(long, default_value_t = 1e-8)]
    pub tol: f64,
    /// Reject block steps that raise the objective.
    #[arg(long, action = ArgAction::Set, num_args = 0..=1, default_value_t = false, default_missing_value = "true")]
    pub strict_descent: bool,
    #[arg(long, action = ArgAction::Set, num_args = 0..=1, default_value_t = false, default_missing_value = "true")]
    pub scaled_d_step: bool,
    /// Use the Frobenius code penalty for this many initial iterations.
    #[arg(long)]
    pub switch_penalty_after: Option<usize>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

impl SolverArgs {
    pub fn to_config(&self, default_d: usize) -> RnlmfConfig {
        RnlmfConfig {
            d: self.d.unwrap_or(default_d),
            lambda_c: self.lambda_c,
            lambda_e: self.lambda_e,
            penalty_c: self.penalty_c,
            penalty_e: self.penalty_e,
            sigma_scale: self.sigma_scale,
            sigma: self.sigma,
            eta: self.eta,
            tau_d: self.tau_d,
            mu: self.mu,
            xi: self.xi,
            max_iters: self.max_iters,
            tol: self.tol,
            strict_descent: self.strict_descent,
            seed: self.seed,
            use_scaled_d_step: self.scaled_d_step,
            switch_penalty_after: self.switch_penalty_after,
        }
    }
}

#[derive(Debug, Args)]
pub struct DenoiseArgs {
    #[arg(long)]
    pub input: PathBuf,
    /// Clean matrix for error metrics.
    #[arg(long)]
    pub truth: Option<PathBuf>,
    #[command(flatten)]
    pub solver: SolverArgs,
    #[arg(long, default_value = ".")]
    pub out_dir: PathBuf,
}

#[derive(Debug, Args)]
pub struct OseArgs {
    #[arg(long)]
    pub input: PathBuf,
    /// Dictionary from a previous `denoise` run.
    #[arg(long)]
    pub dict: PathBuf,
    /// Kernel width used when the dictionary was learned.
    #[arg(long)]
    pub sigma: f64,
    #[arg(long)]
    pub truth: Option<PathBuf>,
    #[arg(long, default_value_t = 5e-3)]
    pub lambda_c: f64,
    #[arg(long, default_value_t = 1e-3)]
    pub lambda_e: f64,
    #[arg(long, default_value = "frob")]
    pub penalty_c: PenaltyC,
    #[arg(long, default_value = "l1")]
    pub penalty_e: PenaltyE,
    #[arg(long, default_value_t = 300)]
    pub max_iters: usize,
    #[arg(long, default_value_t = 1e-8)]
    pub tol: f64,
    #[arg(long, default_value = ".")]
    pub out_dir: PathBuf,
}

#[derive(Debug, Args)]
pub struct ClusterArgs {
    #[arg(long)]
    pub input: PathBuf,
    /// Number of clusters.
    #[arg(long)]
    pub k: usize,
    /// Affinity entries kept per column.
    #[arg(long, default_value_t = 10)]
    pub kappa: usize,
    #[arg(long, default_value_t = 0.01)]
    pub gamma: f64,
    #[arg(long, default_value_t = 20)]
    pub kmeans_restarts: usize,
    /// Ground-truth labels, one per line.
    #[arg(long)]
    pub truth: Option<PathBuf>,
    #[command(flatten)]
    pub solver: SolverArgs,
    #[arg(long, default_value = ".")]
    pub out_dir: PathBuf,
}

#[derive(Debug, Args)]
pub struct RpcaArgs {
    #[arg(long)]
    pub input: PathBuf,
    /// Sparse weight; defaults to 1/√n.
    #[arg(long)]
    pub lambda: Option<f64>,
    #[arg(long)]
    pub mu0: Option<f64>,
    #[arg(long, default_value_t = 1.5)]
    pub mu_growth: f64,
    #[arg(long, default_value_t = 500)]
    pub max_iters: usize,
    #[arg(long, default_value_t = 1e-7)]
    pub tol: f64,
    #[arg(long)]
    pub truth: Option<PathBuf>,
    #[arg(long, default_value = ".")]
    pub out_dir: PathBuf,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    #[command(flatten)]
    pub data: DataArgs,
    /// Comma-separated corruption levels.
    #[arg(long, value_delimiter = ',', default_value = "0.1,0.3,0.5")]
    pub rho_grid: Vec<f64>,
    /// Number of seeds per level.
    #[arg(long, default_value_t = 5)]
    pub seeds: usize,
    #[arg(long, default_value_t = 0)]
    pub first_seed: u64,
    /// Entrywise (sparse) or column-wise corruption.
    #[arg(long, value_enum, default_value = "sparse")]
    pub noise: NoiseArg,
    #[arg(long, default_value_t = 1.0)]
    pub sigma_e_ratio: f64,
    /// RPCA weights tried per run, in units of 1/√n; the best is reported.
    #[arg(long, value_delimiter = ',', default_value = "0.5,0.75,1,1.5,2,2.5,3")]
    pub rpca_lambda_grid: Vec<f64>,
    #[arg(long, default_value_t = 500)]
    pub rpca_max_iters: usize,
    #[command(flatten)]
    pub solver: SolverArgs,
    /// Also write the table as CSV to this file.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Runs the command line `argv` (including the program name) and returns the
/// exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString>,
{
    let argv: Vec<OsString> = argv.into_iter().map(Into::into).collect();
    let argv = match config_file::expand_config(argv) {
        Ok(a) => a,
        Err(e) => {
            eprintln!("error: {e}");
            return e.exit_code();
        }
    };
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    match commands::execute(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
