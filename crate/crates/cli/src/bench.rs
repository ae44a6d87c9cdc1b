//! Synthetic denoising benchmark: RNLMF against RPCA and the noisy input.

use rayon::prelude::*;
use rnlmf::datagen::{gen_union_polynomial, rmse, SynthSpec};
use rnlmf::rnlmf::fit;
use rnlmf::rpca::{rpca_admm, RpcaConfig};
use rnlmf::{NoiseKind, NoiseSpec, Result, RnlmfConfig};

/// Offset between the generator seed and the corruption seed of a run.
pub const NOISE_SEED_OFFSET: u64 = 100;

/// RPCA weights tried per run, in units of `1/√n`; the best one is kept.
pub const RPCA_LAMBDA_GRID: [f64; 7] = [0.5, 0.75, 1.0, 1.5, 2.0, 2.5, 3.0];

#[derive(Debug, Clone)]
pub struct BenchConfig {
    pub data: SynthSpec,
    pub noise: NoiseKind,
    pub rho_grid: Vec<f64>,
    pub sigma_e_ratio: f64,
    pub seeds: usize,
    pub first_seed: u64,
    /// Solver settings; `seed` is replaced per run.
    pub rnlmf: RnlmfConfig,
    pub rpca_lambda_grid: Vec<f64>,
    pub rpca_max_iters: usize,
    /// Worker threads; 0 means one per available core.
    pub threads: usize,
}

impl BenchConfig {
    /// Defaults for `k` manifolds, with `d = 2mk` atoms.
    pub fn new(k: usize) -> Self {
        let data = SynthSpec { k, ..SynthSpec::default() };
        let rnlmf = RnlmfConfig::with_atoms(2 * data.m * k);
        Self {
            data,
            noise: NoiseKind::SparseGaussian,
            rho_grid: vec![0.1, 0.3, 0.5],
            sigma_e_ratio: 1.0,
            seeds: 5,
            first_seed: 0,
            rnlmf,
            rpca_lambda_grid: RPCA_LAMBDA_GRID.to_vec(),
            rpca_max_iters: 500,
            threads: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Method {
    Identity,
    Rnlmf,
    Rpca,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Identity => "identity",
            Method::Rnlmf => "rnlmf",
            Method::Rpca => "rpca",
        }
    }
}

/// RMSE of every method on one corrupted instance.
#[derive(Debug, Clone, PartialEq)]
pub struct RunResult {
    pub rho: f64,
    pub seed: u64,
    pub rnlmf: f64,
    pub rpca: f64,
    pub identity: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchRow {
    pub method: Method,
    pub rho: f64,
    pub mean: f64,
    /// Sample standard deviation over seeds.
    pub std: f64,
    pub runs: usize,
}

pub fn run_one(cfg: &BenchConfig, rho: f64, seed: u64) -> Result<RunResult> {
    let (x, _) = gen_union_polynomial(&SynthSpec { seed, ..cfg.data.clone() })?;
    let noise = NoiseSpec { kind: cfg.noise, ..NoiseSpec::sparse(rho, cfg.sigma_e_ratio, seed + NOISE_SEED_OFFSET) };
    let corrupted = noise.apply(&x)?;
    let xhat = &corrupted.xhat;
    let model = fit(xhat, &RnlmfConfig { seed, ..cfg.rnlmf.clone() })?;
    let unit = 1.0 / (xhat.ncols() as f64).sqrt();
    let mut rpca = f64::INFINITY;
    for &scale in &cfg.rpca_lambda_grid {
        let rc = RpcaConfig { lambda: Some(scale * unit), max_iters: cfg.rpca_max_iters, ..RpcaConfig::default() };
        rpca = rpca.min(rmse(&x, &rpca_admm(xhat, &rc)?.l)?);
    }
    Ok(RunResult { rho, seed, rnlmf: rmse(&x, &model.x_clean)?, rpca, identity: rmse(&x, xhat)? })
}

/// Runs every `(ρ, seed)` pair, in parallel when `threads` allows, and
/// returns the per-run results in grid order.
pub fn run_all(cfg: &BenchConfig) -> Result<Vec<RunResult>> {
    let jobs: Vec<(f64, u64)> = cfg
        .rho_grid
        .iter()
        .flat_map(|&rho| (0..cfg.seeds as u64).map(move |s| (rho, cfg.first_seed + s)))
        .collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.threads)
        .build()
        .map_err(|e| rnlmf::Error::InvalidParameter(format!("thread pool: {e}")))?;
    pool.install(|| jobs.par_iter().map(|&(rho, seed)| run_one(cfg, rho, seed)).collect())
}

/// Mean and sample standard deviation per method and `ρ`, sorted by method
/// then `ρ`.
pub fn summarize(runs: &[RunResult]) -> Vec<BenchRow> {
    let mut rhos: Vec<f64> = runs.iter().map(|r| r.rho).collect();
    rhos.sort_by(f64::total_cmp);
    rhos.dedup();
    let mut rows = Vec::new();
    for method in [Method::Identity, Method::Rnlmf, Method::Rpca] {
        for &rho in &rhos {
            let mut values: Vec<f64> = runs
                .iter()
                .filter(|r| r.rho == rho)
                .map(|r| match method {
                    Method::Identity => r.identity,
                    Method::Rnlmf => r.rnlmf,
                    Method::Rpca => r.rpca,
                })
                .collect();
            values.sort_by(f64::total_cmp);
            let n = values.len();
            let mean = values.iter().sum::<f64>() / n as f64;
            let std = if n > 1 {
                (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
            } else {
                0.0
            };
            rows.push(BenchRow { method, rho, mean, std, runs: n });
        }
    }
    rows
}

pub fn run_synthetic(cfg: &BenchConfig) -> Result<Vec<BenchRow>> {
    Ok(summarize(&run_all(cfg)?))
}

pub fn format_csv(rows: &[BenchRow]) -> String {
    let mut out = String::from("method,rho,mean_rmse,std_rmse,runs\n");
    for r in rows {
        out.push_str(&format!("{},{},{:.16e},{:.16e},{}\n", r.method.name(), r.rho, r.mean, r.std, r.runs));
    }
    out
}

pub fn format_table(rows: &[BenchRow]) -> String {
    let mut out = format!("{:<10} {:>6}  {}\n", "method", "rho", "rmse (mean ± std)");
    for r in rows {
        out.push_str(&format!("{:<10} {:>6}  {:.4} ± {:.4}\n", r.method.name(), r.rho, r.mean, r.std));
    }
    out
}
