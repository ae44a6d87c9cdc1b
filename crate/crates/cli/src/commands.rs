use std::fmt::Write as _;
use std::path::Path;

use rnlmf::clustering::{cluster, clustering_error, ClusteringConfig};
use rnlmf::datagen::{gen_union_polynomial, mae, rmse, Corrupted, SynthSpec};
use rnlmf::rnlmf::{fit, transform};
use rnlmf::rpca::{default_lambda, rpca_admm, RpcaConfig};
use rnlmf::{Matrix, NoiseKind, NoiseSpec, RnlmfConfig};

use crate::bench::{self, BenchConfig};
use crate::io::{read_labels, read_matrix, write_labels, write_matrix, write_text};
use crate::{BenchCommand, CliError, Command, NoiseArg};

type CmdResult = Result<(), CliError>;

pub(crate) fn execute(command: Command) -> CmdResult {
    match command {
        Command::Synth(a) => synth(a),
        Command::Denoise(a) => denoise(a),
        Command::Ose(a) => ose(a),
        Command::Cluster(a) => cluster_cmd(a),
        Command::Rpca(a) => rpca(a),
        Command::Bench(BenchCommand::Synthetic(a)) => bench_synthetic(a),
    }
}

/// Key-value summary written as `key: value` lines in insertion order.
#[derive(Default)]
struct Metrics(String);

impl Metrics {
    fn add(&mut self, key: &str, value: impl std::fmt::Display) -> &mut Self {
        let _ = writeln!(self.0, "{key}: {value}");
        self
    }

    fn add_errors(&mut self, truth: Option<&Matrix>, est: &Matrix) -> Result<&mut Self, CliError> {
        if let Some(x) = truth {
            self.add("rmse", rmse(x, est)?);
            self.add("mae", mae(x, est)?);
        }
        Ok(self)
    }

    fn write(&self, dir: &Path) -> CmdResult {
        write_text(&dir.join("metrics.txt"), &self.0)
    }
}

fn out_dir(dir: &Path) -> CmdResult {
    std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))
}

fn read_truth(path: Option<&Path>) -> Result<Option<Matrix>, CliError> {
    path.map(read_matrix).transpose()
}

fn data_spec(a: &crate::DataArgs, seed: u64, shuffle: bool) -> SynthSpec {
    SynthSpec { k: a.k, r: a.r, p: a.p, m: a.m, samples_per_manifold: a.samples, shuffle, seed }
}

fn noise_kind(arg: NoiseArg) -> NoiseKind {
    match arg {
        NoiseArg::Sparse => NoiseKind::SparseGaussian,
        NoiseArg::Column => NoiseKind::ColumnGaussian,
        NoiseArg::Saltpepper => NoiseKind::SaltPepper,
        NoiseArg::Occlusion | NoiseArg::SaltpepperOcclusion => NoiseKind::BlockOcclusion,
    }
}

fn synth(a: crate::SynthArgs) -> CmdResult {
    let (x, labels) = gen_union_polynomial(&data_spec(&a.data, a.seed, a.shuffle))?;
    let spec = |kind, seed| NoiseSpec {
        kind,
        rho: a.rho,
        sigma_e_ratio: a.sigma_e_ratio,
        density: a.density,
        image_h: a.image_h,
        image_w: a.image_w,
        seed,
    };
    let noise_seed = a.seed + bench::NOISE_SEED_OFFSET;
    let corrupted = if a.noise == NoiseArg::SaltpepperOcclusion {
        let first = spec(NoiseKind::SaltPepper, noise_seed).apply(&x)?;
        let second = spec(NoiseKind::BlockOcclusion, noise_seed + 1).apply(&first.xhat)?;
        Corrupted { noise: &second.xhat - &x, mask: first.mask.zip_map(&second.mask, |p, q| p || q), xhat: second.xhat }
    } else {
        spec(noise_kind(a.noise), noise_seed).apply(&x)?
    };
    out_dir(&a.out_dir)?;
    write_matrix(&a.out_dir.join("X.csv"), &x)?;
    write_matrix(&a.out_dir.join("Xhat.csv"), &corrupted.xhat)?;
    write_matrix(&a.out_dir.join("E.csv"), &corrupted.noise)?;
    write_labels(&a.out_dir.join("labels.csv"), &labels)
}

fn denoise(a: crate::DenoiseArgs) -> CmdResult {
    let xhat = read_matrix(&a.input)?;
    let truth = read_truth(a.truth.as_deref())?;
    let cfg = a.solver.to_config(RnlmfConfig::default().d);
    let model = fit(&xhat, &cfg)?;
    out_dir(&a.out_dir)?;
    let dir = &a.out_dir;
    write_matrix(&dir.join("Xclean.csv"), &model.x_clean)?;
    write_matrix(&dir.join("D.csv"), &model.d)?;
    write_matrix(&dir.join("C.csv"), &model.c)?;
    write_matrix(&dir.join("E.csv"), &model.e)?;

    let trace = &model.trace;
    let mut csv = String::new();
    for (t, (j, (dc, dd, de))) in trace.objective.iter().zip(&trace.step_diffs).enumerate() {
        let _ = writeln!(csv, "{},{j:.16e},{dc:.16e},{dd:.16e},{de:.16e}", t + 1);
    }
    write_text(&dir.join("trace.csv"), &csv)?;

    let mut m = Metrics::default();
    m.add("rows", xhat.nrows()).add("cols", xhat.ncols()).add("atoms", cfg.d).add("sigma", model.sigma);
    m.add("iterations", trace.iterations_run).add("converged", trace.converged);
    m.add("objective", trace.objective.last().copied().unwrap_or(f64::NAN));
    m.add("rejected_steps", trace.rejected_steps);
    m.add_errors(truth.as_ref(), &model.x_clean)?;
    if let Some(x) = &truth {
        m.add("input_rmse", rmse(x, &xhat)?);
    }
    m.write(dir)
}

fn ose(a: crate::OseArgs) -> CmdResult {
    let xhat = read_matrix(&a.input)?;
    let dict = read_matrix(&a.dict)?;
    let truth = read_truth(a.truth.as_deref())?;
    let cfg = RnlmfConfig {
        d: dict.ncols(),
        lambda_c: a.lambda_c,
        lambda_e: a.lambda_e,
        penalty_c: a.penalty_c,
        penalty_e: a.penalty_e,
        tol: a.tol,
        ..RnlmfConfig::default()
    };
    let out = transform(&xhat, &dict, a.sigma, &cfg, a.max_iters)?;
    out_dir(&a.out_dir)?;
    write_matrix(&a.out_dir.join("Xclean.csv"), &out.x_clean)?;
    write_matrix(&a.out_dir.join("C.csv"), &out.c)?;
    write_matrix(&a.out_dir.join("E.csv"), &out.e)?;
    let mut m = Metrics::default();
    m.add("iterations", out.iterations).add("converged", out.converged);
    m.add_errors(truth.as_ref(), &out.x_clean)?;
    m.write(&a.out_dir)
}

fn cluster_cmd(a: crate::ClusterArgs) -> CmdResult {
    let xhat = read_matrix(&a.input)?;
    let truth = a.truth.as_deref().map(read_labels).transpose()?;
    if let Some(t) = &truth {
        if t.len() != xhat.ncols() {
            return Err(CliError::Usage(format!("{} labels for {} columns", t.len(), xhat.ncols())));
        }
    }
    let rc = a.solver.to_config(2 * xhat.nrows() * a.k);
    let cc = ClusteringConfig { k: a.k, kappa: a.kappa, gamma: a.gamma, kmeans_restarts: a.kmeans_restarts, seed: rc.seed };
    let (res, model) = cluster(&xhat, &rc, &cc)?;
    out_dir(&a.out_dir)?;
    write_labels(&a.out_dir.join("labels.csv"), &res.labels)?;
    let n = res.affinity.ncols();
    let nonzeros = res.affinity.iter().filter(|v| **v != 0.0).count();
    let isolated = res.affinity.column_iter().filter(|c| c.iter().all(|v| *v == 0.0)).count();
    let mut m = Metrics::default();
    m.add("columns", n).add("affinity_nonzeros", nonzeros);
    m.add("mean_degree", nonzeros as f64 / n as f64).add("isolated_columns", isolated);
    m.add("sigma", model.sigma).add("iterations", model.trace.iterations_run);
    if let Some(t) = &truth {
        m.add("clustering_error", clustering_error(&res.labels, t, a.k)?);
    }
    m.write(&a.out_dir)
}

fn rpca(a: crate::RpcaArgs) -> CmdResult {
    let xhat = read_matrix(&a.input)?;
    let truth = read_truth(a.truth.as_deref())?;
    let lambda = a.lambda.unwrap_or_else(|| default_lambda(&xhat));
    let cfg = RpcaConfig { lambda: Some(lambda), mu0: a.mu0, mu_growth: a.mu_growth, max_iters: a.max_iters, tol: a.tol };
    let res = rpca_admm(&xhat, &cfg)?;
    out_dir(&a.out_dir)?;
    write_matrix(&a.out_dir.join("L.csv"), &res.l)?;
    write_matrix(&a.out_dir.join("S.csv"), &res.s)?;
    let mut m = Metrics::default();
    m.add("lambda", lambda).add("iterations", res.iters).add("converged", res.converged);
    m.add("residual", res.residual).add("objective", res.objective(lambda));
    m.add_errors(truth.as_ref(), &res.l)?;
    m.write(&a.out_dir)
}

/// Worker count from `RNLMF_THREADS`, capped by the available cores.
fn thread_cap() -> Result<usize, CliError> {
    let cores = std::thread::available_parallelism().map_or(1, |n| n.get());
    match std::env::var("RNLMF_THREADS") {
        Ok(v) => {
            let n: usize = v
                .trim()
                .parse()
                .ok()
                .filter(|n| *n > 0)
                .ok_or_else(|| CliError::Usage(format!("RNLMF_THREADS must be a positive integer, got {v:?}")))?;
            Ok(n.min(cores))
        }
        Err(_) => Ok(cores),
    }
}

fn bench_synthetic(a: crate::BenchArgs) -> CmdResult {
    if !matches!(a.noise, NoiseArg::Sparse | NoiseArg::Column) {
        return Err(CliError::Usage(format!("bench supports sparse and column noise, not {:?}", a.noise)));
    }
    let noise = noise_kind(a.noise);
    let data = data_spec(&a.data, 0, false);
    let cfg = BenchConfig {
        rnlmf: a.solver.to_config(2 * data.m * data.k),
        data,
        noise,
        rho_grid: a.rho_grid,
        sigma_e_ratio: a.sigma_e_ratio,
        seeds: a.seeds,
        first_seed: a.first_seed,
        rpca_lambda_grid: a.rpca_lambda_grid,
        rpca_max_iters: a.rpca_max_iters,
        threads: thread_cap()?,
    };
    if cfg.seeds == 0 || cfg.rho_grid.is_empty() || cfg.rpca_lambda_grid.is_empty() {
        return Err(CliError::Usage("need at least one seed, one rho and one RPCA weight".into()));
    }
    let rows = bench::run_synthetic(&cfg)?;
    print!("{}", bench::format_table(&rows));
    if let Some(path) = &a.out {
        write_text(path, &bench::format_csv(&rows))?;
    }
    Ok(())
}
