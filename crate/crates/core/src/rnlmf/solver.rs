use rand_distr::{Distribution, StandardNormal};

use crate::error::{ensure, ensure_dims};
use crate::kernels::{rbf_matrix, sigma_heuristic_seeded};
use crate::linalg::{check_finite, seeded_rng};
use crate::prox::RidgeFactor;
use crate::{Error, Matrix, Result};

use super::config::{PenaltyC, RnlmfConfig};
use super::objective::{grad_d_into, grad_e_into, objective_from_kernels, IterationWorkspace, Penalties};
use super::updates::{update_c_with_kernels, update_d, update_e};

const MAX_STEP_RETRIES: usize = 10;

/// Per-iteration record of a fit.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct FitTrace {
    /// Objective after each full iteration.
    pub objective: Vec<f64>,
    /// Objective after the code, dictionary and noise updates of each iteration.
    pub block_objectives: Vec<[f64; 3]>,
    /// `(‖ΔC‖_F, ‖ΔD‖_F, ‖ΔE‖_F)` per iteration.
    pub step_diffs: Vec<(f64, f64, f64)>,
    pub iterations_run: usize,
    pub converged: bool,
    /// Block steps discarded because every retry raised the objective
    /// (only in strict descent mode).
    pub rejected_steps: usize,
}

/// A fitted factorization.
#[derive(Debug, Clone, PartialEq)]
pub struct RnlmfModel {
    /// Dictionary, m×d.
    pub d: Matrix,
    /// Codes, d×n.
    pub c: Matrix,
    /// Estimated noise, m×n.
    pub e: Matrix,
    /// `X̂ − E`.
    pub x_clean: Matrix,
    /// RBF width used throughout the fit.
    pub sigma: f64,
    pub config: RnlmfConfig,
    pub trace: FitTrace,
}

/// Result of denoising new columns against a frozen dictionary.
#[derive(Debug, Clone, PartialEq)]
pub struct Transformed {
    pub x_clean: Matrix,
    pub c: Matrix,
    pub e: Matrix,
    pub iterations: usize,
    pub converged: bool,
}

fn relative_change(prev: f64, cur: f64) -> f64 {
    (cur - prev).abs() / (1.0 + prev.abs())
}

fn descent_slack(j: f64) -> f64 {
    1e-10 * (1.0 + j.abs())
}

fn diverged(iteration: usize, trace: &FitTrace) -> Error {
    Error::NonFinite(format!(
        "objective diverged at iteration {iteration}; last finite objectives: {:?}",
        trace.objective.iter().rev().take(5).collect::<Vec<_>>()
    ))
}

/// Kernel matrices for the current `(D, Z)` pair.
struct Kernels {
    kdz: Matrix,
    kdd: Matrix,
}

impl Kernels {
    fn new(d: &Matrix, z: &Matrix, sigma: f64) -> Self {
        Self { kdz: rbf_matrix(d, z, sigma), kdd: rbf_matrix(d, d, sigma) }
    }
}

/// Fits dictionary, codes and noise to `xhat` by alternating block updates.
///
/// `E` and `C` start at zero and `D` at i.i.d. standard normal entries drawn
/// from `config.seed`. Each iteration updates `C`, then `D` (relaxed Newton
/// step with momentum), then `E` (proximal gradient step). The RBF width is
/// `config.sigma` or, if unset, the mean pairwise column distance of `xhat`
/// times `config.sigma_scale`.
pub fn fit(xhat: &Matrix, config: &RnlmfConfig) -> Result<RnlmfModel> {
    config.validate()?;
    let (m, n) = xhat.shape();
    ensure(m >= 1 && n >= 1, || "empty data matrix".into())?;
    ensure(n >= config.d, || format!("need at least d = {} columns, got {n}", config.d))?;
    check_finite(xhat, "input data")?;

    let sigma = match config.sigma {
        Some(s) => s,
        None => sigma_heuristic_seeded(xhat, config.sigma_scale, config.seed)?,
    };
    let mut rng = seeded_rng(config.seed);
    let mut d = Matrix::from_fn(m, config.d, |_, _| StandardNormal.sample(&mut rng));
    let mut c = Matrix::zeros(config.d, n);
    let mut e = Matrix::zeros(m, n);
    let mut z = xhat.clone();
    let mut ws = IterationWorkspace::new(m, config.d, n);
    let mut trace = FitTrace::default();

    let mut kernels = Kernels::new(&d, &z, sigma);
    let penalties_at = |t: usize| Penalties {
        lambda_c: config.lambda_c,
        lambda_e: config.lambda_e,
        penalty_c: config.penalty_c_at(t),
        penalty_e: config.penalty_e,
    };
    let mut j_prev = objective_from_kernels(&kernels.kdz, &kernels.kdd, &c, &e, &penalties_at(1));

    for t in 1..=config.max_iters {
        let pen = penalties_at(t);
        let j_start = objective_from_kernels(&kernels.kdz, &kernels.kdd, &c, &e, &pen);

        // Codes.
        let c_new = update_c_with_kernels(
            &mut ws,
            &kernels.kdz,
            &kernels.kdd,
            config.lambda_c,
            pen.penalty_c,
            &c,
            config.seed.wrapping_add(t as u64),
        )?;
        let mut j_c = objective_from_kernels(&kernels.kdz, &kernels.kdd, &c_new, &e, &pen);
        let mut dc = (&c_new - &c).norm();
        if config.strict_descent && (j_c.is_nan() || j_c > j_start + descent_slack(j_start)) {
            trace.rejected_steps += 1;
            j_c = j_start;
            dc = 0.0;
        } else {
            c = c_new;
        }

        // Dictionary.
        let grad = grad_d_into(&mut ws, &d, &c, &z, &kernels.kdz, &kernels.kdd, sigma);
        let h = ws.h.clone();
        let delta_prev = ws.delta.clone();
        let mut tau_d = config.tau_d;
        let mut accepted = None;
        for attempt in 0..=MAX_STEP_RETRIES {
            if attempt > 0 {
                tau_d *= 2.0;
                ws.delta.fill(0.0);
            }
            let d_new = match update_d(&mut ws, &d, &grad, &h, config, tau_d) {
                Ok(d_new) => d_new,
                Err(err) if config.strict_descent && err.is_numeric() => continue,
                Err(err) => return Err(err),
            };
            let k_new = Kernels::new(&d_new, &z, sigma);
            let j_d = objective_from_kernels(&k_new.kdz, &k_new.kdd, &c, &e, &pen);
            if !config.strict_descent {
                if !j_d.is_finite() {
                    return Err(diverged(t, &trace));
                }
                accepted = Some((d_new, k_new, j_d));
                break;
            }
            if j_d.is_finite() && j_d <= j_c + descent_slack(j_c) {
                accepted = Some((d_new, k_new, j_d));
                break;
            }
        }
        let (dd, j_d) = match accepted {
            Some((d_new, k_new, j_d)) => {
                let dd = (&d_new - &d).norm();
                d = d_new;
                kernels = k_new;
                (dd, j_d)
            }
            None => {
                trace.rejected_steps += 1;
                ws.delta = delta_prev.map(|_| 0.0);
                (0.0, j_c)
            }
        };

        // Noise.
        let grad_e = grad_e_into(&mut ws, &d, &c, &z, &kernels.kdz, sigma, config.xi);
        let mut de = 0.0;
        let mut j_e = j_d;
        if ws.tau_e > 0.0 {
            let mut tau_e = ws.tau_e;
            for attempt in 0..=MAX_STEP_RETRIES {
                if attempt > 0 {
                    tau_e *= 2.0;
                }
                let e_new = update_e(&e, &grad_e, tau_e, config.lambda_e, config.penalty_e)?;
                let z_new = xhat - &e_new;
                let kdz_new = rbf_matrix(&d, &z_new, sigma);
                let j_new = objective_from_kernels(&kdz_new, &kernels.kdd, &c, &e_new, &pen);
                let ok = if config.strict_descent {
                    j_new.is_finite() && j_new <= j_d + descent_slack(j_d)
                } else {
                    j_new.is_finite()
                };
                if ok {
                    de = (&e_new - &e).norm();
                    e = e_new;
                    z = z_new;
                    kernels.kdz = kdz_new;
                    j_e = j_new;
                    break;
                }
                if !config.strict_descent {
                    return Err(diverged(t, &trace));
                }
                if attempt == MAX_STEP_RETRIES {
                    trace.rejected_steps += 1;
                }
            }
            ws.tau_e = tau_e;
        }

        trace.objective.push(j_e);
        trace.block_objectives.push([j_c, j_d, j_e]);
        trace.step_diffs.push((dc, dd, de));
        trace.iterations_run = t;
        check_finite(&d, "dictionary")?;

        if relative_change(j_prev, j_e) < config.tol {
            trace.converged = true;
            break;
        }
        j_prev = j_e;
    }

    let x_clean = xhat - &e;
    Ok(RnlmfModel { d, c, e, x_clean, sigma, config: config.clone(), trace })
}

/// Denoises new columns with a frozen dictionary by alternating code and
/// noise updates, starting from zero codes and zero noise.
///
/// The penalties, `ξ` and the stopping tolerance are taken from `config`;
/// its `d`, `eta`, `tau_d` and `mu` fields are not used.
pub fn transform(
    xhat_new: &Matrix,
    dictionary: &Matrix,
    sigma: f64,
    config: &RnlmfConfig,
    max_iters: usize,
) -> Result<Transformed> {
    ensure_dims(xhat_new.nrows() == dictionary.nrows(), || {
        format!("new data has {} rows, dictionary has {}", xhat_new.nrows(), dictionary.nrows())
    })?;
    ensure(sigma > 0.0 && sigma.is_finite(), || format!("sigma must be positive, got {sigma}"))?;
    ensure(max_iters >= 1, || "max_iters must be at least 1".into())?;
    check_finite(xhat_new, "input data")?;
    check_finite(dictionary, "dictionary")?;
    let cfg = RnlmfConfig { d: dictionary.ncols(), ..config.clone() };
    cfg.validate()?;

    let (m, n) = xhat_new.shape();
    let atoms = dictionary.ncols();
    let mut ws = IterationWorkspace::new(m, atoms, n);
    let mut c = Matrix::zeros(atoms, n);
    let mut e = Matrix::zeros(m, n);
    let mut z = xhat_new.clone();
    let kdd = rbf_matrix(dictionary, dictionary, sigma);
    let ridge = RidgeFactor::new(&kdd, cfg.lambda_c)?;
    let mut kdz = rbf_matrix(dictionary, &z, sigma);
    let pen = Penalties {
        lambda_c: cfg.lambda_c,
        lambda_e: cfg.lambda_e,
        penalty_c: cfg.penalty_c,
        penalty_e: cfg.penalty_e,
    };
    let mut j_prev = objective_from_kernels(&kdz, &kdd, &c, &e, &pen);
    let mut iterations = 0;
    let mut converged = false;

    for t in 1..=max_iters {
        let penalty_c = cfg.penalty_c_at(t);
        c = match penalty_c {
            PenaltyC::FrobSq => ridge.solve(&kdz)?,
            _ => update_c_with_kernels(&mut ws, &kdz, &kdd, cfg.lambda_c, penalty_c, &c, cfg.seed.wrapping_add(t as u64))?,
        };
        let grad_e = grad_e_into(&mut ws, dictionary, &c, &z, &kdz, sigma, cfg.xi);
        if ws.tau_e > 0.0 {
            e = update_e(&e, &grad_e, ws.tau_e, cfg.lambda_e, cfg.penalty_e)?;
            z = xhat_new - &e;
            kdz = rbf_matrix(dictionary, &z, sigma);
        }
        let j = objective_from_kernels(&kdz, &kdd, &c, &e, &pen);
        if !j.is_finite() {
            return Err(Error::NonFinite(format!("objective diverged at iteration {t}")));
        }
        iterations = t;
        if relative_change(j_prev, j) < cfg.tol {
            converged = true;
            break;
        }
        j_prev = j;
    }

    Ok(Transformed { x_clean: xhat_new - &e, c, e, iterations, converged })
}

impl RnlmfModel {
    /// Out-of-sample denoising with this model's dictionary, width and penalties.
    pub fn transform(&self, xhat_new: &Matrix, max_iters: usize) -> Result<Transformed> {
        transform(xhat_new, &self.d, self.sigma, &self.config, max_iters)
    }
}
