//! Robust PCA, `min ‖L‖_* + λ‖S‖₁ s.t. L + S = X̂`, by the inexact
//! augmented Lagrangian method.

use crate::error::ensure;
use crate::linalg::{check_finite, l1_norm, nuclear_norm, spectral_norm};
use crate::prox::{soft_threshold, svt};
use crate::{Matrix, Result};

const MU_CAP_FACTOR: f64 = 1e7;

#[derive(Debug, Clone, PartialEq)]
pub struct RpcaConfig {
    /// Weight on `‖S‖₁`; `None` means `1/√n` for `n` columns.
    pub lambda: Option<f64>,
    /// Initial penalty; `None` means `1.25/‖X̂‖₂`.
    pub mu0: Option<f64>,
    pub mu_growth: f64,
    pub max_iters: usize,
    /// Stop when `‖X̂ − L − S‖_F / ‖X̂‖_F` falls below this.
    pub tol: f64,
}

impl Default for RpcaConfig {
    fn default() -> Self {
        Self { lambda: None, mu0: None, mu_growth: 1.5, max_iters: 500, tol: 1e-7 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RpcaResult {
    pub l: Matrix,
    pub s: Matrix,
    pub iters: usize,
    pub converged: bool,
    /// Final relative residual `‖X̂ − L − S‖_F / ‖X̂‖_F`.
    pub residual: f64,
}

impl RpcaResult {
    pub fn objective(&self, lambda: f64) -> f64 {
        nuclear_norm(&self.l) + lambda * l1_norm(&self.s)
    }
}

/// Default sparse weight `1/√n`.
pub fn default_lambda(xhat: &Matrix) -> f64 {
    1.0 / (xhat.ncols().max(1) as f64).sqrt()
}

/// Splits `xhat` into a low-rank part `L` and a sparse part `S`.
///
/// When the residual does not reach `tol` within `max_iters`, the last
/// iterate is returned with `converged = false`.
pub fn rpca_admm(xhat: &Matrix, config: &RpcaConfig) -> Result<RpcaResult> {
    check_finite(xhat, "input matrix")?;
    ensure(config.mu_growth > 1.0, || format!("mu_growth must exceed 1, got {}", config.mu_growth))?;
    ensure(config.tol > 0.0 && config.max_iters >= 1, || "tol and max_iters must be positive".into())?;
    let (m, n) = xhat.shape();
    let norm_fro = xhat.norm();
    if norm_fro == 0.0 {
        return Ok(RpcaResult {
            l: Matrix::zeros(m, n),
            s: Matrix::zeros(m, n),
            iters: 0,
            converged: true,
            residual: 0.0,
        });
    }
    let lambda = config.lambda.unwrap_or_else(|| default_lambda(xhat));
    ensure(lambda > 0.0, || format!("lambda must be positive, got {lambda}"))?;
    let norm_two = spectral_norm(xhat);
    let mut mu = config.mu0.unwrap_or(1.25 / norm_two);
    ensure(mu > 0.0, || format!("mu0 must be positive, got {mu}"))?;
    let mu_cap = mu * MU_CAP_FACTOR;

    let dual_norm = norm_two.max(l1_inf_norm(xhat) / lambda);
    let mut y = xhat / dual_norm;
    let mut l = Matrix::zeros(m, n);
    let mut s = Matrix::zeros(m, n);
    let mut residual = f64::INFINITY;
    for iter in 1..=config.max_iters {
        l = svt(&(xhat - &s + &y / mu), 1.0 / mu)?;
        s = soft_threshold(&(xhat - &l + &y / mu), lambda / mu);
        let r = xhat - &l - &s;
        residual = r.norm() / norm_fro;
        if residual < config.tol {
            return Ok(RpcaResult { l, s, iters: iter, converged: true, residual });
        }
        y += r * mu;
        mu = (mu * config.mu_growth).min(mu_cap);
    }
    Ok(RpcaResult { l, s, iters: config.max_iters, converged: false, residual })
}

fn l1_inf_norm(x: &Matrix) -> f64 {
    x.iter().fold(0.0f64, |acc, v| acc.max(v.abs()))
}
