//! The three block updates: codes `C`, dictionary `D` and noise `E`.

use nalgebra::Cholesky;

use crate::error::ensure;
use crate::kernels::rbf_matrix;
use crate::linalg::{check_finite, power_iteration_sym, sym_min_eigenvalue};
use crate::prox::{column_soft_threshold, ridge_solve, soft_threshold, svt};
use crate::{Error, Matrix, Result};

use super::config::{PenaltyC, PenaltyE, RnlmfConfig};
use super::objective::{check_shapes, IterationWorkspace};

const POWER_ITERS: usize = 50;
const TAU_C_MARGIN: f64 = 1.01;

/// Code update from precomputed `K(D, Z)` and `K(D, D)`.
pub(crate) fn update_c_with_kernels(
    ws: &mut IterationWorkspace,
    kdz: &Matrix,
    kdd: &Matrix,
    lambda_c: f64,
    penalty: PenaltyC,
    c_prev: &Matrix,
    seed: u64,
) -> Result<Matrix> {
    match penalty {
        PenaltyC::FrobSq => ridge_solve(kdd, kdz, lambda_c),
        PenaltyC::L1 | PenaltyC::Nuclear => {
            let tau = TAU_C_MARGIN * power_iteration_sym(kdd, POWER_ITERS, seed);
            ws.tau_c = tau;
            debug_assert!(
                tau > crate::linalg::sym_eigenvalues(kdd).last().cloned().unwrap_or(0.0),
                "tau_C must exceed the spectral norm of K(D,D)"
            );
            if tau <= 0.0 {
                return Err(Error::Numeric("K(D,D) has zero spectral norm".into()));
            }
            // ∇_C L = −K(D,Z) + K(D,D) C_prev
            let grad = kdd * c_prev - kdz;
            let point = c_prev - grad / tau;
            match penalty {
                PenaltyC::L1 => Ok(soft_threshold(&point, lambda_c / tau)),
                _ => svt(&point, lambda_c / tau),
            }
        }
    }
}

/// Updates the codes with `D` and `E` held fixed.
#[allow(clippy::too_many_arguments)]
pub fn update_c(
    ws: &mut IterationWorkspace,
    d: &Matrix,
    e: &Matrix,
    xhat: &Matrix,
    sigma: f64,
    lambda_c: f64,
    penalty: PenaltyC,
    c_prev: &Matrix,
) -> Result<Matrix> {
    check_shapes(d, c_prev, e, xhat)?;
    ensure(sigma > 0.0, || format!("sigma must be positive, got {sigma}"))?;
    let z = xhat - e;
    let kdz = rbf_matrix(d, &z, sigma);
    let kdd = rbf_matrix(d, d, sigma);
    update_c_with_kernels(ws, &kdz, &kdd, lambda_c, penalty, c_prev, 0)
}

/// Relaxed Newton step on the dictionary with momentum.
///
/// `Δ ← η Δ + (1/τ_D) ∇ (H + μI)⁻¹` and `D ← D − Δ`; with
/// `use_scaled_d_step` the solve is replaced by division by `‖H‖₂`. When
/// `H + μI` is not positive definite the shift is raised to `|λ_min| + 1e-8`
/// for this step. The workspace momentum buffer is replaced by the new `Δ`.
pub fn update_d(
    ws: &mut IterationWorkspace,
    d_prev: &Matrix,
    gradient: &Matrix,
    h: &Matrix,
    config: &RnlmfConfig,
    tau_d: f64,
) -> Result<Matrix> {
    ensure(gradient.shape() == d_prev.shape() && ws.delta.shape() == d_prev.shape(), || {
        "gradient, momentum and dictionary shapes differ".into()
    })?;
    let step = if config.use_scaled_d_step {
        let norm = power_iteration_sym(h, POWER_ITERS, config.seed);
        ws.mu_used = 0.0;
        if norm > 0.0 {
            gradient / (tau_d * norm)
        } else {
            Matrix::zeros(gradient.nrows(), gradient.ncols())
        }
    } else {
        let (chol, mu) = factor_shifted(h, config.mu)?;
        ws.mu_used = mu;
        chol.solve(&gradient.transpose()).transpose() / tau_d
    };
    let delta = &ws.delta * config.eta + step;
    check_finite(&delta, "dictionary step")?;
    let d_new = d_prev - &delta;
    ws.delta = delta;
    Ok(d_new)
}

fn factor_shifted(h: &Matrix, mu: f64) -> Result<(Cholesky<f64, nalgebra::Dyn>, f64)> {
    let shifted = |shift: f64| {
        let mut m = (h + h.transpose()) * 0.5;
        for i in 0..m.nrows() {
            m[(i, i)] += shift;
        }
        m
    };
    if let Some(chol) = Cholesky::new(shifted(mu)) {
        return Ok((chol, mu));
    }
    let lambda_min = sym_min_eigenvalue(&shifted(0.0));
    let raised = lambda_min.abs() + 1e-8;
    let mu = mu.max(raised);
    Cholesky::new(shifted(mu))
        .map(|c| (c, mu))
        .ok_or_else(|| Error::Numeric("could not make the dictionary preconditioner positive definite".into()))
}

/// Proximal gradient step on the noise: `G = E − ∇/τ_E` followed by the
/// prox of `λ_E R(E) / τ_E`.
pub fn update_e(
    e_prev: &Matrix,
    gradient: &Matrix,
    tau_e: f64,
    lambda_e: f64,
    penalty: PenaltyE,
) -> Result<Matrix> {
    if !(tau_e > 0.0 && tau_e.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "noise step needs a positive tau_E, got {tau_e}; skip the update"
        )));
    }
    ensure(e_prev.shape() == gradient.shape(), || "noise and gradient shapes differ".into())?;
    let g = e_prev - gradient / tau_e;
    Ok(match penalty {
        PenaltyE::FrobSq => g * (tau_e / (tau_e + lambda_e)),
        PenaltyE::L1 => soft_threshold(&g, lambda_e / tau_e),
        PenaltyE::L21 => column_soft_threshold(&g, lambda_e / tau_e),
    })
}
