//! The factorization objective and its exact gradients for the RBF kernel.
//!
//! With `Z = X̂ − E` the loss is
//! `L = n/2 − Tr(Cᵀ K(D, Z)) + ½ Tr(Cᵀ K(D, D) C)`,
//! where `n/2` is half the trace of `K(Z, Z)` (all RBF self-similarities are 1).

use nalgebra::DVector;

use crate::error::ensure_dims;
use crate::kernels::rbf_matrix;
use crate::linalg::{frobenius_sq, l1_norm, l21_norm, nuclear_norm};
use crate::{Error, Matrix, Result};

use super::config::{PenaltyC, PenaltyE};

/// Per-iteration scratch state of the block updates.
///
/// `w1bar`, `w2bar` and `w3bar` hold the diagonals of the corresponding
/// diagonal matrices and are always recomputed from `w1`, `w2`, `w3`.
#[derive(Debug, Clone)]
pub struct IterationWorkspace {
    /// `−Cᵀ ⊙ K(Z, D)`, n×d.
    pub w1: Matrix,
    /// Column sums of `w1`.
    pub w1bar: DVector<f64>,
    /// `½ C Cᵀ ⊙ K(D, D)`, d×d.
    pub w2: Matrix,
    /// Column sums of `w2`.
    pub w2bar: DVector<f64>,
    /// `−C ⊙ K(D, Z)`, d×n.
    pub w3: Matrix,
    /// Column sums of `w3`.
    pub w3bar: DVector<f64>,
    /// Curvature surrogate of the dictionary step, d×d.
    pub h: Matrix,
    /// Momentum buffer of the dictionary step, m×d.
    pub delta: Matrix,
    pub tau_c: f64,
    pub tau_e: f64,
    /// Shift actually applied to `h` in the last dictionary step.
    pub mu_used: f64,
}

impl IterationWorkspace {
    pub fn new(m: usize, d: usize, n: usize) -> Self {
        Self {
            w1: Matrix::zeros(n, d),
            w1bar: DVector::zeros(d),
            w2: Matrix::zeros(d, d),
            w2bar: DVector::zeros(d),
            w3: Matrix::zeros(d, n),
            w3bar: DVector::zeros(n),
            h: Matrix::zeros(d, d),
            delta: Matrix::zeros(m, d),
            tau_c: 0.0,
            tau_e: 0.0,
            mu_used: 0.0,
        }
    }
}

pub(crate) fn check_shapes(d: &Matrix, c: &Matrix, e: &Matrix, xhat: &Matrix) -> Result<()> {
    ensure_dims(d.nrows() == xhat.nrows(), || {
        format!("dictionary has {} rows, data has {}", d.nrows(), xhat.nrows())
    })?;
    ensure_dims(c.nrows() == d.ncols() && c.ncols() == xhat.ncols(), || {
        format!(
            "codes are {}×{}, expected {}×{}",
            c.nrows(),
            c.ncols(),
            d.ncols(),
            xhat.ncols()
        )
    })?;
    ensure_dims(e.shape() == xhat.shape(), || {
        format!("noise is {:?}, data is {:?}", e.shape(), xhat.shape())
    })
}

fn check_sigma(sigma: f64) -> Result<()> {
    if sigma.is_finite() && sigma > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("sigma must be positive, got {sigma}")))
    }
}

pub fn penalty_c_value(c: &Matrix, penalty: PenaltyC) -> f64 {
    match penalty {
        PenaltyC::FrobSq => 0.5 * frobenius_sq(c),
        PenaltyC::L1 => l1_norm(c),
        PenaltyC::Nuclear => nuclear_norm(c),
    }
}

pub fn penalty_e_value(e: &Matrix, penalty: PenaltyE) -> f64 {
    match penalty {
        PenaltyE::FrobSq => 0.5 * frobenius_sq(e),
        PenaltyE::L1 => l1_norm(e),
        PenaltyE::L21 => l21_norm(e),
    }
}

/// `Tr(Aᵀ B)` for equally shaped matrices.
pub(crate) fn trace_inner(a: &Matrix, b: &Matrix) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| x * y).sum()
}

/// Smooth part `L` from precomputed `K(D, Z)` (d×n) and `K(D, D)`.
pub(crate) fn loss_from_kernels(kdz: &Matrix, kdd: &Matrix, c: &Matrix) -> f64 {
    let n = c.ncols() as f64;
    let kc = kdd * c;
    0.5 * n - trace_inner(c, kdz) + 0.5 * trace_inner(c, &kc)
}

/// Penalty weights and choices entering the objective.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Penalties {
    pub lambda_c: f64,
    pub lambda_e: f64,
    pub penalty_c: PenaltyC,
    pub penalty_e: PenaltyE,
}

impl Penalties {
    pub(crate) fn value(&self, c: &Matrix, e: &Matrix) -> f64 {
        self.lambda_c * penalty_c_value(c, self.penalty_c) + self.lambda_e * penalty_e_value(e, self.penalty_e)
    }
}

pub(crate) fn objective_from_kernels(kdz: &Matrix, kdd: &Matrix, c: &Matrix, e: &Matrix, p: &Penalties) -> f64 {
    loss_from_kernels(kdz, kdd, c) + p.value(c, e)
}

/// Objective `J = L + λ_C R(C) + λ_E R(E)` of the RBF factorization model.
#[allow(clippy::too_many_arguments)]
pub fn objective(
    d: &Matrix,
    c: &Matrix,
    e: &Matrix,
    xhat: &Matrix,
    sigma: f64,
    lambda_c: f64,
    lambda_e: f64,
    penalty_c: PenaltyC,
    penalty_e: PenaltyE,
) -> Result<f64> {
    check_shapes(d, c, e, xhat)?;
    check_sigma(sigma)?;
    let z = xhat - e;
    let kdz = rbf_matrix(d, &z, sigma);
    let kdd = rbf_matrix(d, d, sigma);
    let p = Penalties { lambda_c, lambda_e, penalty_c, penalty_e };
    let j = objective_from_kernels(&kdz, &kdd, c, e, &p);
    if j.is_finite() {
        Ok(j)
    } else {
        Err(Error::NonFinite("objective".into()))
    }
}

/// Fills `w1`, `w1bar`, `w2`, `w2bar` and `h` and returns `∇_D L`.
pub(crate) fn grad_d_into(
    ws: &mut IterationWorkspace,
    d: &Matrix,
    c: &Matrix,
    z: &Matrix,
    kdz: &Matrix,
    kdd: &Matrix,
    sigma: f64,
) -> Matrix {
    let inv = 1.0 / (sigma * sigma);
    // P = C ⊙ K(D, Z); W1 = −Pᵀ.
    let p = c.component_mul(kdz);
    ws.w1 = -p.transpose();
    ws.w1bar = DVector::from_iterator(ws.w1.ncols(), ws.w1.column_iter().map(|col| col.sum()));
    ws.w2 = (c * c.transpose() * 0.5).component_mul(kdd);
    ws.w2bar = DVector::from_iterator(ws.w2.ncols(), ws.w2.column_iter().map(|col| col.sum()));

    // ∇_D L = (2/σ²)(Z W1 − D W̄1) + (4/σ²)(D W2 − D W̄2)
    let mut grad = z * &ws.w1 * (2.0 * inv);
    let mut d_w2 = d * &ws.w2;
    for (j, mut col) in d_w2.column_iter_mut().enumerate() {
        col.axpy(-ws.w2bar[j], &d.column(j), 1.0);
    }
    grad += d_w2 * (4.0 * inv);
    for (j, mut col) in grad.column_iter_mut().enumerate() {
        col.axpy(-2.0 * inv * ws.w1bar[j], &d.column(j), 1.0);
    }

    // H = (2/σ²)(−W̄1 + 2 W2 − 2 W̄2)
    let mut h = &ws.w2 * 2.0;
    for j in 0..h.ncols() {
        h[(j, j)] -= ws.w1bar[j] + 2.0 * ws.w2bar[j];
    }
    ws.h = h * (2.0 * inv);
    grad
}

/// Fills `w3`, `w3bar` and `tau_e` and returns `∇_E L`.
pub(crate) fn grad_e_into(
    ws: &mut IterationWorkspace,
    d: &Matrix,
    c: &Matrix,
    z: &Matrix,
    kdz: &Matrix,
    sigma: f64,
    xi: f64,
) -> Matrix {
    let inv = 1.0 / (sigma * sigma);
    ws.w3 = -c.component_mul(kdz);
    ws.w3bar = DVector::from_iterator(ws.w3.ncols(), ws.w3.column_iter().map(|col| col.sum()));
    // ∇_E L = (2/σ²)(Z W̄3 − D W3)
    let mut grad = d * &ws.w3 * (-2.0 * inv);
    for (j, mut col) in grad.column_iter_mut().enumerate() {
        col.axpy(2.0 * inv * ws.w3bar[j], &z.column(j), 1.0);
    }
    let max_abs = ws.w3bar.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
    ws.tau_e = 2.0 * xi * max_abs * inv;
    grad
}

/// Exact gradient of `L` with respect to `D` and the curvature surrogate `H`.
pub fn grad_d(d: &Matrix, c: &Matrix, e: &Matrix, xhat: &Matrix, sigma: f64) -> Result<(Matrix, Matrix)> {
    check_shapes(d, c, e, xhat)?;
    check_sigma(sigma)?;
    let z = xhat - e;
    let kdz = rbf_matrix(d, &z, sigma);
    let kdd = rbf_matrix(d, d, sigma);
    let mut ws = IterationWorkspace::new(d.nrows(), d.ncols(), xhat.ncols());
    let grad = grad_d_into(&mut ws, d, c, &z, &kdz, &kdd, sigma);
    Ok((grad, ws.h))
}

/// Exact gradient of `L` with respect to `E` and the step denominator
/// `τ_E = 2ξ‖1ᵀW₃‖_∞/σ²` (with `ξ = 1`).
pub fn grad_e(d: &Matrix, c: &Matrix, e: &Matrix, xhat: &Matrix, sigma: f64) -> Result<(Matrix, f64)> {
    check_shapes(d, c, e, xhat)?;
    check_sigma(sigma)?;
    let z = xhat - e;
    let kdz = rbf_matrix(d, &z, sigma);
    let mut ws = IterationWorkspace::new(d.nrows(), d.ncols(), xhat.ncols());
    let grad = grad_e_into(&mut ws, d, c, &z, &kdz, sigma, 1.0);
    Ok((grad, ws.tau_e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::seeded_rng;
    use rand_distr::{Distribution, StandardNormal};

    fn randn(rows: usize, cols: usize, seed: u64) -> Matrix {
        let mut rng = seeded_rng(seed);
        Matrix::from_fn(rows, cols, |_, _| StandardNormal.sample(&mut rng))
    }

    #[test]
    fn zero_codes_give_half_n() {
        let xhat = randn(3, 5, 1);
        let d = randn(3, 2, 2);
        let j = objective(
            &d,
            &Matrix::zeros(2, 5),
            &Matrix::zeros(3, 5),
            &xhat,
            1.3,
            0.1,
            0.1,
            PenaltyC::FrobSq,
            PenaltyE::L1,
        )
        .unwrap();
        assert_eq!(j, 2.5);
    }

    #[test]
    fn single_column_exact_fit_is_zero() {
        let x = Matrix::from_column_slice(2, 1, &[0.4, -1.0]);
        let c = Matrix::from_element(1, 1, 1.0);
        let e = Matrix::zeros(2, 1);
        let j = objective(&x, &c, &e, &x, 0.8, 0.0, 0.0, PenaltyC::FrobSq, PenaltyE::L1)
            .unwrap();
        assert!(j.abs() < 1e-15);
        let (g, _) = grad_d(&x, &c, &e, &x, 0.8).unwrap();
        assert!(g.abs().max() < 1e-15);
        let (ge, _) = grad_e(&x, &c, &e, &x, 0.8).unwrap();
        assert!(ge.abs().max() < 1e-15);
    }

    #[test]
    fn zero_codes_zero_gradients() {
        let xhat = randn(3, 4, 3);
        let d = randn(3, 2, 4);
        let c = Matrix::zeros(2, 4);
        let e = Matrix::zeros(3, 4);
        let (g, h) = grad_d(&d, &c, &e, &xhat, 1.0).unwrap();
        assert_eq!(g, Matrix::zeros(3, 2));
        assert_eq!(h, Matrix::zeros(2, 2));
        let (ge, tau) = grad_e(&d, &c, &e, &xhat, 1.0).unwrap();
        assert_eq!(ge, Matrix::zeros(3, 4));
        assert_eq!(tau, 0.0);
    }

    #[test]
    fn shape_errors() {
        let xhat = Matrix::zeros(3, 4);
        let d = Matrix::zeros(3, 2);
        let bad_c = Matrix::zeros(3, 4);
        let e = Matrix::zeros(3, 4);
        assert!(matches!(grad_d(&d, &bad_c, &e, &xhat, 1.0), Err(Error::DimensionMismatch(_))));
        assert!(grad_e(&d, &Matrix::zeros(2, 4), &e, &xhat, 0.0).is_err());
    }
}
