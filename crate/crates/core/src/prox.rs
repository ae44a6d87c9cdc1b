//! Closed-form proximal operators and the ridge solve used by the block updates.

use nalgebra::Cholesky;

use crate::error::{ensure, ensure_dims};
use crate::{Error, Matrix, Result};

/// Scalar soft thresholding `sign(v)·max(|v| − u, 0)`; zero maps to zero.
#[inline]
pub fn soft_threshold_scalar(v: f64, u: f64) -> f64 {
    if v > u {
        v - u
    } else if v < -u {
        v + u
    } else {
        0.0
    }
}

/// Entrywise soft thresholding, the prox of `u‖·‖₁`.
pub fn soft_threshold(m: &Matrix, u: f64) -> Matrix {
    m.map(|v| soft_threshold_scalar(v, u))
}

/// Singular value thresholding, the prox of `u‖·‖_*`.
pub fn svt(m: &Matrix, u: f64) -> Result<Matrix> {
    if m.is_empty() {
        return Ok(m.clone());
    }
    let svd = m.clone().svd(true, true);
    let (Some(left), Some(right_t)) = (svd.u, svd.v_t) else {
        return Err(Error::Numeric("SVD did not return singular vectors".into()));
    };
    if svd.singular_values.iter().any(|s| !s.is_finite()) {
        return Err(Error::NonFinite("singular values".into()));
    }
    let shrunk = svd.singular_values.map(|s| soft_threshold_scalar(s, u));
    let mut scaled = left;
    for (j, s) in shrunk.iter().enumerate() {
        scaled.column_mut(j).scale_mut(*s);
    }
    Ok(scaled * right_t)
}

/// Column-wise shrinkage, the prox of `u‖·‖₂,₁`.
pub fn column_soft_threshold(m: &Matrix, u: f64) -> Matrix {
    let mut out = m.clone();
    for mut col in out.column_iter_mut() {
        let norm = col.norm();
        if norm > u {
            col.scale_mut((norm - u) / norm);
        } else {
            col.fill(0.0);
        }
    }
    out
}

/// Cholesky factor of `K + λI`, reusable across right-hand sides.
#[derive(Debug, Clone)]
pub struct RidgeFactor {
    chol: Cholesky<f64, nalgebra::Dyn>,
}

impl RidgeFactor {
    pub fn new(k: &Matrix, lambda: f64) -> Result<Self> {
        ensure_dims(k.is_square(), || format!("ridge matrix is {}×{}", k.nrows(), k.ncols()))?;
        ensure(lambda > 0.0 && lambda.is_finite(), || {
            format!("ridge penalty must be positive, got {lambda}")
        })?;
        let mut shifted = k.clone();
        for i in 0..shifted.nrows() {
            shifted[(i, i)] += lambda;
        }
        let chol = Cholesky::new(shifted)
            .ok_or_else(|| Error::Numeric("K + λI is not positive definite".into()))?;
        Ok(Self { chol })
    }

    pub fn solve(&self, b: &Matrix) -> Result<Matrix> {
        ensure_dims(b.nrows() == self.chol.l_dirty().nrows(), || {
            format!("right-hand side has {} rows, system has {}", b.nrows(), self.chol.l_dirty().nrows())
        })?;
        Ok(self.chol.solve(b))
    }
}

/// Solves `(K + λI) C = B` for symmetric PSD `K` and `λ > 0`.
pub fn ridge_solve(k: &Matrix, b: &Matrix, lambda: f64) -> Result<Matrix> {
    RidgeFactor::new(k, lambda)?.solve(b)
}
