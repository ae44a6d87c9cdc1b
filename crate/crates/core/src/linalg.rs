//! Small dense linear-algebra helpers shared across the solvers.

use nalgebra::{DVector, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::{Error, Matrix, Result};

/// Deterministic generator used everywhere a seed is accepted.
pub fn seeded_rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn frobenius_sq(m: &Matrix) -> f64 {
    m.iter().map(|v| v * v).sum()
}

pub fn l1_norm(m: &Matrix) -> f64 {
    m.iter().map(|v| v.abs()).sum()
}

/// Sum of column Euclidean norms.
pub fn l21_norm(m: &Matrix) -> f64 {
    m.column_iter().map(|c| c.norm()).sum()
}

pub fn nuclear_norm(m: &Matrix) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    m.singular_values().iter().sum()
}

/// Largest singular value of `m`.
pub fn spectral_norm(m: &Matrix) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    m.singular_values().iter().cloned().fold(0.0, f64::max)
}

/// Power-iteration estimate of the spectral norm of a symmetric matrix.
///
/// The start vector is drawn from `seed`; the returned value is the absolute
/// Rayleigh quotient after `iters` multiplications.
pub fn power_iteration_sym(m: &Matrix, iters: usize, seed: u64) -> f64 {
    let n = m.nrows();
    if n == 0 {
        return 0.0;
    }
    let mut rng = seeded_rng(seed);
    let mut v = DVector::from_fn(n, |_, _| rng.random::<f64>() + 0.5);
    v /= v.norm();
    for _ in 0..iters {
        let w = m * &v;
        let norm = w.norm();
        if norm == 0.0 {
            return 0.0;
        }
        v = w / norm;
    }
    v.dot(&(m * &v)).abs()
}

/// Eigenvalues of a symmetric matrix in ascending order.
pub fn sym_eigenvalues(m: &Matrix) -> Vec<f64> {
    let mut vals: Vec<f64> = SymmetricEigen::new(m.clone()).eigenvalues.iter().cloned().collect();
    vals.sort_by(|a, b| a.total_cmp(b));
    vals
}

pub fn sym_min_eigenvalue(m: &Matrix) -> f64 {
    sym_eigenvalues(m).first().cloned().unwrap_or(0.0)
}

/// `(m + mᵀ) / 2`.
pub fn symmetrize(m: &Matrix) -> Matrix {
    (m + m.transpose()) * 0.5
}

pub fn check_finite(m: &Matrix, what: &str) -> Result<()> {
    if m.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite(what.to_string()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn power_iteration_matches_eigen() {
        let mut rng = seeded_rng(3);
        let a = Matrix::from_fn(8, 5, |_, _| rng.random::<f64>() - 0.5);
        let k = &a * a.transpose();
        let exact = *sym_eigenvalues(&k).last().unwrap();
        let est = power_iteration_sym(&k, 200, 1);
        assert!((est - exact).abs() < 1e-8 * exact);
    }

    #[test]
    fn norms_on_small_matrix() {
        let m = Matrix::from_row_slice(2, 2, &[3.0, 0.0, 4.0, -1.0]);
        assert_eq!(l1_norm(&m), 8.0);
        assert_eq!(frobenius_sq(&m), 26.0);
        assert!((l21_norm(&m) - (5.0 + 1.0)).abs() < 1e-15);
    }
}
