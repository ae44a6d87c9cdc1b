//! Kernel evaluations and kernel-trick quantities.
//!
//! The RBF kernel is `K(x, y) = exp(-‖x − y‖² / σ²)` and the polynomial
//! kernel is `K(x, y) = (xᵀy + c)^q`. Kernel matrices are indexed by columns:
//! entry `(i, j)` of `kernel_matrix(A, B)` compares column `i` of `A` with
//! column `j` of `B`.

use nalgebra::SymmetricEigen;
use rand::Rng;

use crate::error::{ensure, ensure_dims};
use crate::linalg::seeded_rng;
use crate::{Error, Matrix, Result};

/// Above this many ordered pairs the width heuristic is estimated by sampling.
const EXACT_PAIR_LIMIT: usize = 10_000_000;
const SAMPLED_PAIRS: usize = 1_000_000;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum KernelSpec {
    /// Gaussian RBF with width `sigma` in data units.
    Rbf { sigma: f64 },
    /// `(xᵀy + c)^q`.
    Polynomial { c: f64, q: u32 },
}

impl KernelSpec {
    pub fn rbf(sigma: f64) -> Self {
        KernelSpec::Rbf { sigma }
    }

    pub fn polynomial(c: f64, q: u32) -> Self {
        KernelSpec::Polynomial { c, q }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            KernelSpec::Rbf { sigma } => ensure(sigma.is_finite() && sigma > 0.0, || {
                format!("RBF width must be positive and finite, got {sigma}")
            }),
            KernelSpec::Polynomial { c, .. } => ensure(c.is_finite() && c >= 0.0, || {
                format!("polynomial offset must be nonnegative, got {c}")
            }),
        }
    }

    /// Kernel value between two vectors of equal length.
    pub fn eval(&self, x: &[f64], y: &[f64]) -> f64 {
        match *self {
            KernelSpec::Rbf { sigma } => rbf_value(x, y, 1.0 / (sigma * sigma)),
            KernelSpec::Polynomial { c, q } => {
                let dot: f64 = x.iter().zip(y).map(|(a, b)| a * b).sum();
                (dot + c).powi(q as i32)
            }
        }
    }
}

#[inline]
fn rbf_value(x: &[f64], y: &[f64], inv_sigma_sq: f64) -> f64 {
    let dist_sq: f64 = x
        .iter()
        .zip(y)
        .map(|(a, b)| {
            let d = a - b;
            d * d
        })
        .sum();
    (-dist_sq * inv_sigma_sq).exp()
}

/// Kernel matrix between the columns of `a` (m×p) and `b` (m×r).
pub fn kernel_matrix(a: &Matrix, b: &Matrix, spec: &KernelSpec) -> Result<Matrix> {
    spec.validate()?;
    ensure_dims(a.nrows() == b.nrows(), || {
        format!("kernel operands have {} and {} rows", a.nrows(), b.nrows())
    })?;
    Ok(match *spec {
        KernelSpec::Rbf { sigma } => rbf_matrix(a, b, sigma),
        _ => assemble(a, b, |x, y| spec.eval(x, y)),
    })
}

/// Unchecked RBF kernel matrix; callers guarantee matching rows and σ > 0.
pub(crate) fn rbf_matrix(a: &Matrix, b: &Matrix, sigma: f64) -> Matrix {
    let inv = 1.0 / (sigma * sigma);
    assemble(a, b, |x, y| rbf_value(x, y, inv))
}

fn assemble(a: &Matrix, b: &Matrix, f: impl Fn(&[f64], &[f64]) -> f64) -> Matrix {
    let m = a.nrows();
    let (p, r) = (a.ncols(), b.ncols());
    let (sa, sb) = (a.as_slice(), b.as_slice());
    let mut out = Matrix::zeros(p, r);
    if m == 0 {
        out.fill(f(&[], &[]));
        return out;
    }
    for (j, col) in out.column_iter_mut().enumerate() {
        let y = &sb[j * m..(j + 1) * m];
        for (i, v) in col.into_iter().enumerate() {
            *v = f(&sa[i * m..(i + 1) * m], y);
        }
    }
    out
}

/// Kernel width heuristic `scale · n⁻² · Σ_{i,j} ‖x̂_i − x̂_j‖` over all ordered
/// pairs, diagonal included.
///
/// For more than 10⁷ ordered pairs the mean distance is estimated from 10⁶
/// uniformly drawn pairs; [`sigma_heuristic_seeded`] controls that draw.
pub fn sigma_heuristic(x: &Matrix, scale: f64) -> Result<f64> {
    sigma_heuristic_seeded(x, scale, 0)
}

pub fn sigma_heuristic_seeded(x: &Matrix, scale: f64, seed: u64) -> Result<f64> {
    ensure(scale.is_finite() && scale > 0.0, || {
        format!("sigma scale must be positive, got {scale}")
    })?;
    let n = x.ncols();
    ensure(n >= 1 && x.nrows() >= 1, || "empty data matrix".to_string())?;
    let dist = |i: usize, j: usize| (x.column(i) - x.column(j)).norm();

    let mean = if n.saturating_mul(n) <= EXACT_PAIR_LIMIT {
        let mut total = 0.0;
        for j in 0..n {
            for i in 0..j {
                total += dist(i, j);
            }
        }
        2.0 * total / (n as f64 * n as f64)
    } else {
        let mut rng = seeded_rng(seed);
        let total: f64 = (0..SAMPLED_PAIRS)
            .map(|_| dist(rng.random_range(0..n), rng.random_range(0..n)))
            .sum();
        total / SAMPLED_PAIRS as f64
    };
    let sigma = scale * mean;
    if !(sigma.is_finite() && sigma > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "kernel width heuristic gave {sigma}; columns are identical or non-finite"
        )));
    }
    Ok(sigma)
}

/// `‖φ(D)C‖_*`, the nuclear norm of the implicit feature-space product.
///
/// Computed from the eigenvalues of `Cᵀ K(D,D) C`; eigenvalues below the
/// round-off floor `n·ε·λ_max` (including negative ones) count as zero. When `C` has more columns than rows the equivalent d×d form
/// `K^{1/2} C Cᵀ K^{1/2}` is used instead.
pub fn feature_nuclear_norm(d: &Matrix, c: &Matrix, spec: &KernelSpec) -> Result<f64> {
    ensure_dims(d.ncols() == c.nrows(), || {
        format!("dictionary has {} atoms but codes have {} rows", d.ncols(), c.nrows())
    })?;
    let k = kernel_matrix(d, d, spec)?;
    let gram = if c.ncols() <= c.nrows() {
        c.transpose() * &k * c
    } else {
        let eig = SymmetricEigen::new(k);
        let sqrt_vals = eig.eigenvalues.map(|v| v.max(0.0).sqrt());
        let root = &eig.eigenvectors * Matrix::from_diagonal(&sqrt_vals) * eig.eigenvectors.transpose();
        &root * c * c.transpose() * &root
    };
    let gram = (&gram + gram.transpose()) * 0.5;
    let eigenvalues = SymmetricEigen::new(gram).eigenvalues;
    // Eigenvalues at round-off level would otherwise contribute O(√ε) each.
    let largest = eigenvalues.iter().cloned().fold(0.0, f64::max);
    let floor = largest * eigenvalues.len() as f64 * f64::EPSILON;
    Ok(eigenvalues.iter().filter(|v| **v > floor).map(|v| v.sqrt()).sum())
}

/// Outcome of comparing the RBF kernel against its truncated polynomial series.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeriesCheckReport {
    /// `exp(-‖x − y‖² / (2σ²))`, the kernel the series converges to.
    pub lhs: f64,
    /// `s · Σ_{u=0..q} (xᵀy + c)^u / (σ^{2u} u!)`.
    pub truncated_sum: f64,
    /// `lhs − truncated_sum`.
    pub remainder: f64,
    /// Remainder of the weighted per-degree factorization error for the
    /// one-column, one-atom problem `φ(x) ≈ φ(y)·1`.
    pub factorization_remainder: f64,
    /// `3κ₁ exp(-c/σ²) / q! · ((κ₂ + c)/σ²)^q`.
    pub bound: f64,
    pub kappa1: f64,
    pub kappa2: f64,
    /// Whether `σ² > κ₂ + c`, the condition under which the bound holds.
    pub bound_applies: bool,
}

/// Truncates the expansion of the RBF kernel into weighted polynomial kernels
/// after degree `q` and reports the remainder against its error bound.
///
/// Here `sigma` is the series parameter: the expansion reproduces
/// `exp(-‖x − y‖²/(2σ²))`, i.e. the library RBF kernel of width `√2·σ`.
/// The bound is evaluated for a single column and a single atom with unit
/// code, so `κ₁ = 1` and `κ₂ = max(‖x‖², ‖y‖²)`.
pub fn series_truncation_check(x: &[f64], y: &[f64], sigma: f64, c: f64, q: u32) -> SeriesCheckReport {
    let sigma_sq = sigma * sigma;
    let dot = |a: &[f64], b: &[f64]| -> f64 { a.iter().zip(b).map(|(u, v)| u * v).sum() };
    let (xx, yy, xy) = (dot(x, x), dot(y, y), dot(x, y));

    let lhs = (-(xx + yy - 2.0 * xy) / (2.0 * sigma_sq)).exp();
    let partial = |base: f64| -> f64 {
        let ratio = (base + c) / sigma_sq;
        let mut term = 1.0;
        let mut total = 1.0;
        for u in 1..=q {
            term *= ratio / u as f64;
            total += term;
        }
        total
    };
    let s_x = (-(xx + c) / (2.0 * sigma_sq)).exp();
    let s_y = (-(yy + c) / (2.0 * sigma_sq)).exp();
    let s_xy = (-(xx + yy + 2.0 * c) / (2.0 * sigma_sq)).exp();

    let truncated_sum = s_xy * partial(xy);
    let remainder = lhs - truncated_sum;
    let truncated_error = 0.5 * (s_x * s_x * partial(xx) - 2.0 * truncated_sum + s_y * s_y * partial(yy));
    let factorization_remainder = (1.0 - lhs) - truncated_error;

    let kappa1: f64 = 1.0;
    let kappa2 = xx.max(yy);
    let ratio = (kappa2 + c) / sigma_sq;
    let mut power_over_factorial = 1.0;
    for u in 1..=q {
        power_over_factorial *= ratio / u as f64;
    }
    let bound = 3.0 * kappa1 * (-c / sigma_sq).exp() * power_over_factorial;

    SeriesCheckReport {
        lhs,
        truncated_sum,
        remainder,
        factorization_remainder,
        bound,
        kappa1,
        kappa2,
        bound_applies: sigma_sq > kappa2 + c,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{sym_min_eigenvalue, seeded_rng};
    use rand_distr::{Distribution, StandardNormal};

    fn randn(rows: usize, cols: usize, seed: u64) -> Matrix {
        let mut rng = seeded_rng(seed);
        Matrix::from_fn(rows, cols, |_, _| StandardNormal.sample(&mut rng))
    }

    #[test]
    fn rbf_self_similarity_is_one() {
        let x = Matrix::from_column_slice(3, 1, &[0.3, -2.0, 7.5]);
        let k = kernel_matrix(&x, &x, &KernelSpec::rbf(0.7)).unwrap();
        assert_eq!(k[(0, 0)], 1.0);
    }

    #[test]
    fn rbf_at_distance_sigma() {
        let x = Matrix::from_column_slice(2, 1, &[0.0, 0.0]);
        let y = Matrix::from_column_slice(2, 1, &[1.2, 1.6]);
        let k = kernel_matrix(&x, &y, &KernelSpec::rbf(2.0)).unwrap();
        assert!((k[(0, 0)] - (-1.0f64).exp()).abs() < 1e-15);
        assert!((k[(0, 0)] - 0.3678794).abs() < 1e-7);
    }

    #[test]
    fn polynomial_value() {
        let x = Matrix::from_column_slice(2, 1, &[1.0, 0.0]);
        let y = Matrix::from_column_slice(2, 1, &[0.0, 1.0]);
        let k = kernel_matrix(&x, &y, &KernelSpec::polynomial(1.0, 2)).unwrap();
        assert_eq!(k[(0, 0)], 1.0);
    }

    #[test]
    fn kernel_errors() {
        let a = Matrix::zeros(2, 3);
        let b = Matrix::zeros(3, 3);
        assert!(matches!(
            kernel_matrix(&a, &b, &KernelSpec::rbf(1.0)),
            Err(Error::DimensionMismatch(_))
        ));
        assert!(matches!(
            kernel_matrix(&a, &a, &KernelSpec::rbf(0.0)),
            Err(Error::InvalidParameter(_))
        ));
        assert!(kernel_matrix(&a, &a, &KernelSpec::polynomial(-1.0, 2)).is_err());
    }

    #[test]
    fn gram_is_symmetric_and_psd() {
        let a = randn(6, 50, 11);
        let k = kernel_matrix(&a, &a, &KernelSpec::rbf(2.5)).unwrap();
        for i in 0..50 {
            for j in 0..50 {
                assert!((k[(i, j)] - k[(j, i)]).abs() <= 1e-12);
            }
        }
        assert!(sym_min_eigenvalue(&k) >= -1e-8);
    }

    #[test]
    fn sigma_two_columns() {
        let x = Matrix::from_column_slice(1, 2, &[0.0, 2.0]);
        assert_eq!(sigma_heuristic(&x, 1.0).unwrap(), 1.0);
        assert_eq!(sigma_heuristic(&x, 3.0).unwrap(), 3.0);
    }

    #[test]
    fn sigma_rejects_degenerate_input() {
        let x = Matrix::from_column_slice(2, 2, &[1.0, 1.0, 1.0, 1.0]);
        assert!(sigma_heuristic(&x, 1.0).is_err());
        assert!(sigma_heuristic(&Matrix::zeros(3, 0), 1.0).is_err());
    }

    #[test]
    fn sigma_matches_double_loop() {
        let x = randn(30, 100, 5);
        let n = x.ncols();
        let mut total = 0.0;
        for i in 0..n {
            for j in 0..n {
                let mut s = 0.0;
                for r in 0..x.nrows() {
                    let d = x[(r, i)] - x[(r, j)];
                    s += d * d;
                }
                total += s.sqrt();
            }
        }
        let oracle = total / (n * n) as f64;
        let got = sigma_heuristic(&x, 1.0).unwrap();
        assert!((got - oracle).abs() <= 1e-12 * oracle);
    }

    #[test]
    fn feature_nuclear_norm_simple_cases() {
        let d = Matrix::from_column_slice(3, 1, &[0.1, 0.2, 0.3]);
        let c = Matrix::from_element(1, 1, 2.0);
        let v = feature_nuclear_norm(&d, &c, &KernelSpec::rbf(1.0)).unwrap();
        assert!((v - 2.0).abs() < 1e-12);
        let zero = Matrix::zeros(1, 4);
        assert_eq!(feature_nuclear_norm(&d, &zero, &KernelSpec::rbf(1.0)).unwrap(), 0.0);
        assert!(feature_nuclear_norm(&d, &Matrix::zeros(2, 2), &KernelSpec::rbf(1.0)).is_err());
    }

    #[test]
    fn feature_nuclear_norm_wide_and_tall_forms_agree() {
        let d = randn(4, 3, 8);
        let c = randn(3, 7, 9);
        let spec = KernelSpec::rbf(2.0);
        let wide = feature_nuclear_norm(&d, &c, &spec).unwrap();
        let k = kernel_matrix(&d, &d, &spec).unwrap();
        let tall: f64 = SymmetricEigen::new(c.transpose() * k * &c)
            .eigenvalues
            .iter()
            .filter(|v| **v > 1e-12)
            .map(|v| v.sqrt())
            .sum();
        assert!((wide - tall).abs() < 1e-9 * tall);
    }

    #[test]
    fn series_zero_vectors() {
        let r = series_truncation_check(&[0.0], &[0.0], 1.7, 0.0, 0);
        assert_eq!(r.lhs, 1.0);
        assert_eq!(r.truncated_sum, 1.0);
        assert_eq!(r.remainder, 0.0);
    }

    #[test]
    fn series_high_order_converges() {
        let r = series_truncation_check(&[1.0], &[1.0], 2.0, 0.0, 30);
        assert!(r.remainder.abs() < 1e-12);
    }

    #[test]
    fn series_remainder_within_bound() {
        let r = series_truncation_check(&[1.0], &[-1.0], 3.0, 0.5, 8);
        assert!(r.bound_applies);
        assert!(r.remainder.abs() <= r.bound);
        assert!(r.factorization_remainder.abs() <= r.bound);
        assert_eq!(r.kappa1, 1.0);
        assert_eq!(r.kappa2, 1.0);
    }
}
