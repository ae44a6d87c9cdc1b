use proptest::prelude::*;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use rnlmf::kernels::{feature_nuclear_norm, kernel_matrix, series_truncation_check, sigma_heuristic};
use rnlmf::linalg::{nuclear_norm, seeded_rng, sym_min_eigenvalue};
use rnlmf::{KernelSpec, Matrix};

fn randn(rows: usize, cols: usize, rng: &mut impl Rng) -> Matrix {
    Matrix::from_fn(rows, cols, |_, _| StandardNormal.sample(rng))
}

fn factorial(k: u32) -> f64 {
    (1..=k).map(f64::from).product()
}

/// All exponent vectors of length `m` with total degree at most `q`.
fn exponents(m: usize, q: u32) -> Vec<Vec<u32>> {
    if m == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for first in 0..=q {
        for mut rest in exponents(m - 1, q - first) {
            rest.insert(0, first);
            out.push(rest);
        }
    }
    out
}

/// Explicit feature map of `(xᵀy + c)^q`, from the multinomial expansion.
fn poly_feature_map(x: &Matrix, c: f64, q: u32) -> Matrix {
    let alphas = exponents(x.nrows(), q);
    Matrix::from_fn(alphas.len(), x.ncols(), |f, j| {
        let alpha = &alphas[f];
        let total: u32 = alpha.iter().sum();
        let rest = q - total;
        let coeff = factorial(q) / (alpha.iter().map(|&a| factorial(a)).product::<f64>() * factorial(rest));
        let monomial: f64 = alpha.iter().enumerate().map(|(i, &a)| x[(i, j)].powi(a as i32)).product();
        (coeff * c.powi(rest as i32)).sqrt() * monomial
    })
}

#[test]
fn polynomial_feature_map_reproduces_kernel() {
    let mut rng = seeded_rng(1);
    for (m, q) in [(1, 1), (2, 2), (3, 3), (5, 3), (4, 2)] {
        let x = randn(m, 6, &mut rng);
        let spec = KernelSpec::polynomial(0.7, q);
        let phi = poly_feature_map(&x, 0.7, q);
        let k = kernel_matrix(&x, &x, &spec).unwrap();
        assert!((phi.transpose() * &phi - k).abs().max() < 1e-10);
    }
}

#[test]
fn feature_nuclear_norm_matches_explicit_features() {
    let mut rng = seeded_rng(2);
    for trial in 0..20 {
        let m = rng.random_range(1..=5);
        let q = rng.random_range(1..=3);
        let d = rng.random_range(1..=4);
        let n = rng.random_range(1..=7);
        let c0 = rng.random_range(0.0..2.0);
        let dict = randn(m, d, &mut rng);
        let codes = randn(d, n, &mut rng);
        let spec = KernelSpec::polynomial(c0, q);
        let expected = nuclear_norm(&(poly_feature_map(&dict, c0, q) * &codes));
        let got = feature_nuclear_norm(&dict, &codes, &spec).unwrap();
        assert!((got - expected).abs() <= 1e-8 * expected.max(1.0), "trial {trial}: {got} vs {expected}");
    }
}

#[test]
fn feature_nuclear_norm_simple_cases() {
    let x = Matrix::from_row_slice(2, 1, &[0.3, -1.0]);
    let spec = KernelSpec::rbf(1.5);
    let two = Matrix::from_element(1, 1, 2.0);
    assert!((feature_nuclear_norm(&x, &two, &spec).unwrap() - 2.0).abs() < 1e-12);
    assert_eq!(feature_nuclear_norm(&x, &Matrix::zeros(1, 4), &spec).unwrap(), 0.0);
}

#[test]
fn series_remainder_shrinks_with_degree() {
    let mut rng = seeded_rng(3);
    let mut checked = 0;
    while checked < 50 {
        let x: [f64; 1] = [rng.random_range(-2.0..2.0)];
        let y: [f64; 1] = [rng.random_range(-2.0..2.0)];
        let c: f64 = rng.random_range(0.0..1.0);
        let sigma: f64 = (x[0] * x[0]).max(y[0] * y[0]) + c + rng.random_range(0.1..3.0);
        let sigma = sigma.sqrt();
        let mut last = f64::INFINITY;
        for q in [1, 2, 4, 8] {
            let r = series_truncation_check(&x, &y, sigma, c, q);
            assert!(r.bound_applies);
            assert!(r.remainder.abs() <= r.bound, "q={q}: {} > {}", r.remainder.abs(), r.bound);
            assert!(r.remainder.abs() <= last + 1e-15);
            last = r.remainder.abs();
        }
        assert!(series_truncation_check(&x, &y, sigma, c, 30).remainder.abs() < 1e-12);
        checked += 1;
    }
}

#[test]
fn sigma_matches_double_loop() {
    let mut rng = seeded_rng(4);
    let x = randn(30, 100, &mut rng);
    let mut total = 0.0;
    for i in 0..100 {
        for j in 0..100 {
            total += (x.column(i) - x.column(j)).norm();
        }
    }
    let expected = total / 1e4;
    let got = sigma_heuristic(&x, 1.0).unwrap();
    assert!((got - expected).abs() <= 1e-12 * expected);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn feature_norm_lower_bounds(seed in any::<u64>(), lc in 1e-3f64..10.0, ld in 1e-3f64..10.0) {
        let mut rng = seeded_rng(seed);
        let m = rng.random_range(1..=6);
        let d = rng.random_range(1..=6);
        let n = rng.random_range(1..=10);
        let dict = randn(m, d, &mut rng);
        let codes = randn(d, n, &mut rng);
        let spec = KernelSpec::rbf(rng.random_range(0.2..3.0));
        let nuc = feature_nuclear_norm(&dict, &codes, &spec).unwrap();
        prop_assert!(codes.norm() >= nuc / (d as f64).sqrt() - 1e-9);
        let feature_frob_sq = kernel_matrix(&dict, &dict, &spec).unwrap().trace();
        let lhs = 0.5 * ld * feature_frob_sq + 0.5 * lc * codes.norm_squared();
        prop_assert!(lhs >= (lc * ld).sqrt() * nuc - 1e-9);
    }

    #[test]
    fn rbf_gram_is_symmetric_psd(seed in any::<u64>(), sigma in 0.1f64..5.0) {
        let mut rng = seeded_rng(seed);
        let x = randn(4, 50, &mut rng);
        let k = kernel_matrix(&x, &x, &KernelSpec::rbf(sigma)).unwrap();
        prop_assert!((&k - k.transpose()).abs().max() <= 1e-12);
        prop_assert!(k.diagonal().iter().all(|v| *v == 1.0));
        prop_assert!(sym_min_eigenvalue(&k) >= -1e-8);
    }

    #[test]
    fn polynomial_gram_is_symmetric(seed in any::<u64>(), c in 0.0f64..2.0, q in 0u32..4) {
        let mut rng = seeded_rng(seed);
        let x = randn(3, 8, &mut rng);
        let k = kernel_matrix(&x, &x, &KernelSpec::polynomial(c, q)).unwrap();
        prop_assert!((&k - k.transpose()).abs().max() <= 1e-12 * k.abs().max().max(1.0));
    }
}
