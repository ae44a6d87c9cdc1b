use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use rnlmf::clustering::{
    affinity_from_codes, cluster_codes, clustering_error, sparsify_normalize, spectral_clustering, ClusteringConfig,
};
use rnlmf::datagen::{gen_union_polynomial, inject_columnwise, inject_salt_pepper, NoiseSpec, SynthSpec};
use rnlmf::linalg::{l1_norm, nuclear_norm, seeded_rng};
use rnlmf::rpca::{rpca_admm, RpcaConfig};
use rnlmf::Matrix;

fn randn(rows: usize, cols: usize, rng: &mut impl Rng) -> Matrix {
    Matrix::from_fn(rows, cols, |_, _| StandardNormal.sample(rng))
}

fn numerical_rank(x: &Matrix, rel: f64) -> usize {
    let s = x.singular_values();
    let top = s.max();
    s.iter().filter(|v| **v > rel * top).count()
}

#[test]
fn single_manifold_rank_is_feature_dimension() {
    let (x, _) = gen_union_polynomial(&SynthSpec { k: 1, seed: 1, ..Default::default() }).unwrap();
    assert_eq!(numerical_rank(&x, 1e-8), 19);
    let (x, _) = gen_union_polynomial(&SynthSpec { k: 3, seed: 1, ..Default::default() }).unwrap();
    assert_eq!(numerical_rank(&x, 1e-8), 30);
}

#[test]
fn column_noise_hits_distinct_columns() {
    let x = Matrix::from_fn(5, 40, |i, j| (i * j) as f64 * 0.1 + 1.0);
    let c = inject_columnwise(&x, 0.25, 3).unwrap();
    let dirty = (0..40).filter(|&j| c.noise.column(j).iter().any(|v| *v != 0.0)).count();
    assert_eq!(dirty, 10);
    assert_eq!(c.xhat, &x + &c.noise);
}

#[test]
fn set_value_injectors_are_mask_consistent() {
    let mut rng = seeded_rng(4);
    let x = randn(16, 20, &mut rng);
    let c = inject_salt_pepper(&x, 0.25, 0.3, 9).unwrap();
    for i in 0..x.len() {
        if c.mask[i] {
            assert!(c.xhat[i] == x.max() || c.xhat[i] == x.min());
        } else {
            assert_eq!(c.xhat[i], x[i]);
        }
    }
    let occ = NoiseSpec { kind: rnlmf::NoiseKind::BlockOcclusion, image_h: 4, image_w: 4, ..NoiseSpec::sparse(0.5, 1.0, 2) };
    let o = occ.apply(&x).unwrap();
    assert_eq!(o.mask.iter().filter(|b| **b).count(), 10);
}

#[test]
fn three_components_are_recovered() {
    let sizes = [4usize, 6, 5];
    let n: usize = sizes.iter().sum();
    let mut truth = Vec::new();
    for (c, &s) in sizes.iter().enumerate() {
        truth.extend(std::iter::repeat_n(c, s));
    }
    let mut rng = seeded_rng(5);
    let mut perm: Vec<usize> = (0..n).collect();
    perm.shuffle(&mut rng);
    let labels_of: Vec<usize> = perm.iter().map(|&p| truth[p]).collect();
    let mut a = Matrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            if i != j && labels_of[i] == labels_of[j] {
                let w = rng.random_range(0.2..1.0);
                a[(i, j)] = w;
                a[(j, i)] = w;
            }
        }
    }
    let labels = spectral_clustering(&a, 3, 10, 0).unwrap();
    assert_eq!(clustering_error(&labels, &labels_of, 3).unwrap(), 0.0);
}

#[test]
fn codes_from_independent_subspaces_cluster_perfectly() {
    let mut rng = seeded_rng(6);
    let basis: Vec<Matrix> = (0..3).map(|_| randn(9, 2, &mut rng)).collect();
    let mut codes = Matrix::zeros(9, 60);
    let mut truth = Vec::new();
    for j in 0..60 {
        let g = j % 3;
        codes.set_column(j, &(&basis[g] * randn(2, 1, &mut rng)).column(0));
        truth.push(g);
    }
    let res = cluster_codes(&codes, &ClusteringConfig::new(3, 5)).unwrap();
    assert_eq!(clustering_error(&res.labels, &truth, 3).unwrap(), 0.0);
    let a = &res.affinity;
    assert_eq!(a, &a.transpose());
    assert!(a.iter().all(|v| *v >= 0.0));
    assert!(a.diagonal().iter().all(|v| *v == 0.0));
}

#[test]
fn rpca_objective_beats_trivial_splits() {
    let mut rng = seeded_rng(7);
    let low = randn(15, 2, &mut rng) * randn(2, 25, &mut rng);
    let mut x = low.clone();
    for _ in 0..12 {
        let (i, j) = (rng.random_range(0..15), rng.random_range(0..25));
        x[(i, j)] += 8.0;
    }
    let cfg = RpcaConfig::default();
    let res = rpca_admm(&x, &cfg).unwrap();
    assert!(res.converged);
    assert!((&x - &res.l - &res.s).norm() / x.norm() < cfg.tol);
    let lambda = 1.0 / 25f64.sqrt();
    let obj = res.objective(lambda);
    assert!(obj <= nuclear_norm(&x) + 1e-9);
    assert!(obj <= lambda * l1_norm(&x) + 1e-9);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn clustering_error_ignores_label_names(seed in any::<u64>(), k in 2usize..5) {
        let mut rng = seeded_rng(seed);
        let truth: Vec<usize> = (0..30).map(|_| rng.random_range(0..k)).collect();
        let pred: Vec<usize> = (0..30).map(|_| rng.random_range(0..k)).collect();
        let mut perm: Vec<usize> = (0..k).collect();
        perm.shuffle(&mut rng);
        let renamed: Vec<usize> = pred.iter().map(|&l| perm[l]).collect();
        let a = clustering_error(&pred, &truth, k).unwrap();
        prop_assert_eq!(a, clustering_error(&renamed, &truth, k).unwrap());
        prop_assert!((0.0..=1.0).contains(&a));
    }

    #[test]
    fn affinity_ignores_rotations_of_codes(seed in any::<u64>()) {
        let mut rng = seeded_rng(seed);
        let c = randn(4, 12, &mut rng);
        let q = randn(4, 4, &mut rng).qr().q();
        let a = affinity_from_codes(&c, 0.01).unwrap();
        let b = affinity_from_codes(&(q * &c), 0.01).unwrap();
        prop_assert!((a - b).abs().max() < 1e-10);
    }

    #[test]
    fn sparsified_affinity_is_bounded_and_symmetric(seed in any::<u64>(), kappa in 1usize..12) {
        let mut rng = seeded_rng(seed);
        let a = affinity_from_codes(&randn(5, 12, &mut rng), 0.05).unwrap();
        let s = sparsify_normalize(&a, kappa).unwrap();
        prop_assert_eq!(&s, &s.transpose());
        prop_assert!(s.iter().all(|v| (0.0..=1.0).contains(v)));
        prop_assert_eq!(s, sparsify_normalize(&a, kappa).unwrap());
    }

    #[test]
    fn generator_is_deterministic(seed in any::<u64>()) {
        let spec = SynthSpec { k: 2, m: 6, samples_per_manifold: 10, shuffle: true, seed, ..Default::default() };
        prop_assert_eq!(gen_union_polynomial(&spec).unwrap(), gen_union_polynomial(&spec).unwrap());
    }

    #[test]
    fn additive_injectors_are_exact(seed in any::<u64>(), rho in 0.0f64..1.0) {
        let mut rng = seeded_rng(seed);
        let x = randn(6, 15, &mut rng);
        let c = NoiseSpec::sparse(rho, 1.0, seed).apply(&x).unwrap();
        prop_assert_eq!(&x + &c.noise, c.xhat.clone());
        let expected = (rho * 90.0).round() as usize;
        prop_assert_eq!(c.noise.iter().filter(|v| **v != 0.0).count(), expected);
    }
}
