//! Synthetic union-of-polynomial-manifolds data, noise injectors and error
//! metrics.

use nalgebra::DMatrix;
use rand::seq::index::sample;
use rand::Rng;
use rand_distr::{Distribution, Normal, StandardNormal};

use crate::error::{ensure, ensure_dims};
use crate::linalg::{l1_norm, seeded_rng};
use crate::{Error, Matrix, Result};

/// Parameters of the union-of-manifolds generator.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SynthSpec {
    /// Number of manifolds.
    pub k: usize,
    /// Latent dimension.
    pub r: usize,
    /// Polynomial order.
    pub p: usize,
    /// Ambient dimension.
    pub m: usize,
    pub samples_per_manifold: usize,
    /// Randomly permute the columns (labels follow).
    pub shuffle: bool,
    pub seed: u64,
}

impl Default for SynthSpec {
    fn default() -> Self {
        Self { k: 3, r: 3, p: 3, m: 30, samples_per_manifold: 300, shuffle: false, seed: 0 }
    }
}

impl SynthSpec {
    /// Number of monomials of total degree `1..=p` in `r` variables,
    /// `C(r + p, p) − 1`.
    pub fn feature_dim(&self) -> usize {
        binomial(self.r + self.p, self.p) - 1
    }

    pub fn validate(&self) -> Result<()> {
        ensure(self.k >= 1 && self.r >= 1 && self.p >= 1 && self.m >= 1, || {
            "k, r, p and m must all be positive".into()
        })?;
        ensure(self.samples_per_manifold >= 1, || "samples_per_manifold must be positive".into())
    }
}

fn binomial(n: usize, k: usize) -> usize {
    let k = k.min(n - k);
    (0..k).fold(1usize, |acc, i| acc * (n - i) / (i + 1))
}

/// All monomials of `z` with total degree `1..=p`, graded lexicographic order.
///
/// Within a degree, exponent vectors are ordered lexicographically with the
/// first variable's exponent descending, e.g. `[a, b, a², ab, b²]` for
/// `r = p = 2`.
pub fn poly_features(z: &[f64], p: usize) -> Vec<f64> {
    let mut out = Vec::new();
    let mut exps = vec![0usize; z.len()];
    for degree in 1..=p {
        push_degree(z, degree, 0, &mut exps, &mut out);
    }
    out
}

fn push_degree(z: &[f64], remaining: usize, var: usize, exps: &mut [usize], out: &mut Vec<f64>) {
    if var + 1 == z.len() {
        exps[var] = remaining;
        out.push(z.iter().zip(exps.iter()).map(|(v, &e)| v.powi(e as i32)).product());
        exps[var] = 0;
        return;
    }
    for e in (0..=remaining).rev() {
        exps[var] = e;
        push_degree(z, remaining - e, var + 1, exps, out);
    }
    exps[var] = 0;
}

/// Draws `k` random polynomial manifolds and samples each one.
///
/// Manifold `j` maps `z ~ U(−1, 1)^r` to `Γʲ z̃`, where `z̃` holds the
/// monomials of `z` up to degree `p` and `Γʲ` (m × `feature_dim`) has i.i.d.
/// standard normal entries. Columns are grouped by manifold unless `shuffle`
/// is set. Returns the data matrix and the manifold label of each column.
pub fn gen_union_polynomial(spec: &SynthSpec) -> Result<(Matrix, Vec<usize>)> {
    spec.validate()?;
    let mut rng = seeded_rng(spec.seed);
    let q = spec.feature_dim();
    let per = spec.samples_per_manifold;
    let n = spec.k * per;
    let mut x = Matrix::zeros(spec.m, n);
    let mut labels = Vec::with_capacity(n);
    for j in 0..spec.k {
        let gamma = Matrix::from_fn(spec.m, q, |_, _| StandardNormal.sample(&mut rng));
        for s in 0..per {
            let z: Vec<f64> = (0..spec.r).map(|_| rng.random_range(-1.0..1.0)).collect();
            let feats = nalgebra::DVector::from_vec(poly_features(&z, spec.p));
            x.set_column(j * per + s, &(&gamma * feats));
            labels.push(j);
        }
    }
    if spec.shuffle {
        let perm = sample(&mut rng, n, n).into_vec();
        let shuffled = Matrix::from_fn(spec.m, n, |r, c| x[(r, perm[c])]);
        let shuffled_labels = perm.iter().map(|&i| labels[i]).collect();
        return Ok((shuffled, shuffled_labels));
    }
    Ok((x, labels))
}

/// Population standard deviation of all entries.
pub fn entry_std(x: &Matrix) -> f64 {
    let count = x.len() as f64;
    if count == 0.0 {
        return 0.0;
    }
    let mean = x.sum() / count;
    (x.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / count).sqrt()
}

/// Fraction-to-count conversion, rounding half away from zero.
fn count_of(fraction: f64, total: usize) -> usize {
    ((fraction * total as f64).round() as usize).min(total)
}

fn check_fraction(name: &str, v: f64) -> Result<()> {
    ensure((0.0..=1.0).contains(&v), || format!("{name} must lie in [0, 1], got {v}"))
}

/// A corrupted copy of a data matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Corrupted {
    pub xhat: Matrix,
    /// For additive noise `xhat = x + noise` exactly; for the set-value
    /// injectors this is `xhat − x`.
    pub noise: Matrix,
    /// Entries that were corrupted.
    pub mask: DMatrix<bool>,
}

impl Corrupted {
    fn additive(x: &Matrix, noise: Matrix) -> Self {
        let mask = noise.map(|v| v != 0.0);
        Self { xhat: x + &noise, noise, mask }
    }

    fn overwritten(x: &Matrix, xhat: Matrix, mask: DMatrix<bool>) -> Self {
        Self { noise: &xhat - x, xhat, mask }
    }
}

/// Adds `N(0, (ratio·σ_x)²)` noise to exactly `round(ρ·mn)` entries chosen
/// uniformly without replacement, where `σ_x` is the entry standard
/// deviation of `x`.
pub fn inject_sparse_gaussian(x: &Matrix, rho: f64, sigma_e_ratio: f64, seed: u64) -> Result<Corrupted> {
    check_fraction("rho", rho)?;
    ensure(sigma_e_ratio >= 0.0 && sigma_e_ratio.is_finite(), || {
        format!("noise ratio must be nonnegative, got {sigma_e_ratio}")
    })?;
    let mut rng = seeded_rng(seed);
    let total = x.len();
    let count = count_of(rho, total);
    let normal = Normal::new(0.0, sigma_e_ratio * entry_std(x))
        .map_err(|e| Error::InvalidParameter(e.to_string()))?;
    let mut noise = Matrix::zeros(x.nrows(), x.ncols());
    let slice = noise.as_mut_slice();
    for idx in sample(&mut rng, total, count) {
        slice[idx] = normal.sample(&mut rng);
    }
    Ok(Corrupted::additive(x, noise))
}

/// Adds `N(0, σ_x²)` noise to every entry of `round(ρ·n)` columns chosen
/// without replacement.
pub fn inject_columnwise(x: &Matrix, rho: f64, seed: u64) -> Result<Corrupted> {
    check_fraction("rho", rho)?;
    let mut rng = seeded_rng(seed);
    let normal = Normal::new(0.0, entry_std(x)).map_err(|e| Error::InvalidParameter(e.to_string()))?;
    let mut noise = Matrix::zeros(x.nrows(), x.ncols());
    let mut cols = sample(&mut rng, x.ncols(), count_of(rho, x.ncols())).into_vec();
    cols.sort_unstable();
    for j in cols {
        for v in noise.column_mut(j).iter_mut() {
            *v = normal.sample(&mut rng);
        }
    }
    Ok(Corrupted::additive(x, noise))
}

/// On `round(fraction·n)` columns, sets `round(density·m)` entries each to
/// the data minimum or maximum with equal probability.
pub fn inject_salt_pepper(x: &Matrix, density: f64, fraction_of_columns: f64, seed: u64) -> Result<Corrupted> {
    check_fraction("density", density)?;
    check_fraction("fraction_of_columns", fraction_of_columns)?;
    let mut rng = seeded_rng(seed);
    let (lo, hi) = (x.min(), x.max());
    let mut xhat = x.clone();
    let mut mask = DMatrix::from_element(x.nrows(), x.ncols(), false);
    let per_column = count_of(density, x.nrows());
    let mut cols = sample(&mut rng, x.ncols(), count_of(fraction_of_columns, x.ncols())).into_vec();
    cols.sort_unstable();
    for j in cols {
        for i in sample(&mut rng, x.nrows(), per_column) {
            xhat[(i, j)] = if rng.random_bool(0.5) { hi } else { lo };
            mask[(i, j)] = true;
        }
    }
    Ok(Corrupted::overwritten(x, xhat, mask))
}

/// Occludes a `round(scale·h)×round(scale·w)` block, placed uniformly at
/// random, in `round(fraction·n)` columns viewed as `h×w` images.
///
/// Pixels are stacked column-major: pixel `(row, col)` is entry
/// `col·h + row`. Occluded pixels are set to the data maximum.
pub fn inject_block_occlusion(
    x: &Matrix,
    image_h: usize,
    image_w: usize,
    fraction_of_columns: f64,
    block_scale: f64,
    seed: u64,
) -> Result<Corrupted> {
    ensure_dims(image_h * image_w == x.nrows(), || {
        format!("{image_h}×{image_w} images need {} rows, data has {}", image_h * image_w, x.nrows())
    })?;
    check_fraction("fraction_of_columns", fraction_of_columns)?;
    check_fraction("block_scale", block_scale)?;
    let mut rng = seeded_rng(seed);
    let bh = (block_scale * image_h as f64).round() as usize;
    let bw = (block_scale * image_w as f64).round() as usize;
    let hi = x.max();
    let mut xhat = x.clone();
    let mut mask = DMatrix::from_element(x.nrows(), x.ncols(), false);
    let mut cols = sample(&mut rng, x.ncols(), count_of(fraction_of_columns, x.ncols())).into_vec();
    cols.sort_unstable();
    for j in cols {
        let top = rng.random_range(0..=image_h - bh);
        let left = rng.random_range(0..=image_w - bw);
        for c in left..left + bw {
            for r in top..top + bh {
                let idx = c * image_h + r;
                xhat[(idx, j)] = hi;
                mask[(idx, j)] = true;
            }
        }
    }
    Ok(Corrupted::overwritten(x, xhat, mask))
}

/// Kind of corruption applied by [`NoiseSpec::apply`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NoiseKind {
    SparseGaussian,
    ColumnGaussian,
    SaltPepper,
    BlockOcclusion,
}

/// Corruption parameters.
///
/// `rho` is the fraction of entries for [`NoiseKind::SparseGaussian`] and the
/// fraction of columns for the other kinds. Salt-and-pepper uses `density`
/// per corrupted column; occlusion uses `image_h × image_w` images.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseSpec {
    pub kind: NoiseKind,
    pub rho: f64,
    pub sigma_e_ratio: f64,
    pub density: f64,
    pub image_h: usize,
    pub image_w: usize,
    pub seed: u64,
}

impl NoiseSpec {
    pub fn sparse(rho: f64, sigma_e_ratio: f64, seed: u64) -> Self {
        Self { kind: NoiseKind::SparseGaussian, rho, sigma_e_ratio, density: 0.25, image_h: 0, image_w: 0, seed }
    }

    pub fn columns(rho: f64, seed: u64) -> Self {
        Self { kind: NoiseKind::ColumnGaussian, ..Self::sparse(rho, 1.0, seed) }
    }

    pub fn apply(&self, x: &Matrix) -> Result<Corrupted> {
        match self.kind {
            NoiseKind::SparseGaussian => inject_sparse_gaussian(x, self.rho, self.sigma_e_ratio, self.seed),
            NoiseKind::ColumnGaussian => inject_columnwise(x, self.rho, self.seed),
            NoiseKind::SaltPepper => inject_salt_pepper(x, self.density, self.rho, self.seed),
            NoiseKind::BlockOcclusion => {
                inject_block_occlusion(x, self.image_h, self.image_w, self.rho, 0.25, self.seed)
            }
        }
    }
}

fn check_metric_inputs(truth: &Matrix, est: &Matrix) -> Result<()> {
    ensure_dims(truth.shape() == est.shape(), || {
        format!("shapes differ: {:?} vs {:?}", truth.shape(), est.shape())
    })
}

/// `‖X − X̌‖_F / ‖X‖_F`.
pub fn rmse(truth: &Matrix, est: &Matrix) -> Result<f64> {
    check_metric_inputs(truth, est)?;
    let denom = truth.norm();
    ensure(denom > 0.0, || "reference matrix has zero norm".into())?;
    Ok((truth - est).norm() / denom)
}

/// `‖X − X̌‖₁ / ‖X‖₁` with entrywise ℓ1 norms.
pub fn mae(truth: &Matrix, est: &Matrix) -> Result<f64> {
    check_metric_inputs(truth, est)?;
    let denom = l1_norm(truth);
    ensure(denom > 0.0, || "reference matrix has zero norm".into())?;
    Ok(l1_norm(&(truth - est)) / denom)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn monomials_small_cases() {
        assert_eq!(poly_features(&[2.0], 2), vec![2.0, 4.0]);
        let (a, b) = (3.0, 5.0);
        assert_eq!(poly_features(&[a, b], 2), vec![a, b, a * a, a * b, b * b]);
        assert_eq!(poly_features(&[0.1, 0.2, 0.3], 3).len(), 19);
        assert_eq!(SynthSpec::default().feature_dim(), 19);
    }

    #[test]
    fn generator_shape_and_labels() {
        let spec = SynthSpec { seed: 4, ..Default::default() };
        let (x, labels) = gen_union_polynomial(&spec).unwrap();
        assert_eq!(x.shape(), (30, 900));
        for j in 0..3 {
            assert_eq!(labels.iter().filter(|&&l| l == j).count(), 300);
        }
    }

    #[test]
    fn generator_is_deterministic_and_shuffles_in_lockstep() {
        let spec = SynthSpec { k: 2, samples_per_manifold: 20, seed: 9, ..Default::default() };
        let (x, l) = gen_union_polynomial(&spec).unwrap();
        assert_eq!(gen_union_polynomial(&spec).unwrap(), (x.clone(), l.clone()));
        let (xs, ls) = gen_union_polynomial(&SynthSpec { shuffle: true, ..spec }).unwrap();
        for (j, col) in xs.column_iter().enumerate() {
            let src = (0..x.ncols()).find(|&i| x.column(i) == col).unwrap();
            assert_eq!(l[src], ls[j]);
        }
    }

    #[test]
    fn sparse_noise_counts() {
        let x = Matrix::from_fn(30, 900, |i, j| (i * 7 + j) as f64 % 11.0);
        let c = inject_sparse_gaussian(&x, 0.3, 1.0, 1).unwrap();
        assert_eq!(c.noise.iter().filter(|v| **v != 0.0).count(), 8100);
        assert_eq!(c.xhat, &x + &c.noise);
        let none = inject_sparse_gaussian(&x, 0.0, 1.0, 1).unwrap();
        assert_eq!(none.xhat, x);
        let all = inject_sparse_gaussian(&x, 1.0, 1.0, 1).unwrap();
        assert!(all.noise.iter().all(|v| *v != 0.0));
        assert!(inject_sparse_gaussian(&x, 1.5, 1.0, 1).is_err());
    }

    #[test]
    fn column_noise_counts() {
        let x = Matrix::from_fn(4, 10, |i, j| (i + j) as f64);
        let c = inject_columnwise(&x, 0.5, 2).unwrap();
        let dirty: Vec<usize> = (0..10).filter(|&j| c.noise.column(j).iter().any(|v| *v != 0.0)).collect();
        assert_eq!(dirty.len(), 5);
        assert_eq!(inject_columnwise(&x, 0.0, 2).unwrap().noise, Matrix::zeros(4, 10));
    }

    #[test]
    fn salt_pepper_counts() {
        let x = Matrix::from_fn(20, 10, |i, j| ((i * 3 + j * 5) % 17) as f64);
        let c = inject_salt_pepper(&x, 0.25, 0.3, 3).unwrap();
        assert_eq!(c.mask.iter().filter(|b| **b).count(), 5 * 3);
        assert_eq!(inject_salt_pepper(&x, 0.0, 0.3, 3).unwrap().xhat, x);
        let full = inject_salt_pepper(&x, 1.0, 1.0, 3).unwrap();
        assert!(full.xhat.iter().all(|v| *v == x.min() || *v == x.max()));
    }

    #[test]
    fn occlusion_block_geometry() {
        let x = Matrix::from_fn(400, 6, |i, j| ((i + j) % 13) as f64 - 20.0);
        let c = inject_block_occlusion(&x, 20, 20, 0.5, 0.25, 5).unwrap();
        let mut occluded = 0;
        for j in 0..6 {
            let idx: Vec<usize> = (0..400).filter(|&i| c.mask[(i, j)]).collect();
            if idx.is_empty() {
                continue;
            }
            occluded += 1;
            assert_eq!(idx.len(), 25);
            let rows: Vec<usize> = idx.iter().map(|i| i % 20).collect();
            let cols: Vec<usize> = idx.iter().map(|i| i / 20).collect();
            let (r0, r1) = (*rows.iter().min().unwrap(), *rows.iter().max().unwrap());
            let (c0, c1) = (*cols.iter().min().unwrap(), *cols.iter().max().unwrap());
            assert_eq!((r1 - r0 + 1) * (c1 - c0 + 1), 25);
        }
        assert_eq!(occluded, 3);
        assert_eq!(inject_block_occlusion(&x, 20, 20, 0.0, 0.25, 5).unwrap().xhat, x);
        assert!(inject_block_occlusion(&x, 20, 21, 0.5, 0.25, 5).is_err());
    }

    #[test]
    fn metrics() {
        let x = Matrix::from_row_slice(1, 2, &[3.0, 4.0]);
        let est = Matrix::from_row_slice(1, 2, &[3.0, 0.0]);
        assert!((rmse(&x, &est).unwrap() - 0.8).abs() < 1e-15);
        assert!((mae(&x, &est).unwrap() - 4.0 / 7.0).abs() < 1e-15);
        assert_eq!(rmse(&x, &x).unwrap(), 0.0);
        assert_eq!(mae(&x, &Matrix::zeros(1, 2)).unwrap(), 1.0);
        assert!(rmse(&Matrix::zeros(1, 2), &x).is_err());
    }
}
