//! Subspace clustering from the codes: a ridge self-expressive affinity,
//! top-κ sparsification and normalized spectral clustering.

use nalgebra::{Cholesky, DVector, SymmetricEigen};
use pathfinding::kuhn_munkres::kuhn_munkres;
use pathfinding::matrix::Matrix as WeightMatrix;
use rand::Rng;

use crate::error::{ensure, ensure_dims};
use crate::linalg::seeded_rng;
use crate::rnlmf::{fit, RnlmfConfig, RnlmfModel};
use crate::{Error, Matrix, Result};

const DEGREE_FLOOR: f64 = 1e-12;
const KMEANS_MAX_ITERS: usize = 100;

#[derive(Debug, Clone, PartialEq)]
pub struct ClusteringConfig {
    /// Number of clusters.
    pub k: usize,
    /// Entries kept per affinity column.
    pub kappa: usize,
    /// Ridge penalty of the self-expressive fit.
    pub gamma: f64,
    pub kmeans_restarts: usize,
    pub seed: u64,
}

impl ClusteringConfig {
    pub fn new(k: usize, kappa: usize) -> Self {
        Self { k, kappa, gamma: 0.01, kmeans_restarts: 20, seed: 0 }
    }

    fn validate(&self, n: usize) -> Result<()> {
        ensure(self.k >= 1 && self.k <= n, || format!("k must lie in [1, {n}], got {}", self.k))?;
        ensure(self.kappa >= 1 && self.kappa < n.max(2), || {
            format!("kappa must lie in [1, {}), got {}", n.max(2), self.kappa)
        })?;
        ensure(self.gamma > 0.0 && self.gamma.is_finite(), || {
            format!("gamma must be positive, got {}", self.gamma)
        })?;
        ensure(self.kmeans_restarts >= 1, || "kmeans_restarts must be at least 1".into())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClusteringResult {
    pub labels: Vec<usize>,
    /// Sparsified, normalized and symmetrized affinity.
    pub affinity: Matrix,
}

/// `|(CᵀC + γI)⁻¹ CᵀC|` with a zero diagonal, evaluated as
/// `|γ⁻¹ Cᵀ (I + γ⁻¹ C Cᵀ)⁻¹ C|` so only a `d×d` system is factored.
pub fn affinity_from_codes(c: &Matrix, gamma: f64) -> Result<Matrix> {
    ensure(gamma > 0.0 && gamma.is_finite(), || format!("gamma must be positive, got {gamma}"))?;
    let d = c.nrows();
    let inner = Matrix::identity(d, d) + (c * c.transpose()) / gamma;
    let chol = Cholesky::new(inner).ok_or_else(|| Error::Numeric("affinity system is not positive definite".into()))?;
    let mut a = (c.transpose() * chol.solve(c)) / gamma;
    a.apply(|v| *v = v.abs());
    a.fill_diagonal(0.0);
    Ok(a)
}

/// Keeps the `kappa` largest entries of each column (ties go to the lower
/// row index), scales each column to unit maximum and returns `(A + Aᵀ)/2`.
pub fn sparsify_normalize(a: &Matrix, kappa: usize) -> Result<Matrix> {
    ensure_dims(a.is_square(), || format!("affinity must be square, got {:?}", a.shape()))?;
    ensure(kappa >= 1, || "kappa must be at least 1".into())?;
    let n = a.nrows();
    let mut out = Matrix::zeros(n, n);
    let mut order: Vec<usize> = Vec::with_capacity(n);
    for j in 0..n {
        let col = a.column(j);
        order.clear();
        order.extend(0..n);
        order.sort_by(|&x, &y| col[y].total_cmp(&col[x]).then(x.cmp(&y)));
        let kept = &order[..kappa.min(n)];
        let peak = kept.iter().map(|&i| col[i]).fold(0.0f64, f64::max);
        if peak <= 0.0 {
            continue;
        }
        for &i in kept {
            out[(i, j)] = col[i] / peak;
        }
    }
    let t = out.transpose();
    Ok((out + t) * 0.5)
}

/// Normalized spectral clustering with restarted k-means++ on the
/// row-normalized embedding.
pub fn spectral_clustering(a: &Matrix, k: usize, restarts: usize, seed: u64) -> Result<Vec<usize>> {
    ensure_dims(a.is_square(), || format!("affinity must be square, got {:?}", a.shape()))?;
    let n = a.nrows();
    ensure(k >= 1 && k <= n, || format!("k must lie in [1, {n}], got {k}"))?;
    ensure(restarts >= 1, || "restarts must be at least 1".into())?;
    if k == 1 {
        return Ok(vec![0; n]);
    }
    let inv_sqrt_deg: Vec<f64> = a.column_sum().iter().map(|&s| 1.0 / s.max(DEGREE_FLOOR).sqrt()).collect();
    // The k smallest eigenvalues of I − N are the k largest of N.
    let normalized = Matrix::from_fn(n, n, |i, j| inv_sqrt_deg[i] * a[(i, j)] * inv_sqrt_deg[j]);
    let eig = SymmetricEigen::try_new(normalized, f64::EPSILON, 0)
        .ok_or_else(|| Error::Numeric("eigendecomposition of the normalized affinity failed".into()))?;
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&x, &y| eig.eigenvalues[y].total_cmp(&eig.eigenvalues[x]).then(x.cmp(&y)));
    let mut embedding = Matrix::from_fn(n, k, |i, c| eig.eigenvectors[(i, idx[c])]);
    for mut row in embedding.row_iter_mut() {
        let norm = row.norm();
        if norm > 0.0 {
            row /= norm;
        }
    }
    Ok(kmeans(&embedding, k, restarts, seed).0)
}

fn restart_seed(seed: u64, restart: usize) -> u64 {
    seed.wrapping_add((restart as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15))
}

/// k-means on the rows of `points`; returns labels and inertia of the best
/// restart (ties keep the earliest).
pub fn kmeans(points: &Matrix, k: usize, restarts: usize, seed: u64) -> (Vec<usize>, f64) {
    let mut best: Option<(Vec<usize>, f64)> = None;
    for r in 0..restarts {
        let run = kmeans_once(points, k, restart_seed(seed, r));
        if best.as_ref().is_none_or(|(_, inertia)| run.1 < *inertia) {
            best = Some(run);
        }
    }
    best.expect("at least one restart")
}

fn kmeans_once(points: &Matrix, k: usize, seed: u64) -> (Vec<usize>, f64) {
    let n = points.nrows();
    let rows: Vec<DVector<f64>> = points.row_iter().map(|r| r.transpose()).collect();
    let mut rng = seeded_rng(seed);
    let mut centers: Vec<DVector<f64>> = vec![rows[rng.random_range(0..n)].clone()];
    let mut nearest: Vec<f64> = rows.iter().map(|p| (p - &centers[0]).norm_squared()).collect();
    while centers.len() < k {
        let total: f64 = nearest.iter().sum();
        let pick = if total > 0.0 {
            let mut target = rng.random_range(0.0..total);
            nearest.iter().position(|&w| {
                target -= w;
                target < 0.0
            })
            .unwrap_or(n - 1)
        } else {
            rng.random_range(0..n)
        };
        centers.push(rows[pick].clone());
        let c = centers.last().unwrap();
        for (w, p) in nearest.iter_mut().zip(&rows) {
            *w = w.min((p - c).norm_squared());
        }
    }

    let mut labels = vec![0usize; n];
    let mut inertia = f64::INFINITY;
    for iter in 0..KMEANS_MAX_ITERS {
        let mut changed = false;
        inertia = 0.0;
        for (i, p) in rows.iter().enumerate() {
            let (best, dist) = centers
                .iter()
                .enumerate()
                .map(|(c, center)| (c, (p - center).norm_squared()))
                .fold((0, f64::INFINITY), |acc, cur| if cur.1 < acc.1 { cur } else { acc });
            if labels[i] != best {
                labels[i] = best;
                changed = true;
            }
            inertia += dist;
        }
        if iter > 0 && !changed {
            break;
        }
        let dim = points.ncols();
        let mut sums = vec![DVector::zeros(dim); k];
        let mut counts = vec![0usize; k];
        for (p, &l) in rows.iter().zip(&labels) {
            sums[l] += p;
            counts[l] += 1;
        }
        for c in 0..k {
            if counts[c] > 0 {
                centers[c] = &sums[c] / counts[c] as f64;
            }
        }
    }
    (labels, inertia)
}

/// Fraction of points misclassified under the best one-to-one matching of
/// predicted to true labels.
pub fn clustering_error(pred: &[usize], truth: &[usize], k: usize) -> Result<f64> {
    ensure_dims(pred.len() == truth.len(), || {
        format!("label sequences differ in length: {} vs {}", pred.len(), truth.len())
    })?;
    ensure(k >= 1, || "k must be at least 1".into())?;
    if let Some(bad) = pred.iter().chain(truth).find(|&&l| l >= k) {
        return Err(Error::InvalidParameter(format!("label {bad} is out of range for k = {k}")));
    }
    if pred.is_empty() {
        return Ok(0.0);
    }
    let mut confusion = WeightMatrix::new(k, k, 0i64);
    for (&p, &t) in pred.iter().zip(truth) {
        confusion[(p, t)] += 1;
    }
    let (matched, _) = kuhn_munkres(&confusion);
    Ok(1.0 - matched as f64 / pred.len() as f64)
}

/// Fits RNLMF on `xhat` and clusters its columns from the learned codes.
pub fn cluster(
    xhat: &Matrix,
    rnlmf: &RnlmfConfig,
    config: &ClusteringConfig,
) -> Result<(ClusteringResult, RnlmfModel)> {
    config.validate(xhat.ncols())?;
    let model = fit(xhat, rnlmf)?;
    let result = cluster_codes(&model.c, config)?;
    Ok((result, model))
}

/// Clusters the columns of a code matrix.
pub fn cluster_codes(c: &Matrix, config: &ClusteringConfig) -> Result<ClusteringResult> {
    config.validate(c.ncols())?;
    let raw = affinity_from_codes(c, config.gamma)?;
    let affinity = sparsify_normalize(&raw, config.kappa)?;
    let labels = spectral_clustering(&affinity, config.k, config.kmeans_restarts, config.seed)?;
    Ok(ClusteringResult { labels, affinity })
}
