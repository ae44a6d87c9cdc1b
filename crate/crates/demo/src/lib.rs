//! Browser demo: denoise a corrupted planar curve, plot the kernel series
//! remainder against its bound, and separate two curves by clustering the
//! learned codes.
//!
//! Points cross the boundary as flat `Float64Array`s of `x, y` pairs. The
//! denoising curve lives in six coordinates, of which the first two are
//! returned; the clustering curves are planar.

use rand::Rng;
use rnlmf::clustering::{cluster, clustering_error, ClusteringConfig};
use rnlmf::datagen::{inject_sparse_gaussian, rmse};
use rnlmf::kernels::series_truncation_check;
use rnlmf::linalg::seeded_rng;
use rnlmf::rnlmf::fit;
use rnlmf::{Matrix, RnlmfConfig};
use wasm_bindgen::prelude::*;

fn to_js(e: rnlmf::Error) -> JsError {
    JsError::new(&e.to_string())
}

/// The plotted coordinates of every column, as `x, y` pairs.
fn flatten(m: &Matrix) -> Vec<f64> {
    m.column_iter().flat_map(|c| [c[0], c[1]]).collect()
}

/// Rows of the embedding of a curve parameter `t`; the first two are the
/// plotted coordinates.
fn embed(t: f64, shift: f64) -> [f64; 6] {
    [t, 1.2 * t.powi(3) - t + shift, t * t, t.powi(3), 0.5 * t.powi(4) - t * t, t * t - 0.6 * t]
}

/// `n` points on `y = 1.2t³ − t + shift`, `t` uniform in `[−1, 1]`, keeping
/// the first `dims` (at most six) coordinates of the polynomial lift.
pub fn curve(n: usize, shift: f64, dims: usize, rng: &mut impl Rng) -> Matrix {
    let mut m = Matrix::zeros(dims, n);
    for j in 0..n {
        let row = embed(rng.random_range(-1.0..1.0), shift);
        m.column_mut(j).copy_from_slice(&row[..dims]);
    }
    m
}

#[wasm_bindgen]
pub struct DenoiseDemo {
    clean: Vec<f64>,
    noisy: Vec<f64>,
    denoised: Vec<f64>,
    noisy_rmse: f64,
    denoised_rmse: f64,
}

#[wasm_bindgen]
impl DenoiseDemo {
    #[wasm_bindgen(getter)]
    pub fn clean(&self) -> Vec<f64> {
        self.clean.clone()
    }
    #[wasm_bindgen(getter)]
    pub fn noisy(&self) -> Vec<f64> {
        self.noisy.clone()
    }
    #[wasm_bindgen(getter)]
    pub fn denoised(&self) -> Vec<f64> {
        self.denoised.clone()
    }
    #[wasm_bindgen(getter, js_name = noisyRmse)]
    pub fn noisy_rmse(&self) -> f64 {
        self.noisy_rmse
    }
    #[wasm_bindgen(getter, js_name = denoisedRmse)]
    pub fn denoised_rmse(&self) -> f64 {
        self.denoised_rmse
    }
}

pub fn run_denoise(points: usize, rho: f64, atoms: usize, iters: usize, seed: u64) -> rnlmf::Result<DenoiseDemo> {
    let mut rng = seeded_rng(seed);
    let x = curve(points, 0.0, 6, &mut rng);
    let xhat = inject_sparse_gaussian(&x, rho, 1.0, seed.wrapping_add(1))?.xhat;
    let cfg = RnlmfConfig { d: atoms, max_iters: iters, seed, lambda_e: 3e-3, ..RnlmfConfig::default() };
    let model = fit(&xhat, &cfg)?;
    Ok(DenoiseDemo {
        noisy_rmse: rmse(&x, &xhat)?,
        denoised_rmse: rmse(&x, &model.x_clean)?,
        clean: flatten(&x),
        noisy: flatten(&xhat),
        denoised: flatten(&model.x_clean),
    })
}

/// Corrupts a fraction `rho` of the coordinates of a sampled curve and
/// denoises it with `atoms` dictionary atoms.
#[wasm_bindgen(js_name = denoiseCurve)]
pub fn denoise_curve(points: usize, rho: f64, atoms: usize, iters: usize, seed: u64) -> Result<DenoiseDemo, JsError> {
    run_denoise(points, rho, atoms, iters, seed).map_err(to_js)
}

/// Absolute remainder and its bound for truncation degrees `1..=max_q` of the
/// one-dimensional kernel series at `(x, y)`, interleaved as
/// `[r₁, b₁, r₂, b₂, …]`. Bounds are `NaN` where they do not apply.
#[wasm_bindgen(js_name = seriesRemainders)]
pub fn series_remainders(x: f64, y: f64, sigma: f64, c: f64, max_q: u32) -> Vec<f64> {
    (1..=max_q)
        .flat_map(|q| {
            let r = series_truncation_check(&[x], &[y], sigma, c, q);
            [r.remainder.abs(), if r.bound_applies { r.bound } else { f64::NAN }]
        })
        .collect()
}

#[wasm_bindgen]
pub struct ClusterDemo {
    points: Vec<f64>,
    labels: Vec<u32>,
    error: f64,
}

#[wasm_bindgen]
impl ClusterDemo {
    #[wasm_bindgen(getter)]
    pub fn points(&self) -> Vec<f64> {
        self.points.clone()
    }
    #[wasm_bindgen(getter)]
    pub fn labels(&self) -> Vec<u32> {
        self.labels.clone()
    }
    /// Fraction of points assigned to the wrong curve.
    #[wasm_bindgen(getter)]
    pub fn error(&self) -> f64 {
        self.error
    }
}

pub fn run_cluster(per_curve: usize, gap: f64, kappa: usize, seed: u64) -> rnlmf::Result<ClusterDemo> {
    let mut rng = seeded_rng(seed);
    let a = curve(per_curve, 0.0, 2, &mut rng);
    let b = curve(per_curve, gap, 2, &mut rng);
    let mut x = Matrix::zeros(a.nrows(), 2 * per_curve);
    let mut truth = Vec::with_capacity(2 * per_curve);
    for j in 0..per_curve {
        x.set_column(2 * j, &a.column(j));
        x.set_column(2 * j + 1, &b.column(j));
        truth.extend([0, 1]);
    }
    let cfg = RnlmfConfig { d: 40, max_iters: 150, seed, ..RnlmfConfig::default() };
    let (res, _) = cluster(&x, &cfg, &ClusteringConfig { seed, ..ClusteringConfig::new(2, kappa) })?;
    Ok(ClusterDemo {
        error: clustering_error(&res.labels, &truth, 2)?,
        labels: res.labels.iter().map(|&l| l as u32).collect(),
        points: flatten(&x),
    })
}

/// Samples two vertically shifted copies of the planar curve and clusters the
/// points from their codes.
#[wasm_bindgen(js_name = clusterCurves)]
pub fn cluster_curves(per_curve: usize, gap: f64, kappa: usize, seed: u64) -> Result<ClusterDemo, JsError> {
    run_cluster(per_curve, gap, kappa, seed).map_err(to_js)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn denoising_improves_the_curve() {
        let demo = run_denoise(200, 0.2, 20, 150, 1).unwrap();
        assert!(demo.denoised_rmse < 0.5 * demo.noisy_rmse);
        assert_eq!(demo.clean.len(), 400);
    }

    #[test]
    fn series_output_is_interleaved() {
        let v = series_remainders(0.5, -0.3, 2.0, 0.5, 6);
        assert_eq!(v.len(), 12);
        for pair in v.chunks(2) {
            assert!(pair[0] <= pair[1]);
        }
        assert!(v[10] < v[0]);
    }

    #[test]
    fn separated_curves_cluster() {
        let demo = run_cluster(80, 1.0, 8, 2).unwrap();
        assert!(demo.error < 0.1);
        assert_eq!(demo.labels.len(), 160);
    }
}
