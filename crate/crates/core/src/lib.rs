//! Robust non-linear matrix factorization (RNLMF).
//!
//! A noisy data matrix `X̂ = X + E` is modelled by factoring the RBF feature
//! image of its clean part, `φ(X̂ − E) ≈ φ(D) C`, while a sparse (entrywise or
//! column-wise) or dense noise term `E` is estimated alongside the dictionary
//! `D` and codes `C`. The crate provides:
//!
//! * [`kernels`]: RBF/polynomial kernel matrices, the kernel-width heuristic,
//!   feature-space nuclear norms and the RBF/polynomial series check.
//! * [`prox`]: soft thresholding, singular value thresholding, column
//!   shrinkage and the ridge solve shared by the block updates.
//! * [`rnlmf`]: the objective, its gradients, the three block updates, the
//!   fitting loop and the out-of-sample transform.
//! * [`clustering`]: self-expressive affinities from the codes, spectral
//!   clustering and clustering error.
//! * [`datagen`]: the union-of-polynomial-manifolds generator, noise
//!   injectors and error metrics.
//! * [`rpca`]: robust PCA by inexact augmented Lagrangian, used as a baseline.
//!
//! Matrices are [`nalgebra::DMatrix<f64>`] with data points stored as columns.

pub mod clustering;
pub mod datagen;
mod error;
pub mod kernels;
pub mod linalg;
pub mod prox;
pub mod rnlmf;
pub mod rpca;

pub use error::{Error, Result};

/// Dense real matrix; data points are columns.
pub type Matrix = nalgebra::DMatrix<f64>;

pub use clustering::{ClusteringConfig, ClusteringResult};
pub use datagen::{NoiseKind, NoiseSpec, SynthSpec};
pub use kernels::{KernelSpec, SeriesCheckReport};
pub use rnlmf::{FitTrace, PenaltyC, PenaltyE, RnlmfConfig, RnlmfModel};
pub use rpca::{RpcaConfig, RpcaResult};
