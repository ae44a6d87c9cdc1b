use std::fmt;
use std::str::FromStr;

use crate::error::ensure;
use crate::{Error, Result};

/// Regularizer on the codes `C`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PenaltyC {
    /// `½‖C‖_F²`, solved in closed form.
    #[default]
    FrobSq,
    /// `‖C‖₁`, proximal gradient step.
    L1,
    /// `‖C‖_*`, proximal gradient step.
    Nuclear,
}

/// Regularizer on the noise `E`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PenaltyE {
    /// `½‖E‖_F²` for dense Gaussian noise.
    FrobSq,
    /// `‖E‖₁` for entrywise sparse noise.
    #[default]
    L1,
    /// `‖E‖₂,₁` for column-wise corruption.
    L21,
}

impl FromStr for PenaltyC {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "frob" | "frobsq" | "fro" => Ok(PenaltyC::FrobSq),
            "l1" => Ok(PenaltyC::L1),
            "nuclear" | "nuc" => Ok(PenaltyC::Nuclear),
            other => Err(Error::InvalidParameter(format!("unknown penalty on C: {other}"))),
        }
    }
}

impl FromStr for PenaltyE {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "frob" | "frobsq" | "fro" => Ok(PenaltyE::FrobSq),
            "l1" => Ok(PenaltyE::L1),
            "l21" | "l2,1" => Ok(PenaltyE::L21),
            other => Err(Error::InvalidParameter(format!("unknown penalty on E: {other}"))),
        }
    }
}

impl fmt::Display for PenaltyC {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PenaltyC::FrobSq => "frob",
            PenaltyC::L1 => "l1",
            PenaltyC::Nuclear => "nuclear",
        })
    }
}

impl fmt::Display for PenaltyE {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PenaltyE::FrobSq => "frob",
            PenaltyE::L1 => "l1",
            PenaltyE::L21 => "l21",
        })
    }
}

/// Solver hyperparameters.
#[derive(Debug, Clone, PartialEq)]
pub struct RnlmfConfig {
    /// Number of dictionary atoms.
    pub d: usize,
    pub lambda_c: f64,
    pub lambda_e: f64,
    pub penalty_c: PenaltyC,
    pub penalty_e: PenaltyE,
    /// Multiplier applied to the mean pairwise distance to get the RBF width.
    pub sigma_scale: f64,
    /// Fixed RBF width; when `None` it is derived from the data.
    pub sigma: Option<f64>,
    /// Momentum on the dictionary step, in `[0, 1)`.
    pub eta: f64,
    /// Step-size divisor of the dictionary step, at least 1.
    pub tau_d: f64,
    /// Shift added to the dictionary preconditioner.
    pub mu: f64,
    /// Multiplier on the noise-step curvature estimate, at least 1.
    pub xi: f64,
    pub max_iters: usize,
    /// Stop when `|J_t − J_{t−1}| / (1 + |J_{t−1}|)` falls below this.
    pub tol: f64,
    /// Reject or shorten any block step that raises the objective.
    pub strict_descent: bool,
    pub seed: u64,
    /// Scale the dictionary step by `1/‖H‖₂` instead of solving with `H`.
    pub use_scaled_d_step: bool,
    /// Use `½‖C‖_F²` for this many initial iterations before `penalty_c`.
    pub switch_penalty_after: Option<usize>,
}

impl Default for RnlmfConfig {
    fn default() -> Self {
        Self {
            d: 20,
            lambda_c: 5e-3,
            lambda_e: 1e-3,
            penalty_c: PenaltyC::FrobSq,
            penalty_e: PenaltyE::L1,
            sigma_scale: 1.0,
            sigma: None,
            eta: 0.5,
            tau_d: 1.0,
            mu: 0.0,
            xi: 1.0,
            max_iters: 300,
            tol: 1e-8,
            strict_descent: false,
            seed: 0,
            use_scaled_d_step: false,
            switch_penalty_after: None,
        }
    }
}

impl RnlmfConfig {
    pub fn with_atoms(d: usize) -> Self {
        Self { d, ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |v: f64| v.is_finite() && v > 0.0;
        ensure(self.d >= 1, || "d must be at least 1".into())?;
        ensure(positive(self.lambda_c), || format!("lambda_c must be positive, got {}", self.lambda_c))?;
        ensure(positive(self.lambda_e), || format!("lambda_e must be positive, got {}", self.lambda_e))?;
        ensure(positive(self.sigma_scale), || {
            format!("sigma_scale must be positive, got {}", self.sigma_scale)
        })?;
        if let Some(s) = self.sigma {
            ensure(positive(s), || format!("sigma must be positive, got {s}"))?;
        }
        ensure((0.0..1.0).contains(&self.eta), || format!("eta must lie in [0, 1), got {}", self.eta))?;
        ensure(self.tau_d >= 1.0 && self.tau_d.is_finite(), || {
            format!("tau_d must be at least 1, got {}", self.tau_d)
        })?;
        ensure(self.mu >= 0.0 && self.mu.is_finite(), || format!("mu must be nonnegative, got {}", self.mu))?;
        ensure(self.xi >= 1.0 && self.xi.is_finite(), || format!("xi must be at least 1, got {}", self.xi))?;
        ensure(self.max_iters >= 1, || "max_iters must be at least 1".into())?;
        ensure(positive(self.tol), || format!("tol must be positive, got {}", self.tol))?;
        Ok(())
    }

    /// Penalty on `C` in force at (1-based) iteration `t`.
    pub fn penalty_c_at(&self, t: usize) -> PenaltyC {
        match self.switch_penalty_after {
            Some(warmup) if t <= warmup => PenaltyC::FrobSq,
            _ => self.penalty_c,
        }
    }
}
