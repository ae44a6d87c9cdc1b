//! The RBF factorization model: objective, gradients, block updates, the
//! fitting loop and the out-of-sample transform.

mod config;
mod objective;
mod solver;
mod updates;

pub use config::{PenaltyC, PenaltyE, RnlmfConfig};
pub use objective::{grad_d, grad_e, objective, penalty_c_value, penalty_e_value, IterationWorkspace};
pub use solver::{fit, transform, FitTrace, RnlmfModel, Transformed};
pub use updates::{update_c, update_d, update_e};
