//! Inverse solvers: ADMM with total-variation regularization and a
//! per-block minimum-norm least-squares baseline.

mod admm;
mod dct;
mod lsq;
mod system;
mod tv;

pub use admm::{admm_tv_system, reconstruct_admm_tv};
pub use lsq::{block_lsq_system, min_norm_planes, reconstruct_block_lsq};
pub use system::BlockSystem;
pub use tv::{gradient, gradient_adjoint, tv, tv_plane, TvFlavor};

use serde::{Deserialize, Serialize};

use crate::domain::Image;
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdmmTvParams {
    /// TV weight.
    pub lambda: f64,
    /// Augmented-Lagrangian penalty.
    pub rho: f64,
    pub max_iterations: usize,
    /// Threshold on the RMS primal and dual residuals.
    pub tolerance: f64,
    pub flavor: TvFlavor,
}

impl Default for AdmmTvParams {
    fn default() -> Self {
        Self {
            lambda: 0.5,
            rho: 4.0,
            max_iterations: 200,
            tolerance: 1e-4,
            flavor: TvFlavor::Anisotropic,
        }
    }
}

impl AdmmTvParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.lambda.is_finite() && self.lambda >= 0.0) {
            return Err(Error::Config(format!("lambda must be >= 0, got {}", self.lambda)));
        }
        if !(self.rho.is_finite() && self.rho > 0.0) {
            return Err(Error::Config(format!("rho must be > 0, got {}", self.rho)));
        }
        if self.max_iterations == 0 {
            return Err(Error::Config("max_iterations must be >= 1".into()));
        }
        if !(self.tolerance.is_finite() && self.tolerance > 0.0) {
            return Err(Error::Config(format!("tolerance must be > 0, got {}", self.tolerance)));
        }
        Ok(())
    }
}

#[derive(Clone, Debug)]
pub struct ReconstructionResult {
    /// Estimate, clamped to `[0, 1]`.
    pub image: Image,
    pub iterations: usize,
    /// Both residuals fell below tolerance before the iteration cap.
    pub converged: bool,
    /// RMS primal residual per iteration.
    pub primal_residual: Vec<f64>,
    /// RMS dual residual per iteration.
    pub dual_residual: Vec<f64>,
    /// `sum ||Phi x - y||^2 + lambda TV(x)` per iteration, before clamping.
    pub objective: Vec<f64>,
    /// RMS of `Phi x_hat - y` for the returned (clamped) estimate.
    pub data_residual: f64,
}

impl ReconstructionResult {
    pub fn final_primal(&self) -> f64 {
        *self.primal_residual.last().expect("trace is never empty")
    }

    pub fn final_dual(&self) -> f64 {
        *self.dual_residual.last().expect("trace is never empty")
    }
}
