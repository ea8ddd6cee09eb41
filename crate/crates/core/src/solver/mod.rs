//! Penalized fitting: block coordinate descent for the quadratic subproblem,
//! the outer majorization loops, and regularization paths.

mod bcd;
mod mm;
mod path;

pub use bcd::{bcd_dense, bcd_sparse, BcdResult, BlockSolver, DenseBcd, SparseBcd};
pub use mm::{
    em_fit, fit, kkt_check, lambda_max, objective, penalty, pulasso_fit, Algorithm, Majorizer,
};
pub use path::{fit_path, lambda_grid, PathConfig};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    /// BCD stops when the largest per-group update `|dnu_g| / sqrt(|g|)` falls below this.
    pub inner_tol: f64,
    /// Outer loop stops once the relative objective change falls below this
    /// and the KKT residual below ten times this.
    pub outer_tol: f64,
    pub max_inner_iters: usize,
    pub max_outer_iters: usize,
    pub use_strong_rules: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            inner_tol: 1e-7,
            outer_tol: 1e-7,
            max_inner_iters: 100_000,
            max_outer_iters: 10_000,
            use_strong_rules: true,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.inner_tol > 0.0 && self.outer_tol > 0.0) {
            return Err(Error::InvalidConfig("tolerances must be positive".into()));
        }
        if self.max_inner_iters == 0 || self.max_outer_iters == 0 {
            return Err(Error::InvalidConfig("iteration caps must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub lambda: f64,
    /// Original-scale coefficients, intercept first.
    pub theta: Vec<f64>,
    /// Orthonormal-scale coefficients.
    pub nu: Vec<f64>,
    pub objective: f64,
    pub outer_iters: usize,
    pub inner_iters: usize,
    pub converged: bool,
    /// Indices of penalized groups with a nonzero block.
    pub active_groups: Vec<usize>,
    /// Objective at the starting point and after every outer iteration.
    pub trace: Vec<f64>,
    pub kkt: f64,
}

/// Group soft-thresholding `S(z, t)`; the block is zeroed when `|z| <= t`.
pub fn soft_threshold(z: &[f64], t: f64) -> Vec<f64> {
    let norm = z.iter().map(|v| v * v).sum::<f64>().sqrt();
    if norm > t {
        let f = (norm - t) / norm;
        z.iter().map(|v| v * f).collect()
    } else {
        vec![0.0; z.len()]
    }
}

pub(crate) fn norm2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}
