//! Warm-started regularization paths on a geometric lambda grid.

use serde::{Deserialize, Serialize};

use super::mm::{fit_with, lambda_max, Algorithm};
use super::{FitResult, SolverConfig};
use crate::error::{Error, Result};
use crate::model::Likelihood;
use crate::standardize::Standardizer;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathConfig {
    pub n_lambda: usize,
    /// `lambda_min / lambda_max`. Defaults to `1e-4` when `n > p`, else `0.05`.
    pub lambda_min_ratio: Option<f64>,
    /// Explicit decreasing grid; overrides the two fields above.
    pub lambdas: Option<Vec<f64>>,
}

impl Default for PathConfig {
    fn default() -> Self {
        Self {
            n_lambda: 100,
            lambda_min_ratio: None,
            lambdas: None,
        }
    }
}

/// `n_lambda` values from `lambda_max` down to `ratio * lambda_max`, equally
/// spaced on the log scale.
pub fn lambda_grid(lambda_max: f64, ratio: f64, n_lambda: usize) -> Result<Vec<f64>> {
    if !(lambda_max.is_finite() && lambda_max > 0.0) {
        return Err(Error::InvalidConfig(format!("lambda_max must be positive, got {lambda_max}")));
    }
    if !(ratio > 0.0 && ratio < 1.0) {
        return Err(Error::InvalidConfig(format!("lambda_min_ratio must be in (0,1), got {ratio}")));
    }
    if n_lambda == 0 {
        return Err(Error::InvalidConfig("n_lambda must be at least 1".into()));
    }
    if n_lambda == 1 {
        return Ok(vec![lambda_max]);
    }
    let step = ratio.ln() / (n_lambda - 1) as f64;
    Ok((0..n_lambda)
        .map(|k| {
            if k == n_lambda - 1 {
                lambda_max * ratio
            } else {
                lambda_max * (step * k as f64).exp()
            }
        })
        .collect())
}

impl PathConfig {
    /// Resolves the grid for a concrete data set.
    pub fn grid<L: Likelihood>(&self, data: &L, sd: &Standardizer) -> Result<Vec<f64>> {
        if let Some(l) = &self.lambdas {
            if l.is_empty() {
                return Err(Error::InvalidConfig("empty lambda grid".into()));
            }
            if l.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
                return Err(Error::InvalidConfig("lambda values must be finite and >= 0".into()));
            }
            if l.windows(2).any(|w| w[1] > w[0]) {
                return Err(Error::InvalidConfig("lambda grid must be non-increasing".into()));
            }
            return Ok(l.clone());
        }
        let ratio = self
            .lambda_min_ratio
            .unwrap_or(if data.n() > data.p() { 1e-4 } else { 0.05 });
        let lmax = lambda_max(data, sd)?;
        if lmax == 0.0 {
            // every group is already orthogonal to the null residual
            return Ok(vec![0.0]);
        }
        lambda_grid(lmax, ratio, self.n_lambda)
    }
}

/// Fits every lambda in the grid, each warm-started from the previous
/// solution. The first fit starts at the intercept-only model.
pub fn fit_path<L: Likelihood>(
    data: &L,
    sd: &Standardizer,
    path: &PathConfig,
    cfg: &SolverConfig,
    algorithm: Algorithm,
) -> Result<Vec<FitResult>> {
    let grid = path.grid(data, sd)?;
    let mut fits: Vec<FitResult> = Vec::with_capacity(grid.len());
    for (k, &lambda) in grid.iter().enumerate() {
        let warm = fits.last().map(|f| f.theta.as_slice());
        let prev = if k > 0 { Some(grid[k - 1]) } else { None };
        let f = fit_with(data, sd, lambda, warm, cfg, algorithm, prev)?;
        log::debug!(
            "lambda {:>3} = {:.4e}: {} active groups, {} outer iterations",
            k,
            lambda,
            f.active_groups.len(),
            f.outer_iters
        );
        fits.push(f);
    }
    Ok(fits)
}
