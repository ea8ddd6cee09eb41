//! Block coordinate descent for
//! `min_nu (1/2n) |u - Q nu|^2 + 4 lambda sum_g w_g |nu_g|`.
//!
//! The dense solver multiplies by the stored `Q_g`. The sparse solver works
//! with raw `X_g`, so its residual drifts from the true one by a constant
//! vector within a cycle; the drift is removed once at the end of the cycle.

use super::{norm2, soft_threshold, SolverConfig};
use crate::design::Design;
use crate::error::{check_len, Error, Result};
use crate::standardize::{StorageMode, Standardizer};

/// One step at a time access to a block solver.
pub trait BlockSolver {
    fn n_groups(&self) -> usize;

    /// Exact minimization over the unpenalized intercept.
    fn update_intercept(&mut self);

    /// `n^{-1} Q_g^T r` at the current (corrected) residual.
    fn block_gradient(&self, j: usize) -> Vec<f64>;

    /// Block update with threshold `t`; returns `|nu_g' - nu_g|`.
    fn update_block(&mut self, j: usize, t: f64) -> f64;

    fn end_cycle(&mut self);

    fn nu(&self) -> &[f64];

    fn into_nu(self) -> Vec<f64>;
}

pub struct DenseBcd<'a> {
    x: &'a Design,
    sd: &'a Standardizer,
    nu: Vec<f64>,
    r: Vec<f64>,
}

impl<'a> DenseBcd<'a> {
    pub fn new(x: &'a Design, sd: &'a Standardizer, u: &[f64], nu0: &[f64]) -> Result<Self> {
        check_inputs(sd, u, nu0)?;
        if sd.mode() != StorageMode::Dense {
            return Err(Error::InvalidConfig("dense BCD needs a dense standardizer".into()));
        }
        let fitted = sd.fitted(x, nu0)?;
        let r = u.iter().zip(&fitted).map(|(a, b)| a - b).collect();
        Ok(Self {
            x,
            sd,
            nu: nu0.to_vec(),
            r,
        })
    }

    pub fn residual(&self) -> &[f64] {
        &self.r
    }
}

impl BlockSolver for DenseBcd<'_> {
    fn n_groups(&self) -> usize {
        self.sd.n_groups()
    }

    fn update_intercept(&mut self) {
        let shift = self.r.iter().sum::<f64>() / self.r.len() as f64;
        self.nu[0] += shift;
        for v in &mut self.r {
            *v -= shift;
        }
    }

    fn block_gradient(&self, j: usize) -> Vec<f64> {
        let n = self.r.len() as f64;
        // stored Q ignores the residual sum
        self.sd
            .q_transpose(self.x, j, &self.r, 0.0)
            .into_iter()
            .map(|v| v / n)
            .collect()
    }

    fn update_block(&mut self, j: usize, t: f64) -> f64 {
        let n = self.r.len() as f64;
        let old = self.sd.gather(j, &self.nu);
        let z: Vec<f64> = self
            .sd
            .q_transpose(self.x, j, &self.r, 0.0)
            .iter()
            .zip(&old)
            .map(|(g, v)| g / n + v)
            .collect();
        let new = soft_threshold(&z, t);
        let diff: Vec<f64> = old.iter().zip(&new).map(|(a, b)| a - b).collect();
        let change = norm2(&diff);
        if change > 0.0 {
            self.sd.q_axpy(self.x, j, &diff, &mut self.r);
            self.sd.scatter(j, &new, &mut self.nu);
        }
        change
    }

    fn end_cycle(&mut self) {}

    fn nu(&self) -> &[f64] {
        &self.nu
    }

    fn into_nu(self) -> Vec<f64> {
        self.nu
    }
}

pub struct SparseBcd<'a> {
    x: &'a Design,
    sd: &'a Standardizer,
    nu: Vec<f64>,
    r: Vec<f64>,
    r_sum: f64,
    pending: f64,
}

impl<'a> SparseBcd<'a> {
    pub fn new(x: &'a Design, sd: &'a Standardizer, u: &[f64], nu0: &[f64]) -> Result<Self> {
        check_inputs(sd, u, nu0)?;
        check_len("design rows", sd.n(), x.nrows())?;
        let fitted = sd.fitted(x, nu0)?;
        let r: Vec<f64> = u.iter().zip(&fitted).map(|(a, b)| a - b).collect();
        let r_sum = r.iter().sum();
        Ok(Self {
            x,
            sd,
            nu: nu0.to_vec(),
            r,
            r_sum,
            pending: 0.0,
        })
    }

    /// Working residual, which exceeds the true residual by
    /// `pending_shift()` in every entry until the cycle ends.
    pub fn residual(&self) -> &[f64] {
        &self.r
    }

    /// Accumulated `sum_g a_g` since the last correction.
    pub fn pending_shift(&self) -> f64 {
        self.pending
    }
}

impl BlockSolver for SparseBcd<'_> {
    fn n_groups(&self) -> usize {
        self.sd.n_groups()
    }

    fn update_intercept(&mut self) {
        let n = self.r.len() as f64;
        let shift = self.r_sum / n - self.pending;
        self.nu[0] += shift;
        for v in &mut self.r {
            *v -= shift;
        }
        self.r_sum -= shift * n;
    }

    fn block_gradient(&self, j: usize) -> Vec<f64> {
        let n = self.r.len() as f64;
        self.sd
            .q_transpose(self.x, j, &self.r, self.r_sum)
            .into_iter()
            .map(|v| v / n)
            .collect()
    }

    fn update_block(&mut self, j: usize, t: f64) -> f64 {
        let n = self.r.len() as f64;
        let old = self.sd.gather(j, &self.nu);
        let z: Vec<f64> = self
            .block_gradient(j)
            .iter()
            .zip(&old)
            .map(|(g, v)| g + v)
            .collect();
        let new = soft_threshold(&z, t);
        let diff: Vec<f64> = old.iter().zip(&new).map(|(a, b)| a - b).collect();
        let change = norm2(&diff);
        if change > 0.0 {
            let block = self.sd.block(j);
            let k = block.size();
            let rinv = block.r_inv();
            // d = R^{-1} (nu - nu'), r += X_g d, a_g = mean_g^T d
            let d: Vec<f64> = (0..k)
                .map(|row| (row..k).map(|c| rinv[row * k + c] * diff[c]).sum())
                .collect();
            for (&c, &dc) in block.columns().iter().zip(&d) {
                if dc != 0.0 {
                    self.x.col_axpy(c, dc, &mut self.r);
                }
            }
            let a: f64 = block.means().iter().zip(&d).map(|(m, v)| m * v).sum();
            self.pending += a;
            self.r_sum += n * a;
            self.sd.scatter(j, &new, &mut self.nu);
        }
        change
    }

    fn end_cycle(&mut self) {
        if self.pending != 0.0 {
            let shift = self.pending;
            for v in &mut self.r {
                *v -= shift;
            }
            self.pending = 0.0;
        }
        self.r_sum = self.r.iter().sum();
    }

    fn nu(&self) -> &[f64] {
        &self.nu
    }

    fn into_nu(self) -> Vec<f64> {
        self.nu
    }
}

fn check_inputs(sd: &Standardizer, u: &[f64], nu0: &[f64]) -> Result<()> {
    check_len("working response", sd.n(), u.len())?;
    check_len("standardized coefficients", sd.p(), nu0.len())?;
    if u.iter().chain(nu0).any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("working response or coefficients"));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct BcdResult {
    pub nu: Vec<f64>,
    pub cycles: usize,
    pub converged: bool,
}

/// Sequential strong-rule screen for one BCD call.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Screen {
    pub prev_lambda: f64,
}

/// Runs cycles to convergence. With a screen, groups failing the strong rule
/// are skipped until a KKT sweep over them finds a violation.
pub(crate) fn run<S: BlockSolver>(
    solver: &mut S,
    sd: &Standardizer,
    lambda: f64,
    cfg: &SolverConfig,
    screen: Option<Screen>,
) -> (usize, bool) {
    solver.update_intercept();
    let groups = solver.n_groups();
    let thresholds: Vec<f64> = (0..groups).map(|j| 4.0 * lambda * sd.weight(j)).collect();
    let mut working: Vec<bool> = match screen {
        None => vec![true; groups],
        Some(s) => (0..groups)
            .map(|j| {
                let active = sd.gather(j, solver.nu()).iter().any(|&v| v != 0.0);
                let cut = 4.0 * sd.weight(j) * (2.0 * lambda - s.prev_lambda);
                active || norm2(&solver.block_gradient(j)) >= cut
            })
            .collect(),
    };
    let sizes: Vec<f64> = (0..groups).map(|j| (sd.block(j).size() as f64).sqrt()).collect();
    let mut cycles = 0;
    while cycles < cfg.max_inner_iters {
        let mut worst: f64 = 0.0;
        for j in 0..groups {
            if working[j] {
                let change = solver.update_block(j, thresholds[j]);
                worst = worst.max(change / sizes[j]);
            }
        }
        solver.end_cycle();
        cycles += 1;
        if worst < cfg.inner_tol {
            let mut admitted = false;
            for j in 0..groups {
                if !working[j] && norm2(&solver.block_gradient(j)) > thresholds[j] {
                    working[j] = true;
                    admitted = true;
                }
            }
            if !admitted {
                return (cycles, true);
            }
        }
    }
    (cycles, false)
}

/// Dense BCD (materialized `Q`).
pub fn bcd_dense(
    x: &Design,
    sd: &Standardizer,
    u: &[f64],
    lambda: f64,
    nu0: &[f64],
    cfg: &SolverConfig,
) -> Result<BcdResult> {
    check_lambda(lambda)?;
    let mut s = DenseBcd::new(x, sd, u, nu0)?;
    let (cycles, converged) = run(&mut s, sd, lambda, cfg, None);
    Ok(BcdResult {
        nu: s.into_nu(),
        cycles,
        converged,
    })
}

/// Sparse BCD working directly with `X`.
pub fn bcd_sparse(
    x: &Design,
    sd: &Standardizer,
    u: &[f64],
    lambda: f64,
    nu0: &[f64],
    cfg: &SolverConfig,
) -> Result<BcdResult> {
    check_lambda(lambda)?;
    let mut s = SparseBcd::new(x, sd, u, nu0)?;
    let (cycles, converged) = run(&mut s, sd, lambda, cfg, None);
    Ok(BcdResult {
        nu: s.into_nu(),
        cycles,
        converged,
    })
}

pub(crate) fn check_lambda(lambda: f64) -> Result<()> {
    if !(lambda.is_finite() && lambda >= 0.0) {
        return Err(Error::InvalidConfig(format!("lambda must be finite and >= 0, got {lambda}")));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::design::CscMatrix;
    use crate::standardize::GroupSpec;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn setup(seed: u64, n: usize, m: usize) -> (Design, Vec<f64>, ChaCha8Rng) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let data: Vec<f64> = (0..n * m).map(|_| rng.random_range(-1.0..1.0)).collect();
        let x = Design::dense_from_rows(n, m, &data).unwrap();
        let u: Vec<f64> = (0..n).map(|_| rng.random_range(-2.0..2.0)).collect();
        (x, u, rng)
    }

    fn quad_objective(x: &Design, sd: &Standardizer, u: &[f64], nu: &[f64], lambda: f64) -> f64 {
        let fit = sd.fitted(x, nu).unwrap();
        let n = u.len() as f64;
        let rss: f64 = u.iter().zip(&fit).map(|(a, b)| (a - b).powi(2)).sum();
        let pen: f64 = (0..sd.n_groups())
            .map(|j| sd.weight(j) * norm2(&sd.gather(j, nu)))
            .sum();
        rss / (2.0 * n) + 4.0 * lambda * pen
    }

    // Proximal gradient on the same problem, independent of the block
    // updates: step 1 works because the Lipschitz constant of the smooth part
    // is at most the largest eigenvalue of Q^T Q / n, bounded by J.
    fn proximal_gradient(x: &Design, sd: &Standardizer, u: &[f64], lambda: f64, iters: usize) -> Vec<f64> {
        let n = u.len() as f64;
        let p = sd.p();
        let step = 1.0 / sd.n_groups().max(1) as f64;
        let mut nu = vec![0.0; p];
        nu[0] = u.iter().sum::<f64>() / n;
        for _ in 0..iters {
            let fit = sd.fitted(x, &nu).unwrap();
            let r: Vec<f64> = u.iter().zip(&fit).map(|(a, b)| a - b).collect();
            let sum: f64 = r.iter().sum();
            for j in 0..sd.n_groups() {
                let g: Vec<f64> = sd.q_transpose(x, j, &r, sum).iter().map(|v| v / n).collect();
                let cur = sd.gather(j, &nu);
                let z: Vec<f64> = cur.iter().zip(&g).map(|(a, b)| a + step * b).collect();
                let new = soft_threshold(&z, step * 4.0 * lambda * sd.weight(j));
                sd.scatter(j, &new, &mut nu);
            }
        }
        nu
    }

    #[test]
    fn large_lambda_zeroes_every_block() {
        let groups = GroupSpec::new(vec![vec![0, 1], vec![2]], None).unwrap();
        let (x, u, _) = setup(1, 30, 3);
        let sd = Standardizer::build(&x, &groups, StorageMode::Dense).unwrap();
        let n = 30.0;
        let ubar = u.iter().sum::<f64>() / n;
        let centered: Vec<f64> = u.iter().map(|v| v - ubar).collect();
        let lambda_loc = (0..2)
            .map(|j| norm2(&sd.q_transpose(&x, j, &centered, 0.0)) / n / (4.0 * sd.weight(j)))
            .fold(0.0, f64::max);
        let res = bcd_dense(&x, &sd, &u, lambda_loc, &[0.0; 4], &SolverConfig::default()).unwrap();
        assert!(res.converged);
        assert_eq!(&res.nu[1..], &[0.0, 0.0, 0.0]);
        assert!((res.nu[0] - ubar).abs() < 1e-14);
        let just_below = bcd_dense(&x, &sd, &u, 0.99 * lambda_loc, &[0.0; 4], &SolverConfig::default()).unwrap();
        assert!(just_below.nu[1..].iter().any(|&v| v != 0.0));
    }

    #[test]
    fn zero_lambda_orthogonal_design_is_least_squares() {
        // centered orthogonal columns: Q is X scaled, blocks are orthogonal
        let x = Design::dense_from_rows(4, 2, &[1.0, 1.0, 1.0, -1.0, -1.0, 1.0, -1.0, -1.0]).unwrap();
        let sd = Standardizer::build(&x, &GroupSpec::singletons(2), StorageMode::Dense).unwrap();
        let u = [3.0, -1.0, 2.0, 0.5];
        let res = bcd_dense(&x, &sd, &u, 0.0, &[0.0; 3], &SolverConfig::default()).unwrap();
        let mut expected = vec![u.iter().sum::<f64>() / 4.0];
        for j in 0..2 {
            expected.push(sd.q_transpose(&x, j, &u, 0.0)[0] / 4.0);
        }
        for (a, b) in res.nu.iter().zip(&expected) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn matches_proximal_gradient_reference() {
        let groups = GroupSpec::new(vec![vec![0, 1, 2], vec![3, 4, 5]], None).unwrap();
        let (x, u, _) = setup(7, 40, 6);
        let sd = Standardizer::build(&x, &groups, StorageMode::Dense).unwrap();
        let lambda = 0.02;
        let cfg = SolverConfig {
            inner_tol: 1e-13,
            ..SolverConfig::default()
        };
        let res = bcd_dense(&x, &sd, &u, lambda, &[0.0; 7], &cfg).unwrap();
        let reference = proximal_gradient(&x, &sd, &u, lambda, 20_000);
        let a = quad_objective(&x, &sd, &u, &res.nu, lambda);
        let b = quad_objective(&x, &sd, &u, &reference, lambda);
        assert!((a - b).abs() < 1e-8, "{a} vs {b}");
        assert!(res.nu[1..].iter().any(|&v| v != 0.0));
    }

    #[test]
    fn sparse_solver_matches_dense_solver() {
        let groups = GroupSpec::new(vec![vec![0, 3, 4], vec![1], vec![2, 5]], None).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let n = 60;
        let mut trip = Vec::new();
        for c in 0..6 {
            for r in 0..n {
                if rng.random_bool(0.2) {
                    trip.push((r, c, rng.random_range(0.5..2.0)));
                }
            }
        }
        let x = Design::Sparse(CscMatrix::from_triplets(n, 6, &trip).unwrap());
        let u: Vec<f64> = (0..n).map(|_| rng.random_range(-2.0..2.0)).collect();
        let dense_sd = Standardizer::build(&x, &groups, StorageMode::Dense).unwrap();
        let sparse_sd = Standardizer::build(&x, &groups, StorageMode::Sparse).unwrap();
        let cfg = SolverConfig {
            inner_tol: 1e-12,
            ..SolverConfig::default()
        };
        for lambda in [0.0, 0.01, 0.05] {
            let nu0: Vec<f64> = (0..7).map(|_| rng.random_range(-0.5..0.5)).collect();
            let a = bcd_dense(&x, &dense_sd, &u, lambda, &nu0, &cfg).unwrap();
            let b = bcd_sparse(&x, &sparse_sd, &u, lambda, &nu0, &cfg).unwrap();
            assert_eq!(a.cycles, b.cycles);
            for (p, q) in a.nu.iter().zip(&b.nu) {
                assert!((p - q).abs() < 1e-10, "{p} vs {q}");
            }
        }
    }

    #[test]
    fn sparse_residual_drift_is_the_pending_constant() {
        // n = 4, two single-column groups, one cycle traced by hand
        let x = Design::dense_from_rows(4, 2, &[1.0, 0.0, 0.0, 2.0, 3.0, 1.0, 0.0, 0.0]).unwrap();
        let groups = GroupSpec::singletons(2);
        let dsd = Standardizer::build(&x, &groups, StorageMode::Dense).unwrap();
        let ssd = Standardizer::build(&x, &groups, StorageMode::Sparse).unwrap();
        let u = [1.0, -1.0, 2.0, 0.0];
        let nu0 = [0.0, 0.3, -0.2];
        let mut dense = DenseBcd::new(&x, &dsd, &u, &nu0).unwrap();
        let mut sparse = SparseBcd::new(&x, &ssd, &u, &nu0).unwrap();
        dense.update_intercept();
        sparse.update_intercept();
        let mut a_sum = 0.0;
        for j in 0..2 {
            let before = sparse.nu()[1 + j];
            dense.update_block(j, 0.01);
            sparse.update_block(j, 0.01);
            let after = sparse.nu()[1 + j];
            let b = ssd.block(j);
            a_sum += b.means()[0] * b.r_inv()[0] * (before - after);
            assert!((sparse.pending_shift() - a_sum).abs() < 1e-15);
            for (rs, rd) in sparse.residual().iter().zip(dense.residual()) {
                assert!((rs - rd - a_sum).abs() < 1e-14);
            }
        }
        assert!(a_sum != 0.0);
        sparse.end_cycle();
        for (rs, rd) in sparse.residual().iter().zip(dense.residual()) {
            assert!((rs - rd).abs() < 1e-14);
        }
    }

    #[test]
    fn iteration_cap_flags_non_convergence() {
        let groups = GroupSpec::new(vec![vec![0, 1], vec![2, 3]], None).unwrap();
        let (x, u, _) = setup(3, 30, 4);
        let sd = Standardizer::build(&x, &groups, StorageMode::Dense).unwrap();
        let cfg = SolverConfig {
            inner_tol: 1e-300,
            max_inner_iters: 2,
            ..SolverConfig::default()
        };
        let res = bcd_dense(&x, &sd, &u, 0.001, &[0.0; 5], &cfg).unwrap();
        assert!(!res.converged);
        assert_eq!(res.cycles, 2);
    }

    #[test]
    fn rejects_wrong_mode_and_lengths() {
        let groups = GroupSpec::singletons(2);
        let (x, u, _) = setup(2, 10, 2);
        let sparse = Standardizer::build(&x, &groups, StorageMode::Sparse).unwrap();
        assert!(bcd_dense(&x, &sparse, &u, 0.1, &[0.0; 3], &SolverConfig::default()).is_err());
        assert!(bcd_sparse(&x, &sparse, &u[..5], 0.1, &[0.0; 3], &SolverConfig::default()).is_err());
        assert!(bcd_sparse(&x, &sparse, &u, -1.0, &[0.0; 3], &SolverConfig::default()).is_err());
    }
}
