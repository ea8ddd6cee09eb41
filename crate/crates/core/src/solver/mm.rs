//! Outer loops. Both algorithms start each iteration with the E-step
//! `yhat(theta_m)` and majorize the complete-data loss with the Hessian bound
//! `W <= I/4`, which yields the working response `u = 4 (yhat - mu*) + X theta`.
//!
//! * QM-EM takes a single majorized step per E-step.
//! * Regularized EM iterates majorized steps with `yhat` frozen until the
//!   M-step (a penalized logistic regression with offset `b`) is solved.

use serde::{Deserialize, Serialize};

use super::bcd::{check_lambda, run, Screen};
use super::{norm2, DenseBcd, FitResult, SolverConfig, SparseBcd};
use crate::error::{check_len, Error, Result};
use crate::model::Likelihood;
use crate::standardize::{StorageMode, Standardizer};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Algorithm {
    /// One quadratic-majorization step per E-step.
    QmEm,
    /// Full penalized M-step per E-step.
    Em,
}

/// `lambda * sum_g w_g |nu_g|`; the intercept is unpenalized.
pub fn penalty(sd: &Standardizer, nu: &[f64], lambda: f64) -> f64 {
    lambda
        * (0..sd.n_groups())
            .map(|j| sd.weight(j) * norm2(&sd.gather(j, nu)))
            .sum::<f64>()
}

/// Penalized objective at orthonormal-scale coefficients `nu`.
pub fn objective<L: Likelihood>(data: &L, sd: &Standardizer, nu: &[f64], lambda: f64) -> Result<f64> {
    let theta = sd.from_standardized(nu)?;
    Ok(data.loss(&theta)? + penalty(sd, nu, lambda))
}

fn check_compatible<L: Likelihood>(data: &L, sd: &Standardizer) -> Result<()> {
    check_len("standardizer samples", data.n(), sd.n())?;
    check_len("standardizer coefficients", data.p(), sd.p())
}

/// Group scores `n^{-1} Q_g^T r` for every penalized group.
fn group_scores<L: Likelihood>(data: &L, sd: &Standardizer, r: &[f64]) -> Vec<Vec<f64>> {
    let n = r.len() as f64;
    let sum: f64 = r.iter().sum();
    (0..sd.n_groups())
        .map(|j| {
            sd.q_transpose(data.design(), j, r, sum)
                .into_iter()
                .map(|v| v / n)
                .collect()
        })
        .collect()
}

fn kkt_from_residual<L: Likelihood>(data: &L, sd: &Standardizer, nu: &[f64], r: &[f64], lambda: f64) -> f64 {
    let n = r.len() as f64;
    let mut worst = (r.iter().sum::<f64>() / n).abs();
    for (j, g) in group_scores(data, sd, r).iter().enumerate() {
        let block = sd.gather(j, nu);
        let bn = norm2(&block);
        let t = 4.0 * lambda * sd.weight(j);
        let v = if bn > 0.0 {
            let diff: Vec<f64> = g.iter().zip(&block).map(|(gi, bi)| gi - t * bi / bn).collect();
            norm2(&diff)
        } else {
            (norm2(g) - t).max(0.0)
        };
        worst = worst.max(v);
    }
    worst
}

fn majorized_residual<L: Likelihood>(data: &L, yhat: &[f64], t: &[f64]) -> Vec<f64> {
    data.mu_star_linear(t)
        .iter()
        .zip(yhat)
        .map(|(m, y)| 4.0 * (y - m))
        .collect()
}

/// Largest stationarity violation of the penalized problem at `nu`,
/// measured on the quadratic subproblem built at the fitted point itself.
pub fn kkt_check<L: Likelihood>(nu: &[f64], sd: &Standardizer, data: &L, lambda: f64) -> Result<f64> {
    check_compatible(data, sd)?;
    let theta = sd.from_standardized(nu)?;
    let t = data.linear_predictor(&theta)?;
    let (_, r) = data.loss_and_residual(&t);
    Ok(kkt_from_residual(data, sd, nu, &r, lambda))
}

/// Smallest lambda at which every penalized group is zero, rounded up by a
/// relative `1e-12`: the BCD recomputes the same scores along a different
/// rounding path, and at an exact tie a fit at `lambda_max` must stay null.
pub fn lambda_max<L: Likelihood>(data: &L, sd: &Standardizer) -> Result<f64> {
    check_compatible(data, sd)?;
    let t = vec![data.null_intercept(); data.n()];
    let (_, mut r) = data.loss_and_residual(&t);
    let mean = r.iter().sum::<f64>() / r.len() as f64;
    for v in &mut r {
        *v -= mean;
    }
    Ok(group_scores(data, sd, &r)
        .iter()
        .enumerate()
        .map(|(j, g)| norm2(g) / (4.0 * sd.weight(j)))
        .fold(0.0, f64::max)
        * (1.0 + 1e-12))
}

/// The complete-data loss `-Q(.; theta_m)` and its quadratic majorizer at a
/// fixed expansion point.
pub struct Majorizer<'a, L: Likelihood> {
    data: &'a L,
    yhat: Vec<f64>,
    t_m: Vec<f64>,
    base: f64,
    slope: Vec<f64>,
}

impl<'a, L: Likelihood> Majorizer<'a, L> {
    pub fn new(data: &'a L, theta_m: &[f64]) -> Result<Self> {
        let t_m = data.linear_predictor(theta_m)?;
        let yhat = data.e_step_linear(&t_m);
        let mu = data.mu_star_linear(&t_m);
        let base = data.complete_loss_linear(&yhat, &t_m);
        let slope = yhat.iter().zip(&mu).map(|(y, m)| y - m).collect();
        Ok(Self {
            data,
            yhat,
            t_m,
            base,
            slope,
        })
    }

    /// `-Q(theta; theta_m)`.
    pub fn complete_loss(&self, theta: &[f64]) -> Result<f64> {
        let t = self.data.linear_predictor(theta)?;
        Ok(self.data.complete_loss_linear(&self.yhat, &t))
    }

    /// `-Qbar(theta; theta_m)`, the quadratic upper bound.
    pub fn surrogate(&self, theta: &[f64]) -> Result<f64> {
        let t = self.data.linear_predictor(theta)?;
        let n = t.len() as f64;
        let mut lin = 0.0;
        let mut quad = 0.0;
        for ((ti, tm), s) in t.iter().zip(&self.t_m).zip(&self.slope) {
            let d = ti - tm;
            lin += s * d;
            quad += d * d;
        }
        Ok(self.base - lin / n + quad / (8.0 * n))
    }
}

enum Bcd<'a> {
    Dense(DenseBcd<'a>),
    Sparse(SparseBcd<'a>),
}

fn solve_quadratic<L: Likelihood>(
    data: &L,
    sd: &Standardizer,
    u: &[f64],
    nu: &[f64],
    lambda: f64,
    cfg: &SolverConfig,
    screen: Option<Screen>,
) -> Result<(Vec<f64>, usize, bool)> {
    let x = data.design();
    let solver = match sd.mode() {
        StorageMode::Dense => Bcd::Dense(DenseBcd::new(x, sd, u, nu)?),
        StorageMode::Sparse => Bcd::Sparse(SparseBcd::new(x, sd, u, nu)?),
    };
    Ok(match solver {
        Bcd::Dense(mut s) => {
            let (c, ok) = run(&mut s, sd, lambda, cfg, screen);
            (super::BlockSolver::into_nu(s), c, ok)
        }
        Bcd::Sparse(mut s) => {
            let (c, ok) = run(&mut s, sd, lambda, cfg, screen);
            (super::BlockSolver::into_nu(s), c, ok)
        }
    })
}

struct Iterate {
    nu: Vec<f64>,
    theta: Vec<f64>,
    t: Vec<f64>,
    objective: f64,
    /// Majorized residual `4 (yhat - mu*)` at this point.
    r: Vec<f64>,
}

impl Iterate {
    fn at<L: Likelihood>(data: &L, sd: &Standardizer, nu: Vec<f64>, lambda: f64) -> Result<Self> {
        let theta = sd.from_standardized(&nu)?;
        let t = data.linear_predictor(&theta)?;
        let (loss, r) = data.loss_and_residual(&t);
        Ok(Self {
            objective: loss + penalty(sd, &nu, lambda),
            nu,
            theta,
            t,
            r,
        })
    }
}

fn working_response(residual: &[f64], t: &[f64]) -> Vec<f64> {
    residual.iter().zip(t).map(|(r, ti)| r + ti).collect()
}

/// A converged fit has KKT residual below `KKT_SLACK * outer_tol`.
const KKT_SLACK: f64 = 10.0;

fn relative_change(prev: f64, next: f64) -> f64 {
    (next - prev).abs() / (1.0 + prev.abs())
}

/// Fits one lambda. `prev_lambda` enables strong-rule screening inside every
/// BCD call (ignored unless `cfg.use_strong_rules`).
pub(crate) fn fit_with<L: Likelihood>(
    data: &L,
    sd: &Standardizer,
    lambda: f64,
    theta0: Option<&[f64]>,
    cfg: &SolverConfig,
    algorithm: Algorithm,
    prev_lambda: Option<f64>,
) -> Result<FitResult> {
    cfg.validate()?;
    check_lambda(lambda)?;
    check_compatible(data, sd)?;
    let null = data.theta_null();
    let theta0 = theta0.map(<[f64]>::to_vec).unwrap_or_else(|| null.clone());
    check_len("initial coefficients", data.p(), theta0.len())?;

    let null_obj = Iterate::at(data, sd, sd.to_standardized(&null)?, lambda)?.objective;
    let mut cur = Iterate::at(data, sd, sd.to_standardized(&theta0)?, lambda)?;
    if !cur.objective.is_finite() || cur.objective > null_obj + 1e-12 * (1.0 + null_obj.abs()) {
        return Err(Error::InfeasibleStart {
            initial: cur.objective,
            null: null_obj,
        });
    }

    let screen = match (cfg.use_strong_rules, prev_lambda) {
        (true, Some(prev)) => Some(Screen { prev_lambda: prev }),
        _ => None,
    };
    let mut trace = vec![cur.objective];
    let mut inner_iters = 0;
    let mut outer_iters = 0;
    let mut converged = false;
    let mut kkt = f64::INFINITY;

    while outer_iters < cfg.max_outer_iters {
        outer_iters += 1;
        let next = match algorithm {
            Algorithm::QmEm => {
                let u = working_response(&cur.r, &cur.t);
                let (nu, cycles, _) = solve_quadratic(data, sd, &u, &cur.nu, lambda, cfg, screen)?;
                inner_iters += cycles;
                Iterate::at(data, sd, nu, lambda)?
            }
            Algorithm::Em => {
                let yhat = data.e_step_linear(&cur.t);
                let mut m = Iterate::at(data, sd, cur.nu.clone(), lambda)?;
                for _ in 0..cfg.max_outer_iters {
                    let u = working_response(&majorized_residual(data, &yhat, &m.t), &m.t);
                    let (nu, cycles, _) = solve_quadratic(data, sd, &u, &m.nu, lambda, cfg, screen)?;
                    inner_iters += cycles;
                    m = Iterate::at(data, sd, nu, lambda)?;
                    let r = majorized_residual(data, &yhat, &m.t);
                    if kkt_from_residual(data, sd, &m.nu, &r, lambda) < cfg.outer_tol {
                        break;
                    }
                }
                m
            }
        };
        let change = relative_change(cur.objective, next.objective);
        cur = next;
        trace.push(cur.objective);
        if change < cfg.outer_tol {
            kkt = kkt_from_residual(data, sd, &cur.nu, &cur.r, lambda);
            if kkt < KKT_SLACK * cfg.outer_tol {
                converged = true;
                break;
            }
        }
    }
    if !converged {
        kkt = kkt_from_residual(data, sd, &cur.nu, &cur.r, lambda);
        log::warn!("lambda {lambda:.4e}: no convergence after {outer_iters} outer iterations (kkt {kkt:.2e})");
    }

    let active_groups = (0..sd.n_groups())
        .filter(|&j| sd.gather(j, &cur.nu).iter().any(|&v| v != 0.0))
        .collect();
    Ok(FitResult {
        lambda,
        theta: cur.theta,
        nu: cur.nu,
        objective: cur.objective,
        outer_iters,
        inner_iters,
        converged,
        active_groups,
        trace,
        kkt,
    })
}

/// Fits with the chosen algorithm from `theta0` (default: intercept-only).
pub fn fit<L: Likelihood>(
    data: &L,
    sd: &Standardizer,
    lambda: f64,
    theta0: Option<&[f64]>,
    cfg: &SolverConfig,
    algorithm: Algorithm,
) -> Result<FitResult> {
    fit_with(data, sd, lambda, theta0, cfg, algorithm, None)
}

/// QM-EM fit at a single lambda.
pub fn pulasso_fit<L: Likelihood>(
    data: &L,
    sd: &Standardizer,
    lambda: f64,
    theta0: Option<&[f64]>,
    cfg: &SolverConfig,
) -> Result<FitResult> {
    fit(data, sd, lambda, theta0, cfg, Algorithm::QmEm)
}

/// Regularized EM fit at a single lambda.
pub fn em_fit<L: Likelihood>(
    data: &L,
    sd: &Standardizer,
    lambda: f64,
    theta0: Option<&[f64]>,
    cfg: &SolverConfig,
) -> Result<FitResult> {
    fit(data, sd, lambda, theta0, cfg, Algorithm::Em)
}
