//! Synthetic presence-only data and the simulation drivers built on it.
//!
//! Covariates come from the two-component Gaussian mixture
//! `0.5 N(mu1, Sigma) + 0.5 N(-mu1, Sigma)` with `mu1` supported on a random
//! active set `S` and `Sigma_ij = K rho^|i-j|`, scaled so `1_S' Sigma 1_S = s`.
//! Labeled samples are population positives collected by rejection; the
//! unlabeled set is a fresh population sample.

use rand::seq::index;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::design::Design;
use crate::error::{Error, Result};
use crate::evaluate::{cross_validate, f1_score, misclassification_rate, CvConfig};
use crate::model::{sigmoid, Likelihood, LogisticDataset, PuDataset};
use crate::rng::substream;
use crate::solver::{fit, Algorithm, FitResult, PathConfig, SolverConfig};
use crate::standardize::{GroupSpec, Standardizer, StorageMode};

const CALIBRATION_DRAWS: usize = 100_000;
const MAX_ATTEMPTS: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scheme {
    /// `y ~ Bernoulli(sigmoid(theta*' x))`.
    Logistic,
    /// `y` is the mixture component indicator.
    Misspecified,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub n_l: usize,
    pub n_u: usize,
    pub p: usize,
    pub s: usize,
    pub rho: f64,
    pub d: f64,
    pub scheme: Scheme,
    pub seed: u64,
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidConfig(m));
        if self.n_l == 0 || self.n_u == 0 {
            return bad("n_l and n_u must be positive".into());
        }
        if self.p == 0 || self.s > self.p {
            return bad(format!("need 0 <= s <= p and p >= 1, got s = {}, p = {}", self.s, self.p));
        }
        if !(0.0..1.0).contains(&self.rho) {
            return bad(format!("rho must be in [0, 1), got {}", self.rho));
        }
        if !(2.0 * self.d * self.d - 1.0 > 0.0) || !self.d.is_finite() {
            return bad(format!("separation d must exceed 1/sqrt(2), got {}", self.d));
        }
        Ok(())
    }
}

/// `K` with `sum_{i,j in S} K rho^|i-j| = |S|`.
pub fn k_rho(active: &[usize], rho: f64) -> f64 {
    if active.is_empty() {
        return 1.0;
    }
    active.len() as f64 / unit_signal(active, rho)
}

fn unit_signal(active: &[usize], rho: f64) -> f64 {
    let mut total = 0.0;
    for &i in active {
        for &j in active {
            total += rho.powi(i.abs_diff(j) as i32);
        }
    }
    total
}

/// `1_S' Sigma 1_S` for `Sigma_ij = k rho^|i-j|`.
pub fn signal_strength(active: &[usize], rho: f64, k: f64) -> f64 {
    k * unit_signal(active, rho)
}

/// `mu1` on the active set: i.i.d. normal with mean `sqrt((2d^2 - 1) / 8s)`
/// and standard deviation `1/sqrt(8s)`, so `E |mu1 - mu2|^2 = d^2`.
pub fn draw_mean(p: usize, active: &[usize], d: f64, rng: &mut ChaCha8Rng) -> Result<Vec<f64>> {
    let mut mu = vec![0.0; p];
    if active.is_empty() {
        return Ok(mu);
    }
    let s = active.len() as f64;
    let normal = Normal::new(((2.0 * d * d - 1.0) / (8.0 * s)).sqrt(), 1.0 / (8.0 * s).sqrt())
        .map_err(|e| Error::Simulation(e.to_string()))?;
    for &j in active {
        mu[j] = normal.sample(rng);
    }
    Ok(mu)
}

/// One drawn population: active set, component means and the true model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Population {
    pub p: usize,
    pub rho: f64,
    pub k: f64,
    pub scheme: Scheme,
    /// Sorted active indices (0-based columns).
    pub active: Vec<usize>,
    pub mu1: Vec<f64>,
    /// Intercept first; zero intercept and ones on the active set.
    pub theta_star: Vec<f64>,
}

impl Population {
    pub fn draw(cfg: &SimConfig, rng: &mut ChaCha8Rng) -> Result<Self> {
        cfg.validate()?;
        let mut active = index::sample(rng, cfg.p, cfg.s).into_vec();
        active.sort_unstable();
        let mu1 = draw_mean(cfg.p, &active, cfg.d, rng)?;
        let mut theta_star = vec![0.0; cfg.p + 1];
        for &j in &active {
            theta_star[1 + j] = 1.0;
        }
        Ok(Self {
            p: cfg.p,
            rho: cfg.rho,
            k: k_rho(&active, cfg.rho),
            scheme: cfg.scheme,
            active,
            mu1,
            theta_star,
        })
    }

    /// One covariate row and its true label.
    pub fn sample_one(&self, rng: &mut ChaCha8Rng, row: &mut [f64]) -> bool {
        let first = rng.random_bool(0.5);
        let sign = if first { 1.0 } else { -1.0 };
        let scale = self.k.sqrt();
        let innov = (1.0 - self.rho * self.rho).sqrt();
        let mut prev = 0.0;
        for (j, x) in row.iter_mut().enumerate() {
            let e: f64 = StandardNormal.sample(rng);
            let ar = if j == 0 { e } else { self.rho * prev + innov * e };
            prev = ar;
            *x = sign * self.mu1[j] + scale * ar;
        }
        match self.scheme {
            Scheme::Misspecified => first,
            Scheme::Logistic => {
                let t: f64 = self.active.iter().map(|&j| row[j]).sum();
                rng.random_bool(sigmoid(t))
            }
        }
    }

    /// `n` population rows (row-major) with their labels.
    pub fn sample(&self, n: usize, rng: &mut ChaCha8Rng) -> (Vec<f64>, Vec<bool>) {
        let mut rows = vec![0.0; n * self.p];
        let y = rows.chunks_mut(self.p).map(|r| self.sample_one(rng, r)).collect();
        (rows, y)
    }

    /// Empirical positive rate over a large calibration draw.
    pub fn calibrate_pi(&self, rng: &mut ChaCha8Rng) -> f64 {
        let mut row = vec![0.0; self.p];
        let pos = (0..CALIBRATION_DRAWS).filter(|_| self.sample_one(rng, &mut row)).count();
        pos as f64 / CALIBRATION_DRAWS as f64
    }

    /// Case-control sample: `n_l` positives by rejection, then `n_u` fresh
    /// population rows. Rows are ordered labeled first.
    pub fn case_control(
        &self,
        n_l: usize,
        n_u: usize,
        pi_hint: f64,
        rng: &mut ChaCha8Rng,
    ) -> Result<(Vec<f64>, Vec<bool>, Vec<bool>)> {
        let mut rows = Vec::with_capacity((n_l + n_u) * self.p);
        let mut y = Vec::with_capacity(n_l + n_u);
        let mut row = vec![0.0; self.p];
        let mut pool = ((n_l as f64 / pi_hint.max(1e-3)) * 1.2).ceil() as usize + 10;
        let mut attempts = 0;
        while y.len() < n_l {
            attempts += 1;
            if attempts > MAX_ATTEMPTS {
                return Err(Error::Simulation(format!(
                    "collected only {} of {n_l} labeled positives after {MAX_ATTEMPTS} candidate pools",
                    y.len()
                )));
            }
            for _ in 0..pool {
                if self.sample_one(rng, &mut row) {
                    rows.extend_from_slice(&row);
                    y.push(true);
                    if y.len() == n_l {
                        break;
                    }
                }
            }
            pool *= 2;
        }
        let (urows, uy) = self.sample(n_u, rng);
        rows.extend(urows);
        y.extend(uy);
        let z = (0..n_l + n_u).map(|i| i < n_l).collect();
        Ok((rows, z, y))
    }
}

/// A generated data set with everything needed for oracle evaluation.
#[derive(Debug, Clone)]
pub struct SimData {
    pub data: PuDataset,
    /// True labels of every row (labeled rows are all positive).
    pub y: Vec<bool>,
    /// `None` under the misspecified scheme.
    pub theta_star: Option<Vec<f64>>,
    pub active: Vec<usize>,
    pub pi: f64,
    pub population: Population,
}

/// Replicate `rep` of the configuration; each replicate draws its own
/// population.
pub fn gen_mixture_rep(cfg: &SimConfig, rep: u64) -> Result<SimData> {
    let population = Population::draw(cfg, &mut substream(cfg.seed, "population", rep))?;
    let pi = population.calibrate_pi(&mut substream(cfg.seed, "calibration", rep));
    if !(pi > 0.0 && pi < 1.0) {
        return Err(Error::Simulation(format!("calibrated prevalence {pi} is degenerate")));
    }
    let (rows, z, y) = population.case_control(cfg.n_l, cfg.n_u, pi, &mut substream(cfg.seed, "sample", rep))?;
    let x = Design::dense_from_rows(cfg.n_l + cfg.n_u, cfg.p, &rows)?;
    let theta_star = match cfg.scheme {
        Scheme::Logistic => Some(population.theta_star.clone()),
        Scheme::Misspecified => None,
    };
    Ok(SimData {
        data: PuDataset::new(x, z, pi)?,
        y,
        theta_star,
        active: population.active.clone(),
        pi,
        population,
    })
}

pub fn gen_mixture(cfg: &SimConfig) -> Result<SimData> {
    gen_mixture_rep(cfg, 0)
}

/// PU data from the logistic model with `X ~ N(0, I)`, `theta*` equal to one
/// on `s` random coordinates and `n_l = n_u = n / 2`. By symmetry of the
/// linear predictor the prevalence is exactly `1/2`.
pub fn gen_gaussian(n: usize, p: usize, s: usize, seed: u64, rep: u64) -> Result<(PuDataset, Vec<f64>)> {
    if s > p || n < 4 {
        return Err(Error::InvalidConfig(format!("need s <= p and n >= 4, got n = {n}, p = {p}, s = {s}")));
    }
    let mut rng = substream(seed, "gaussian", rep);
    let mut active = index::sample(&mut rng, p, s).into_vec();
    active.sort_unstable();
    let population = Population {
        p,
        rho: 0.0,
        k: 1.0,
        scheme: Scheme::Logistic,
        mu1: vec![0.0; p],
        theta_star: {
            let mut t = vec![0.0; p + 1];
            for &j in &active {
                t[1 + j] = 1.0;
            }
            t
        },
        active,
    };
    let n_l = n / 2;
    let (rows, z, _) = population.case_control(n_l, n - n_l, 0.5, &mut rng)?;
    let x = Design::dense_from_rows(n, p, &rows)?;
    Ok((PuDataset::new(x, z, 0.5)?, population.theta_star))
}

fn par_map<T: Send, F: Fn(u64) -> T + Sync>(reps: usize, jobs: usize, f: F) -> Result<Vec<T>> {
    if jobs <= 1 {
        return Ok((0..reps as u64).map(f).collect());
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| Error::InvalidConfig(e.to_string()))?;
    Ok(pool.install(|| (0..reps as u64).into_par_iter().map(&f).collect()))
}

fn mean_se(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    if values.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, f64::NAN);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

fn l2_error(theta: &[f64], truth: &[f64]) -> f64 {
    theta.iter().zip(truth).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MseOptions {
    pub p: usize,
    pub reps: usize,
    pub seed: u64,
    pub jobs: usize,
    pub solver: SolverConfig,
}

impl Default for MseOptions {
    fn default() -> Self {
        Self {
            p: 100,
            reps: 20,
            seed: 0,
            jobs: 1,
            solver: SolverConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MsePoint {
    pub s: usize,
    pub n: usize,
    pub c_s: f64,
    pub lambda: f64,
    /// `sqrt(s log p / n)`.
    pub rate: f64,
    pub mean_error: f64,
    pub se_error: f64,
    pub reps_ok: usize,
    pub dropped: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MseTable {
    pub p: usize,
    pub points: Vec<MsePoint>,
    /// Least-squares slope of mean error on rate through the origin.
    pub slope: f64,
    /// Uncentered R^2 of that fit.
    pub r_squared: f64,
}

/// Slope and uncentered R^2 of `y ~ b x` without intercept.
pub fn fit_through_origin(x: &[f64], y: &[f64]) -> (f64, f64) {
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| a * b).sum();
    let sxx: f64 = x.iter().map(|a| a * a).sum();
    let syy: f64 = y.iter().map(|b| b * b).sum();
    let slope = sxy / sxx;
    let rss: f64 = x.iter().zip(y).map(|(a, b)| (b - slope * a).powi(2)).sum();
    (slope, 1.0 - rss / syy)
}

fn mse_errors(n: usize, s: usize, lambda: f64, opts: &MseOptions, stream: u64) -> Result<Vec<Option<f64>>> {
    par_map(opts.reps, opts.jobs, |rep| {
        let run = || -> Result<f64> {
            let (data, truth) = gen_gaussian(n, opts.p, s, opts.seed ^ stream, rep)?;
            let sd = Standardizer::build(data.x(), &GroupSpec::singletons(opts.p), StorageMode::Dense)?;
            let f = fit(&data, &sd, lambda, None, &opts.solver, Algorithm::QmEm)?;
            Ok(l2_error(&f.theta, &truth))
        };
        match run() {
            Ok(e) => Some(e),
            Err(e) => {
                log::warn!("mse rep {rep} (n = {n}, s = {s}) dropped: {e}");
                None
            }
        }
    })
}

fn lambda_n(c_s: f64, p: usize, n: usize) -> f64 {
    c_s * ((p as f64).ln() / n as f64).sqrt()
}

fn point_stream(s: usize, n: usize) -> u64 {
    ((s as u64) << 32) ^ n as u64
}

/// Mean l2 error at `lambda_n = c_s sqrt(log p / n)` for every `(s, n)`;
/// `c_s[i]` belongs to `s_grid[i]`.
pub fn mse_experiment(s_grid: &[usize], n_grid: &[usize], c_s: &[f64], opts: &MseOptions) -> Result<MseTable> {
    if s_grid.is_empty() || n_grid.is_empty() || opts.reps == 0 {
        return Err(Error::InvalidConfig("grids must be non-empty and reps >= 1".into()));
    }
    if c_s.len() != s_grid.len() || c_s.iter().any(|c| !(c.is_finite() && *c >= 0.0)) {
        return Err(Error::InvalidConfig("need one finite c_s >= 0 per sparsity level".into()));
    }
    let mut points = Vec::new();
    for (&s, &c) in s_grid.iter().zip(c_s) {
        for &n in n_grid {
            let lambda = lambda_n(c, opts.p, n);
            let errs = mse_errors(n, s, lambda, opts, point_stream(s, n))?;
            let ok: Vec<f64> = errs.iter().flatten().copied().collect();
            let (mean_error, se_error) = mean_se(&ok);
            points.push(MsePoint {
                s,
                n,
                c_s: c,
                lambda,
                rate: (s as f64 * (opts.p as f64).ln() / n as f64).sqrt(),
                mean_error,
                se_error,
                reps_ok: ok.len(),
                dropped: errs.len() - ok.len(),
            });
        }
    }
    let (x, y): (Vec<f64>, Vec<f64>) = points
        .iter()
        .filter(|p| p.mean_error.is_finite())
        .map(|p| (p.rate, p.mean_error))
        .unzip();
    let (slope, r_squared) = fit_through_origin(&x, &y);
    Ok(MseTable {
        p: opts.p,
        points,
        slope,
        r_squared,
    })
}

/// Picks the `c_s` from `grid` with the smallest mean error on a pilot run
/// at sample size `n` (the pilot uses seeds disjoint from the experiment).
pub fn calibrate_cs(s: usize, n: usize, grid: &[f64], opts: &MseOptions) -> Result<f64> {
    if grid.is_empty() {
        return Err(Error::InvalidConfig("empty c_s grid".into()));
    }
    let pilot = MseOptions {
        seed: opts.seed ^ 0x5eed_5eed_5eed_5eed,
        ..opts.clone()
    };
    let mut best = (f64::INFINITY, grid[0]);
    for &c in grid {
        let errs = mse_errors(n, s, lambda_n(c, opts.p, n), &pilot, point_stream(s, n))?;
        let ok: Vec<f64> = errs.into_iter().flatten().collect();
        let (m, _) = mean_se(&ok);
        log::debug!("c_s = {c}: pilot mean error {m:.4}");
        if m < best.0 {
            best = (m, c);
        }
    }
    Ok(best.1)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Pulasso,
    /// Lasso logistic regression on the true labels.
    Oracle,
    /// Lasso logistic regression treating unlabeled as negative.
    Naive,
}

impl Method {
    pub const ALL: [Method; 3] = [Method::Pulasso, Method::Oracle, Method::Naive];

    pub fn name(self) -> &'static str {
        match self {
            Method::Pulasso => "pulasso",
            Method::Oracle => "oracle",
            Method::Naive => "naive",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassifyOptions {
    pub reps: usize,
    pub n_test: usize,
    pub folds: usize,
    pub jobs: usize,
    pub path: PathConfig,
    pub solver: SolverConfig,
}

impl Default for ClassifyOptions {
    fn default() -> Self {
        Self {
            reps: 50,
            n_test: 1000,
            folds: 10,
            jobs: 1,
            path: PathConfig::default(),
            solver: SolverConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodSummary {
    pub method: Method,
    pub misclassification_mean: f64,
    pub misclassification_se: f64,
    pub f1_mean: f64,
    pub f1_se: f64,
    pub reps_ok: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassificationCell {
    pub config: SimConfig,
    pub methods: Vec<MethodSummary>,
}

fn cv_fit<L: Likelihood>(data: &L, groups: &GroupSpec, opts: &ClassifyOptions, seed: u64) -> Result<FitResult> {
    let cv = CvConfig {
        folds: opts.folds,
        seed,
        ..CvConfig::default()
    };
    let res = cross_validate(data, groups, &opts.path, &opts.solver, &cv)?;
    let sd = Standardizer::build(data.design(), groups, StorageMode::Dense)?;
    // refit on the full data along the grid down to lambda_min for warm starts
    let path = PathConfig {
        lambdas: Some(res.lambdas[..=res.index_min].to_vec()),
        ..opts.path.clone()
    };
    let fits = crate::solver::fit_path(data, &sd, &path, &opts.solver, Algorithm::QmEm)?;
    Ok(fits.into_iter().last().expect("grid is non-empty"))
}

/// Misclassification and F1 of each method on a fresh test sample, at the
/// CV-selected `lambda_min`, for one replicate.
pub fn classification_rep(cfg: &SimConfig, rep: u64, opts: &ClassifyOptions) -> Result<Vec<(Method, f64, f64)>> {
    let sim = gen_mixture_rep(cfg, rep)?;
    let groups = GroupSpec::singletons(cfg.p);
    let (test_rows, test_y) = sim.population.sample(opts.n_test, &mut substream(cfg.seed, "test", rep));
    let test_x = Design::dense_from_rows(opts.n_test, cfg.p, &test_rows)?;
    let cv_seed = rand::Rng::random::<u64>(&mut substream(cfg.seed, "cv", rep));
    let x = sim.data.x().clone();
    let mut out = Vec::with_capacity(3);
    for method in Method::ALL {
        let fitted = match method {
            Method::Pulasso => cv_fit(&sim.data, &groups, opts, cv_seed)?,
            Method::Oracle => cv_fit(
                &LogisticDataset::with_offset(x.clone(), sim.y.clone(), sim.data.offset_b())?,
                &groups,
                opts,
                cv_seed,
            )?,
            Method::Naive => cv_fit(
                &LogisticDataset::new(x.clone(), sim.data.z().to_vec())?,
                &groups,
                opts,
                cv_seed,
            )?,
        };
        let pred: Vec<bool> = test_x
            .linear_predictor(&fitted.theta)?
            .iter()
            .map(|&t| t > 0.0)
            .collect();
        out.push((method, misclassification_rate(&pred, &test_y)?, f1_score(&pred, &test_y)?));
    }
    Ok(out)
}

/// Runs `opts.reps` replicates for every cell. Failed replicates are logged
/// and excluded from the summaries.
pub fn classification_experiment(cells: &[SimConfig], opts: &ClassifyOptions) -> Result<Vec<ClassificationCell>> {
    if opts.reps == 0 || opts.n_test == 0 {
        return Err(Error::InvalidConfig("reps and n_test must be positive".into()));
    }
    cells
        .iter()
        .map(|cfg| {
            cfg.validate()?;
            let reps = par_map(opts.reps, opts.jobs, |rep| match classification_rep(cfg, rep, opts) {
                Ok(r) => Some(r),
                Err(e) => {
                    log::warn!("classification rep {rep} dropped: {e}");
                    None
                }
            })?;
            let ok: Vec<_> = reps.into_iter().flatten().collect();
            let methods = Method::ALL
                .iter()
                .enumerate()
                .map(|(k, &method)| {
                    let mis: Vec<f64> = ok.iter().map(|r| r[k].1).collect();
                    let f1: Vec<f64> = ok.iter().map(|r| r[k].2).collect();
                    let (mm, ms) = mean_se(&mis);
                    let (fm, fs) = mean_se(&f1);
                    MethodSummary {
                        method,
                        misclassification_mean: mm,
                        misclassification_se: ms,
                        f1_mean: fm,
                        f1_se: fs,
                        reps_ok: ok.len(),
                    }
                })
                .collect();
            Ok(ClassificationCell {
                config: cfg.clone(),
                methods,
            })
        })
        .collect()
}
