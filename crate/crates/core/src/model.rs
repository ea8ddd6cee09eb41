//! The case-control presence-only logistic model.
//!
//! A labeled positive has `z = 1`; an unlabeled draw from the population has
//! `z = 0` and a hidden response `y`. With known prevalence `pi` the observed
//! likelihood of `z` is a GLM with natural parameter
//! `eta = log(n_l / (pi n_u)) + t - log(1 + e^t)`, `t = x^T theta`.

use crate::design::Design;
use crate::error::{check_len, Error, Result};

/// `log(1 + e^u)` without overflow.
pub fn log1pexp(u: f64) -> f64 {
    if u > 0.0 {
        u + (-u).exp().ln_1p()
    } else {
        u.exp().ln_1p()
    }
}

pub fn sigmoid(u: f64) -> f64 {
    if u >= 0.0 {
        1.0 / (1.0 + (-u).exp())
    } else {
        let e = u.exp();
        e / (1.0 + e)
    }
}

pub fn logit(p: f64) -> f64 {
    (p / (1.0 - p)).ln()
}

/// What the solvers need from a binary-response likelihood: a loss in terms
/// of the linear predictor, the E-step expectation of the full-data response,
/// and the offset of the full-data logistic model.
///
/// The quadratic majorization uses the working residual `4 (yhat - sigmoid(t + offset))`.
pub trait Likelihood: Sync {
    fn design(&self) -> &Design;

    /// Per-sample binary label used for stratification (z for PU data).
    fn labels(&self) -> &[bool];

    /// Offset `b` of the full-data logistic model.
    fn offset(&self) -> f64;

    /// Mean negative log-likelihood at linear predictor `t`.
    fn loss_linear(&self, t: &[f64]) -> f64;

    /// Conditional expectation of the full-data response at `t`.
    fn e_step_linear(&self, t: &[f64]) -> Vec<f64>;

    /// Intercept of the intercept-only stationary point.
    fn null_intercept(&self) -> f64;

    /// Restriction to a subset of samples, with counts recomputed.
    fn subset(&self, rows: &[usize]) -> Result<Self>
    where
        Self: Sized;

    fn n(&self) -> usize {
        self.design().nrows()
    }

    fn p(&self) -> usize {
        self.design().ncols() + 1
    }

    fn linear_predictor(&self, theta: &[f64]) -> Result<Vec<f64>> {
        check_theta(theta, self.p())?;
        self.design().linear_predictor(theta)
    }

    fn loss(&self, theta: &[f64]) -> Result<f64> {
        Ok(self.loss_linear(&self.linear_predictor(theta)?))
    }

    /// Loss at `t` together with the working residual `4 (yhat - mu*)`,
    /// both needed once per outer iteration.
    fn loss_and_residual(&self, t: &[f64]) -> (f64, Vec<f64>) {
        let r = self
            .e_step_linear(t)
            .iter()
            .zip(self.mu_star_linear(t))
            .map(|(y, m)| 4.0 * (y - m))
            .collect();
        (self.loss_linear(t), r)
    }

    fn mu_star_linear(&self, t: &[f64]) -> Vec<f64> {
        let b = self.offset();
        t.iter().map(|&ti| sigmoid(ti + b)).collect()
    }

    /// Loss of the full-data model at `t` with the responses replaced by `yhat`.
    fn complete_loss_linear(&self, yhat: &[f64], t: &[f64]) -> f64 {
        let b = self.offset();
        let s: f64 = yhat
            .iter()
            .zip(t)
            .map(|(&y, &ti)| y * (ti + b) - log1pexp(ti + b))
            .sum();
        -s / t.len() as f64
    }

    fn theta_null(&self) -> Vec<f64> {
        let mut theta = vec![0.0; self.p()];
        theta[0] = self.null_intercept();
        theta
    }
}

fn check_theta(theta: &[f64], p: usize) -> Result<()> {
    check_len("coefficients", p, theta.len())?;
    if theta.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("coefficients"));
    }
    Ok(())
}

/// Presence-only data under case-control sampling.
#[derive(Debug, Clone)]
pub struct PuDataset {
    x: Design,
    z: Vec<bool>,
    n_l: usize,
    n_u: usize,
    pi: f64,
}

impl PuDataset {
    pub fn new(x: Design, z: Vec<bool>, pi: f64) -> Result<Self> {
        check_len("labels", x.nrows(), z.len())?;
        if !(pi > 0.0 && pi < 1.0) {
            return Err(Error::InvalidPrevalence(pi));
        }
        if !x.all_finite() {
            return Err(Error::NonFinite("design matrix"));
        }
        let n_l = z.iter().filter(|&&v| v).count();
        let n_u = z.len() - n_l;
        if n_l == 0 || n_u == 0 {
            return Err(Error::DegenerateLabels {
                labeled: n_l,
                unlabeled: n_u,
            });
        }
        Ok(Self { x, z, n_l, n_u, pi })
    }

    pub fn x(&self) -> &Design {
        &self.x
    }

    pub fn z(&self) -> &[bool] {
        &self.z
    }

    pub fn n_labeled(&self) -> usize {
        self.n_l
    }

    pub fn n_unlabeled(&self) -> usize {
        self.n_u
    }

    pub fn pi(&self) -> f64 {
        self.pi
    }

    pub fn into_parts(self) -> (Design, Vec<bool>, f64) {
        (self.x, self.z, self.pi)
    }

    /// `log(n_l / (pi n_u))`.
    pub fn log_label_ratio(&self) -> f64 {
        (self.n_l as f64).ln() - self.pi.ln() - (self.n_u as f64).ln()
    }

    pub fn offset_b(&self) -> OffsetB {
        OffsetB::new(self.n_l, self.n_u, self.pi)
    }

    /// Natural parameter of the observed-label GLM for linear predictor `t`.
    pub fn eta(&self, t: f64) -> f64 {
        self.log_label_ratio() + t - log1pexp(t)
    }

    /// Analytic gradient of the observed loss.
    pub fn loss_grad(&self, theta: &[f64]) -> Result<Vec<f64>> {
        let t = self.linear_predictor(theta)?;
        let n = t.len() as f64;
        // weight_i = (mu(eta_i) - z_i) * f'(t_i) / n, f'(t) = 1 / (1 + e^t)
        let w: Vec<f64> = t
            .iter()
            .zip(&self.z)
            .map(|(&ti, &zi)| {
                let mu = sigmoid(self.eta(ti));
                (mu - f64::from(u8::from(zi))) * sigmoid(-ti) / n
            })
            .collect();
        let mut g = Vec::with_capacity(self.p());
        g.push(w.iter().sum());
        g.extend(self.x.transpose_times(&w));
        Ok(g)
    }

    pub fn e_step(&self, theta: &[f64]) -> Result<Vec<f64>> {
        Ok(self.e_step_linear(&self.linear_predictor(theta)?))
    }

    pub fn mu_star(&self, theta: &[f64]) -> Result<Vec<f64>> {
        Ok(self.mu_star_linear(&self.linear_predictor(theta)?))
    }

    /// Working response `4 (yhat - mu*) + X theta`.
    pub fn working_response(&self, theta: &[f64]) -> Result<Vec<f64>> {
        let t = self.linear_predictor(theta)?;
        let yhat = self.e_step_linear(&t);
        let mu = self.mu_star_linear(&t);
        Ok(t.iter()
            .zip(yhat.iter().zip(&mu))
            .map(|(&ti, (&y, &m))| 4.0 * (y - m) + ti)
            .collect())
    }

    /// `P(z = 1 | x, s = 1)` for a feature row that excludes the intercept.
    pub fn predict_prob_z(&self, theta: &[f64], x: &[f64]) -> Result<f64> {
        let t = dot_with_intercept(theta, x)?;
        Ok(sigmoid(self.eta(t)))
    }
}

impl Likelihood for PuDataset {
    fn design(&self) -> &Design {
        &self.x
    }

    fn labels(&self) -> &[bool] {
        &self.z
    }

    fn offset(&self) -> f64 {
        self.offset_b().value()
    }

    fn loss_linear(&self, t: &[f64]) -> f64 {
        let ratio = self.log_label_ratio();
        let s: f64 = t
            .iter()
            .zip(&self.z)
            .map(|(&ti, &zi)| {
                let eta = ratio + ti - log1pexp(ti);
                let lin = if zi { eta } else { 0.0 };
                lin - log1pexp(eta)
            })
            .sum();
        -s / t.len() as f64
    }

    // With e = exp(-|t|) and K = n_l / (pi n_u): exp(eta) = K sigmoid(t) and
    // exp(b) = 1 + K, so one exponential per sample covers loss, yhat and mu*.
    fn loss_and_residual(&self, t: &[f64]) -> (f64, Vec<f64>) {
        let ratio = self.log_label_ratio();
        let k = ratio.exp();
        let big = 1.0 + k;
        let mut r = Vec::with_capacity(t.len());
        let mut s = 0.0;
        for (&ti, &zi) in t.iter().zip(&self.z) {
            let e = (-ti.abs()).exp();
            let (sig, mu) = if ti >= 0.0 {
                (1.0 / (1.0 + e), big / (big + e))
            } else {
                (e / (1.0 + e), big * e / (1.0 + big * e))
            };
            s += (k * sig).ln_1p();
            if zi {
                // log sigmoid(t) = min(t, 0) - log(1 + e)
                s -= ratio + ti.min(0.0) - e.ln_1p();
                r.push(4.0 * (1.0 - mu));
            } else {
                r.push(4.0 * (sig - mu));
            }
        }
        (s / t.len() as f64, r)
    }

    fn e_step_linear(&self, t: &[f64]) -> Vec<f64> {
        t.iter()
            .zip(&self.z)
            .map(|(&ti, &zi)| if zi { 1.0 } else { sigmoid(ti) })
            .collect()
    }

    fn null_intercept(&self) -> f64 {
        logit(self.pi)
    }

    fn subset(&self, rows: &[usize]) -> Result<Self> {
        let z = rows.iter().map(|&r| self.z[r]).collect();
        PuDataset::new(self.x.select_rows(rows), z, self.pi)
    }
}

/// Logistic regression on fully observed labels, `P(y = 1) = sigmoid(t + b)`
/// for a fixed offset `b`; used for the oracle and naive baselines with the
/// same solver machinery.
#[derive(Debug, Clone)]
pub struct LogisticDataset {
    x: Design,
    y: Vec<bool>,
    b: f64,
}

impl LogisticDataset {
    pub fn new(x: Design, y: Vec<bool>) -> Result<Self> {
        check_len("labels", x.nrows(), y.len())?;
        if !x.all_finite() {
            return Err(Error::NonFinite("design matrix"));
        }
        let pos = y.iter().filter(|&&v| v).count();
        if pos == 0 || pos == y.len() {
            return Err(Error::DegenerateLabels {
                labeled: pos,
                unlabeled: y.len() - pos,
            });
        }
        Ok(Self { x, y, b: 0.0 })
    }

    /// True responses of a case-control sample: the sampling shifts the
    /// intercept by `b`, so fitting with the offset recovers population
    /// coefficients.
    pub fn with_offset(x: Design, y: Vec<bool>, b: OffsetB) -> Result<Self> {
        let mut d = Self::new(x, y)?;
        d.b = b.value();
        Ok(d)
    }

    pub fn y(&self) -> &[bool] {
        &self.y
    }
}

impl Likelihood for LogisticDataset {
    fn design(&self) -> &Design {
        &self.x
    }

    fn labels(&self) -> &[bool] {
        &self.y
    }

    fn offset(&self) -> f64 {
        self.b
    }

    fn loss_linear(&self, t: &[f64]) -> f64 {
        let s: f64 = t
            .iter()
            .zip(&self.y)
            .map(|(&ti, &yi)| {
                let v = ti + self.b;
                let lin = if yi { v } else { 0.0 };
                lin - log1pexp(v)
            })
            .sum();
        -s / t.len() as f64
    }

    fn loss_and_residual(&self, t: &[f64]) -> (f64, Vec<f64>) {
        let mut r = Vec::with_capacity(t.len());
        let mut s = 0.0;
        for (&ti, &yi) in t.iter().zip(&self.y) {
            let v = ti + self.b;
            let e = (-v.abs()).exp();
            let sig = if v >= 0.0 { 1.0 / (1.0 + e) } else { e / (1.0 + e) };
            let y = f64::from(u8::from(yi));
            s += v.max(0.0) + e.ln_1p() - y * v;
            r.push(4.0 * (y - sig));
        }
        (s / t.len() as f64, r)
    }

    fn e_step_linear(&self, _t: &[f64]) -> Vec<f64> {
        self.y.iter().map(|&v| f64::from(u8::from(v))).collect()
    }

    fn null_intercept(&self) -> f64 {
        let pos = self.y.iter().filter(|&&v| v).count() as f64;
        logit(pos / self.y.len() as f64) - self.b
    }

    fn subset(&self, rows: &[usize]) -> Result<Self> {
        let y = rows.iter().map(|&r| self.y[r]).collect();
        let mut d = LogisticDataset::new(self.x.select_rows(rows), y)?;
        d.b = self.b;
        Ok(d)
    }
}

/// Offset of the full-data logistic model, `log((n_l + pi n_u) / (pi n_u))`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OffsetB(f64);

impl OffsetB {
    pub fn new(n_l: usize, n_u: usize, pi: f64) -> Self {
        let nu = pi * n_u as f64;
        OffsetB(((n_l as f64 + nu) / nu).ln())
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

fn dot_with_intercept(theta: &[f64], x: &[f64]) -> Result<f64> {
    check_len("feature row", theta.len().saturating_sub(1), x.len())?;
    check_theta(theta, x.len() + 1)?;
    Ok(theta[0] + theta[1..].iter().zip(x).map(|(a, b)| a * b).sum::<f64>())
}

/// `P(y = 1 | x) = sigmoid(theta^T x)`; `x` excludes the intercept slot.
pub fn predict_prob_y(theta: &[f64], x: &[f64]) -> Result<f64> {
    Ok(sigmoid(dot_with_intercept(theta, x)?))
}

/// Intercept-only parameter `[logit(pi), 0, ..., 0]` of length `p`.
pub fn theta_null(pi: f64, p: usize) -> Result<Vec<f64>> {
    if !(pi > 0.0 && pi < 1.0) {
        return Err(Error::InvalidPrevalence(pi));
    }
    if p == 0 {
        return Err(Error::InvalidConfig("coefficient vector needs an intercept".into()));
    }
    let mut theta = vec![0.0; p];
    theta[0] = logit(pi);
    Ok(theta)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn pair(z: Vec<bool>, x: Vec<f64>, cols: usize, pi: f64) -> PuDataset {
        let n = z.len();
        PuDataset::new(Design::dense_from_rows(n, cols, &x).unwrap(), z, pi).unwrap()
    }

    fn random(rng: &mut ChaCha8Rng, n: usize, m: usize) -> (PuDataset, Vec<f64>) {
        let x: Vec<f64> = (0..n * m).map(|_| rng.random_range(-2.0..2.0)).collect();
        let mut z: Vec<bool> = (0..n).map(|_| rng.random_bool(0.4)).collect();
        z[0] = true;
        z[1] = false;
        let pi = rng.random_range(0.1..0.9);
        let theta: Vec<f64> = (0..=m).map(|_| rng.random_range(-1.5..1.5)).collect();
        (pair(z, x, m, pi), theta)
    }

    // Product form of the observed likelihood, evaluated independently of
    // the exponential-family route.
    fn product_form_loss(d: &PuDataset, theta: &[f64]) -> f64 {
        let c = d.n_labeled() as f64 / (d.pi() * d.n_unlabeled() as f64);
        let t = d.linear_predictor(theta).unwrap();
        let s: f64 = t
            .iter()
            .zip(d.z())
            .map(|(&ti, &zi)| {
                let denom = log1pexp(ti + (1.0 + c).ln());
                if zi {
                    c.ln() + ti - denom
                } else {
                    log1pexp(ti) - denom
                }
            })
            .sum();
        -s / t.len() as f64
    }

    #[test]
    fn loss_at_symmetric_zero_is_log2() {
        let d = pair(vec![true, false], vec![0.3, -1.2], 1, 0.5);
        assert_relative_eq!(d.loss(&[0.0, 0.0]).unwrap(), 2f64.ln(), epsilon = 1e-15);
    }

    #[test]
    fn loss_single_sample_hand_value() {
        // n_l = n_u = 1 so the second sample sets the counts; evaluate the
        // first sample's term alone: eta = ln 2 + 1 - ln(1 + e).
        let eta = 2f64.ln() + 1.0 - (1.0 + 1f64.exp()).ln();
        assert_relative_eq!(eta, 0.379_89, epsilon = 1e-5);
        // ln(1 + e^eta) - eta, evaluated by hand: 0.901022 - 0.379886
        let term = -(eta - log1pexp(eta));
        assert_relative_eq!(term, 0.521_136, epsilon = 1e-6);
        let d = pair(vec![true, false], vec![1.0, 0.0], 1, 0.5);
        assert_relative_eq!(d.eta(1.0), eta, epsilon = 1e-15);
        let t = [1.0];
        let single = -(d.eta(t[0]) - log1pexp(d.eta(t[0])));
        assert_relative_eq!(single, 0.521_136, epsilon = 1e-6);
    }

    #[test]
    fn both_loss_forms_agree() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..50 {
            let (d, theta) = random(&mut rng, 30, 4);
            let a = d.loss(&theta).unwrap();
            let b = product_form_loss(&d, &theta);
            assert_relative_eq!(a, b, max_relative = 1e-12);
        }
    }

    #[test]
    fn gradient_matches_central_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let (d, theta) = random(&mut rng, 20, 4);
        let g = d.loss_grad(&theta).unwrap();
        let h = 1e-5;
        for k in 0..theta.len() {
            let mut tp = theta.clone();
            let mut tm = theta.clone();
            tp[k] += h;
            tm[k] -= h;
            let fd = (d.loss(&tp).unwrap() - d.loss(&tm).unwrap()) / (2.0 * h);
            assert!((g[k] - fd).abs() <= 1e-5 * fd.abs().max(1e-3), "coord {k}: {} vs {fd}", g[k]);
        }
    }

    #[test]
    fn gradient_vanishes_on_zero_column() {
        let d = pair(vec![true, false, false], vec![1.0, 0.0, 2.0, 0.0, -1.0, 0.0], 2, 0.3);
        let g = d.loss_grad(&[0.2, 0.5, -0.7]).unwrap();
        assert_eq!(g[2], 0.0);
    }

    #[test]
    fn gradient_at_zero_with_balanced_counts() {
        let d = pair(vec![true, false], vec![1.5, -0.5], 1, 0.5);
        let g = d.loss_grad(&[0.0, 0.0]).unwrap();
        // (1/n) sum (1/2 - z_i)(1/2) x_i
        let expected1 = 0.5 * ((0.5 - 1.0) * 0.5 * 1.5 + (0.5 - 0.0) * 0.5 * -0.5);
        let expected0 = 0.5 * ((0.5 - 1.0) * 0.5 + 0.5 * 0.5);
        assert_relative_eq!(g[1], expected1, epsilon = 1e-15);
        assert_relative_eq!(g[0], expected0, epsilon = 1e-15);
    }

    #[test]
    fn e_step_and_mu_star_values() {
        let d = pair(vec![true, false, false], vec![0.0, 0.0, 1.0], 1, 0.5);
        let yhat = d.e_step(&[0.0, 3f64.ln()]).unwrap();
        assert_eq!(yhat[0], 1.0);
        assert_eq!(yhat[1], 0.5);
        assert_relative_eq!(yhat[2], 0.75, epsilon = 1e-15);

        let bal = pair(vec![true, false], vec![0.0, 0.0], 1, 0.5);
        assert_relative_eq!(bal.offset(), 3f64.ln(), epsilon = 1e-15);
        let mu = bal.mu_star(&[0.0, 0.0]).unwrap();
        assert_relative_eq!(mu[0], 0.75, epsilon = 1e-15);
        let mu = bal.mu_star(&[-bal.offset(), 0.0]).unwrap();
        assert_relative_eq!(mu[0], 0.5, epsilon = 1e-15);
        let mu = bal.mu_star(&[-800.0, 0.0]).unwrap();
        assert!(mu[0] < 1e-300);
    }

    #[test]
    fn working_response_trivial_cases() {
        let d = pair(vec![true, false], vec![0.4, -0.4], 1, 0.5);
        let u = d.working_response(&[0.0, 0.0]).unwrap();
        assert_relative_eq!(u[0], 1.0, epsilon = 1e-15);
        assert_relative_eq!(u[1], -1.0, epsilon = 1e-15);
    }

    #[test]
    fn working_response_composes_from_parts() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let (d, theta) = random(&mut rng, 25, 3);
        let u = d.working_response(&theta).unwrap();
        let t = d.linear_predictor(&theta).unwrap();
        let yhat = d.e_step(&theta).unwrap();
        let mu = d.mu_star(&theta).unwrap();
        for i in 0..25 {
            assert!((u[i] - t[i] - 4.0 * (yhat[i] - mu[i])).abs() < 1e-14);
            assert!((u[i] - t[i]).abs() <= 4.0);
        }
    }

    #[test]
    fn predictions() {
        assert_eq!(predict_prob_y(&[0.0, 1.0], &[0.0]).unwrap(), 0.5);
        assert_relative_eq!(predict_prob_y(&[3f64.ln(), 0.0], &[2.0]).unwrap(), 0.75, epsilon = 1e-15);
        let theta = [0.3, -1.1];
        let x = [0.7];
        let neg = [-0.3, 1.1];
        assert_relative_eq!(
            predict_prob_y(&theta, &x).unwrap(),
            1.0 - predict_prob_y(&neg, &x).unwrap(),
            epsilon = 1e-15
        );
        assert!(predict_prob_y(&theta, &[1.0, 2.0]).is_err());

        let d = pair(vec![true, false], vec![0.0, 0.0], 1, 0.5);
        assert_relative_eq!(d.predict_prob_z(&[0.0, 0.0], &[0.0]).unwrap(), 0.5, epsilon = 1e-15);
        let c = 2.0;
        let lim = d.predict_prob_z(&[40.0, 0.0], &[0.0]).unwrap();
        assert_relative_eq!(lim, c / (1.0 + c), epsilon = 1e-12);
    }

    #[test]
    fn prob_z_matches_glm_mean() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let (d, theta) = random(&mut rng, 10, 2);
        let c = d.n_labeled() as f64 / (d.pi() * d.n_unlabeled() as f64);
        for i in 0..10 {
            let row = d.x().row(i);
            let t = dot_with_intercept(&theta, &row).unwrap();
            let direct = c * t.exp() / (1.0 + (1.0 + c) * t.exp());
            let p = d.predict_prob_z(&theta, &row).unwrap();
            assert!((p - direct).abs() < 1e-14);
        }
    }

    #[test]
    fn theta_null_values() {
        assert_eq!(theta_null(0.5, 3).unwrap(), vec![0.0, 0.0, 0.0]);
        assert_relative_eq!(theta_null(0.75, 2).unwrap()[0], 3f64.ln(), epsilon = 1e-15);
        assert_relative_eq!(theta_null(0.25, 2).unwrap()[0], -(3f64.ln()), epsilon = 1e-15);
        assert!(theta_null(1.0, 2).is_err());
        assert!(theta_null(0.0, 2).is_err());
    }

    #[test]
    fn dataset_validation() {
        let x = Design::dense_from_rows(2, 1, &[0.0, 1.0]).unwrap();
        assert!(PuDataset::new(x.clone(), vec![true, true], 0.5).is_err());
        assert!(PuDataset::new(x.clone(), vec![true, false], 1.5).is_err());
        assert!(PuDataset::new(x.clone(), vec![true], 0.5).is_err());
        let bad = Design::dense_from_rows(2, 1, &[f64::NAN, 1.0]).unwrap();
        assert!(PuDataset::new(bad, vec![true, false], 0.5).is_err());
        let d = PuDataset::new(x, vec![true, false], 0.5).unwrap();
        assert!(d.loss(&[0.0, f64::INFINITY]).is_err());
        assert!(d.loss(&[0.0]).is_err());
    }

    #[test]
    fn stable_for_extreme_predictors() {
        let d = pair(vec![true, false], vec![1.0, -1.0], 1, 0.3);
        for s in [-800.0, 800.0] {
            assert!(d.loss(&[0.0, s]).unwrap().is_finite());
            assert!(d.loss_grad(&[0.0, s]).unwrap().iter().all(|g| g.is_finite()));
        }
    }

    fn separate_loss_and_residual<L: Likelihood>(d: &L, t: &[f64]) -> (f64, Vec<f64>) {
        let y = d.e_step_linear(t);
        let m = d.mu_star_linear(t);
        (d.loss_linear(t), y.iter().zip(&m).map(|(a, b)| 4.0 * (a - b)).collect())
    }

    #[test]
    fn fused_evaluation_matches_separate_parts() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for _ in 0..30 {
            let (d, _) = random(&mut rng, 40, 2);
            let mut t: Vec<f64> = (0..40).map(|_| rng.random_range(-30.0..30.0)).collect();
            t[0] = 700.0;
            t[1] = -700.0;
            t[2] = 0.0;
            let (loss, r) = d.loss_and_residual(&t);
            let (want, want_r) = separate_loss_and_residual(&d, &t);
            assert_relative_eq!(loss, want, max_relative = 1e-12);
            for (a, b) in r.iter().zip(&want_r) {
                assert!((a - b).abs() < 1e-13, "{a} vs {b}");
            }
            let y: Vec<bool> = (0..40).map(|i| d.z()[i] || i % 3 == 0).collect();
            let ld = LogisticDataset::with_offset(d.x().clone(), y, d.offset_b()).unwrap();
            let (loss, r) = ld.loss_and_residual(&t);
            let (want, want_r) = separate_loss_and_residual(&ld, &t);
            assert_relative_eq!(loss, want, max_relative = 1e-12);
            for (a, b) in r.iter().zip(&want_r) {
                assert!((a - b).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn offset_is_positive() {
        assert!(OffsetB::new(1, 1000, 0.99).value() > 0.0);
    }
}
