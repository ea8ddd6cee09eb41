//! Cross-validation, PU-adjusted ROC analysis, classification metrics and
//! selection stability.

use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{check_len, Error, Result};
use crate::model::Likelihood;
use crate::rng::substream;
use crate::solver::{fit_path, Algorithm, FitResult, PathConfig, SolverConfig};
use crate::standardize::{GroupSpec, Standardizer, StorageMode};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvConfig {
    pub folds: usize,
    pub seed: u64,
    /// Worker threads for fold fits; 0 or 1 runs serially.
    pub jobs: usize,
    pub mode: StorageMode,
    pub algorithm: Algorithm,
}

impl Default for CvConfig {
    fn default() -> Self {
        Self {
            folds: 10,
            seed: 0,
            jobs: 1,
            mode: StorageMode::Dense,
            algorithm: Algorithm::QmEm,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvResult {
    pub lambdas: Vec<f64>,
    pub mean_deviance: Vec<f64>,
    pub se_deviance: Vec<f64>,
    /// `fold_deviance[k][i]`: held-out deviance of fold `k` at `lambdas[i]`.
    pub fold_deviance: Vec<Vec<f64>>,
    pub lambda_min: f64,
    pub lambda_1se: f64,
    pub index_min: usize,
    pub index_1se: usize,
    /// Fold of every sample.
    pub fold_of: Vec<usize>,
}

/// Stratified fold labels: each label class is shuffled separately and dealt
/// round-robin, so every fold gets `floor` or `ceil` of each class.
pub fn stratified_folds(labels: &[bool], k: usize, seed: u64) -> Result<Vec<usize>> {
    if k < 2 {
        return Err(Error::InvalidConfig(format!("need at least 2 folds, got {k}")));
    }
    let mut fold_of = vec![0; labels.len()];
    let mut next = 0;
    for (class, stream) in [(true, 0), (false, 1)] {
        let mut idx: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == class).collect();
        idx.shuffle(&mut substream(seed, "cv-folds", stream));
        for i in idx {
            fold_of[i] = next % k;
            next += 1;
        }
    }
    Ok(fold_of)
}

fn split(fold_of: &[usize], k: usize) -> (Vec<usize>, Vec<usize>) {
    (0..fold_of.len()).partition(|&i| fold_of[i] != k)
}

fn check_folds(labels: &[bool], fold_of: &[usize], k: usize) -> Result<()> {
    for f in 0..k {
        let (train, test) = split(fold_of, f);
        for (part, rows) in [("held-out", &test), ("training", &train)] {
            let pos = rows.iter().filter(|&&i| labels[i]).count();
            if pos == 0 || pos == rows.len() {
                return Err(Error::InvalidConfig(format!(
                    "fold {f}: {part} part has {pos} labeled of {} samples; both label classes are required",
                    rows.len()
                )));
            }
        }
    }
    Ok(())
}

fn run_folds<T, F>(k: usize, jobs: usize, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(usize) -> Result<T> + Sync,
{
    if jobs <= 1 {
        return (0..k).map(f).collect();
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| Error::InvalidConfig(e.to_string()))?;
    pool.install(|| (0..k).into_par_iter().map(&f).collect())
}

fn fit_training_fold<L: Likelihood>(
    data: &L,
    groups: &GroupSpec,
    train: &[usize],
    path: &PathConfig,
    solver: &SolverConfig,
    cv: &CvConfig,
) -> Result<(L, Vec<FitResult>)> {
    let d = data.subset(train)?;
    let sd = Standardizer::build(d.design(), groups, cv.mode)?;
    let fits = fit_path(&d, &sd, path, solver, cv.algorithm)?;
    Ok((d, fits))
}

/// K-fold cross-validation of the regularization path. The grid is fixed on
/// the full data and shared by all folds; the held-out criterion is the
/// deviance `2 n_k L(theta)` on each fold, using that fold's own label counts.
pub fn cross_validate<L: Likelihood>(
    data: &L,
    groups: &GroupSpec,
    path: &PathConfig,
    solver: &SolverConfig,
    cv: &CvConfig,
) -> Result<CvResult> {
    let fold_of = stratified_folds(data.labels(), cv.folds, cv.seed)?;
    check_folds(data.labels(), &fold_of, cv.folds)?;
    let full = Standardizer::build(data.design(), groups, cv.mode)?;
    let lambdas = path.grid(data, &full)?;
    let shared = PathConfig {
        lambdas: Some(lambdas.clone()),
        ..path.clone()
    };

    let fold_deviance = run_folds(cv.folds, cv.jobs, |f| {
        let (train, test) = split(&fold_of, f);
        let (_, fits) = fit_training_fold(data, groups, &train, &shared, solver, cv)?;
        let held = data.subset(&test)?;
        let n = test.len() as f64;
        fits.iter()
            .map(|fit| Ok(2.0 * n * held.loss(&fit.theta)?))
            .collect::<Result<Vec<f64>>>()
    })?;

    let k = cv.folds as f64;
    let mut mean_deviance = Vec::with_capacity(lambdas.len());
    let mut se_deviance = Vec::with_capacity(lambdas.len());
    for i in 0..lambdas.len() {
        let vals: Vec<f64> = fold_deviance.iter().map(|d| d[i]).collect();
        if vals.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("held-out deviance"));
        }
        let mean = vals.iter().sum::<f64>() / k;
        let var = vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (k - 1.0);
        mean_deviance.push(mean);
        se_deviance.push((var / k).sqrt());
    }
    let index_min = mean_deviance
        .iter()
        .enumerate()
        .fold(0, |best, (i, &v)| if v < mean_deviance[best] { i } else { best });
    let cut = mean_deviance[index_min] + se_deviance[index_min];
    // the grid is decreasing, so the first index under the cut is the largest lambda
    let index_1se = (0..=index_min).find(|&i| mean_deviance[i] <= cut).unwrap_or(index_min);
    Ok(CvResult {
        lambda_min: lambdas[index_min],
        lambda_1se: lambdas[index_1se],
        lambdas,
        mean_deviance,
        se_deviance,
        fold_deviance,
        index_min,
        index_1se,
        fold_of,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RocCurve {
    /// Decreasing; the first entry is `+inf` (nothing predicted positive).
    pub thresholds: Vec<f64>,
    pub tp: Vec<f64>,
    pub fp_naive: Vec<f64>,
    /// `(fp - pi tp) / (1 - pi)`, clipped to `[0, 1]`.
    pub fp_adj: Vec<f64>,
    pub auc_naive: f64,
    /// `(auc - pi/2) / (1 - pi)`, not clipped.
    pub auc_adj: f64,
}

/// ROC of scores against `z` with unlabeled samples counted as negatives,
/// plus the prevalence-corrected false positive rate and AUC. Tied scores
/// move together, so the trapezoid AUC equals the Mann-Whitney statistic
/// with ties counted one half.
pub fn adjusted_roc(scores: &[f64], z: &[bool], pi: f64) -> Result<RocCurve> {
    check_len("labels", scores.len(), z.len())?;
    if scores.iter().any(|s| !s.is_finite()) {
        return Err(Error::NonFinite("scores"));
    }
    if !(0.0..1.0).contains(&pi) {
        return Err(Error::InvalidPrevalence(pi));
    }
    let pos = z.iter().filter(|&&v| v).count();
    let neg = z.len() - pos;
    if pos == 0 || neg == 0 {
        return Err(Error::DegenerateLabels {
            labeled: pos,
            unlabeled: neg,
        });
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));

    let mut thresholds = vec![f64::INFINITY];
    let mut tp = vec![0.0];
    let mut fp_naive = vec![0.0];
    let (mut tp_count, mut fp_count) = (0usize, 0usize);
    let mut auc = 0.0;
    let mut i = 0;
    while i < order.len() {
        let s = scores[order[i]];
        while i < order.len() && scores[order[i]] == s {
            if z[order[i]] {
                tp_count += 1;
            } else {
                fp_count += 1;
            }
            i += 1;
        }
        let (t, f) = (tp_count as f64 / pos as f64, fp_count as f64 / neg as f64);
        auc += (f - fp_naive.last().unwrap()) * (t + tp.last().unwrap()) / 2.0;
        thresholds.push(s);
        tp.push(t);
        fp_naive.push(f);
    }
    let fp_adj = adjust_fp(&fp_naive, &tp, pi);
    Ok(RocCurve {
        thresholds,
        tp,
        fp_naive,
        fp_adj,
        auc_naive: auc,
        auc_adj: adjust_auc(auc, pi),
    })
}

fn adjust_fp(fp: &[f64], tp: &[f64], pi: f64) -> Vec<f64> {
    if pi == 0.0 {
        return fp.to_vec();
    }
    fp.iter()
        .zip(tp)
        .map(|(f, t)| ((f - pi * t) / (1.0 - pi)).clamp(0.0, 1.0))
        .collect()
}

/// `(auc - pi/2) / (1 - pi)`.
pub fn adjust_auc(auc: f64, pi: f64) -> f64 {
    if pi == 0.0 {
        auc
    } else {
        (auc - pi / 2.0) / (1.0 - pi)
    }
}

/// Plain ROC AUC against fully observed labels.
pub fn auc(scores: &[f64], labels: &[bool]) -> Result<f64> {
    Ok(adjusted_roc(scores, labels, 0.0)?.auc_naive)
}

pub fn misclassification_rate(pred: &[bool], truth: &[bool]) -> Result<f64> {
    check_len("predictions", truth.len(), pred.len())?;
    if truth.is_empty() {
        return Err(Error::InvalidConfig("no samples".into()));
    }
    let wrong = pred.iter().zip(truth).filter(|(a, b)| a != b).count();
    Ok(wrong as f64 / truth.len() as f64)
}

/// Harmonic mean of precision and recall; 0 when there are no true positives.
pub fn f1_score(pred: &[bool], truth: &[bool]) -> Result<f64> {
    check_len("predictions", truth.len(), pred.len())?;
    let tp = pred.iter().zip(truth).filter(|&(&a, &b)| a && b).count() as f64;
    if tp == 0.0 {
        return Ok(0.0);
    }
    let precision = tp / pred.iter().filter(|&&a| a).count() as f64;
    let recall = tp / truth.iter().filter(|&&b| b).count() as f64;
    Ok(2.0 * precision * recall / (precision + recall))
}

/// `1 - (|s| + |s'| - 2|s & s'|) / (|s| + |s'| - |s & s'|)`; two empty sets score 1.
pub fn stability_score(s: &[usize], s2: &[usize]) -> f64 {
    let a: BTreeSet<usize> = s.iter().copied().collect();
    let b: BTreeSet<usize> = s2.iter().copied().collect();
    let inter = a.intersection(&b).count() as f64;
    let total = (a.len() + b.len()) as f64;
    if total == 0.0 {
        return 1.0;
    }
    1.0 - (total - 2.0 * inter) / (total - inter)
}

/// Scores of every unordered pair of selections.
pub fn pairwise_stability(sets: &[Vec<usize>]) -> Vec<f64> {
    let mut out = Vec::new();
    for i in 0..sets.len() {
        for j in i + 1..sets.len() {
            out.push(stability_score(&sets[i], &sets[j]));
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Quartiles {
    pub min: f64,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub max: f64,
    pub mean: f64,
}

/// Five-number summary with linearly interpolated quantiles.
pub fn quartiles(values: &[f64]) -> Result<Quartiles> {
    if values.is_empty() {
        return Err(Error::InvalidConfig("no values to summarize".into()));
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let q = |p: f64| {
        let h = p * (v.len() - 1) as f64;
        let lo = h.floor() as usize;
        let hi = h.ceil() as usize;
        v[lo] + (h - lo as f64) * (v[hi] - v[lo])
    };
    Ok(Quartiles {
        min: v[0],
        q1: q(0.25),
        median: q(0.5),
        q3: q(0.75),
        max: v[v.len() - 1],
        mean: v.iter().sum::<f64>() / v.len() as f64,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StabilityAtLambda {
    pub lambda: f64,
    pub summary: Quartiles,
    /// Mean number of selected groups across training folds.
    pub mean_selected: f64,
}

/// Fits the path on every K-fold training split and summarizes pairwise
/// stability of the selected groups at each shared lambda.
pub fn selection_stability<L: Likelihood>(
    data: &L,
    groups: &GroupSpec,
    path: &PathConfig,
    solver: &SolverConfig,
    cv: &CvConfig,
) -> Result<Vec<StabilityAtLambda>> {
    let fold_of = stratified_folds(data.labels(), cv.folds, cv.seed)?;
    check_folds(data.labels(), &fold_of, cv.folds)?;
    let full = Standardizer::build(data.design(), groups, cv.mode)?;
    let lambdas = path.grid(data, &full)?;
    let shared = PathConfig {
        lambdas: Some(lambdas.clone()),
        ..path.clone()
    };
    let selections = run_folds(cv.folds, cv.jobs, |f| {
        let (train, _) = split(&fold_of, f);
        let (_, fits) = fit_training_fold(data, groups, &train, &shared, solver, cv)?;
        Ok(fits.into_iter().map(|fit| fit.active_groups).collect::<Vec<_>>())
    })?;
    lambdas
        .iter()
        .enumerate()
        .map(|(i, &lambda)| {
            let sets: Vec<Vec<usize>> = selections.iter().map(|s| s[i].clone()).collect();
            Ok(StabilityAtLambda {
                lambda,
                summary: quartiles(&pairwise_stability(&sets))?,
                mean_selected: sets.iter().map(Vec::len).sum::<usize>() as f64 / sets.len() as f64,
            })
        })
        .collect()
}
