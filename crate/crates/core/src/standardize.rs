//! Group-wise orthonormalization of the centered design.
//!
//! For every penalized group the centered block factors as
//! `P0 X_g = Q_g R_g` with `Q_g^T Q_g = n I` and `R_g` upper triangular with a
//! positive diagonal. Coefficients on the orthonormal scale (`nu`) and the
//! original scale (`theta`) are related by `theta_g = R_g^{-1} nu_g` and
//! `theta_0 = nu_0 - sum_g mean_g^T theta_g`.

use crate::design::{axpy, dot, Design};
use crate::error::{check_len, Error, Result};

/// Partition of the raw (non-intercept) columns into penalized groups.
///
/// Groups hold raw column indices; coefficient `theta[1 + c]` belongs to the
/// group containing column `c`. The intercept is always its own unpenalized
/// group and does not appear here.
#[derive(Debug, Clone, PartialEq)]
pub struct GroupSpec {
    groups: Vec<Vec<usize>>,
    weights: Vec<f64>,
}

impl GroupSpec {
    pub fn new(groups: Vec<Vec<usize>>, weights: Option<Vec<f64>>) -> Result<Self> {
        let weights = match weights {
            Some(w) => w,
            None => groups.iter().map(|g| (g.len() as f64).sqrt()).collect(),
        };
        check_len("group weights", groups.len(), weights.len())?;
        if let Some((j, w)) = weights.iter().enumerate().find(|(_, w)| !(w.is_finite() && **w > 0.0)) {
            return Err(Error::InvalidGroups(format!("weight of group {j} is {w}, must be positive")));
        }
        let m = groups.iter().map(Vec::len).sum::<usize>();
        let mut seen = vec![false; m];
        for (j, g) in groups.iter().enumerate() {
            if g.is_empty() {
                return Err(Error::InvalidGroups(format!("group {j} is empty")));
            }
            for &c in g {
                if c >= m || seen[c] {
                    return Err(Error::InvalidGroups(format!(
                        "column {c} is out of range or assigned twice"
                    )));
                }
                seen[c] = true;
            }
        }
        Ok(Self { groups, weights })
    }

    /// One group per column with unit weights (the plain lasso).
    pub fn singletons(m: usize) -> Self {
        Self {
            groups: (0..m).map(|c| vec![c]).collect(),
            weights: vec![1.0; m],
        }
    }

    /// Groups from a per-column group label; groups are ordered by first
    /// appearance and receive the default weight `sqrt(|g|)` unless given.
    pub fn from_labels<S: AsRef<str>>(labels: &[S], weights: &[Option<f64>]) -> Result<Self> {
        check_len("weight overrides", labels.len(), weights.len())?;
        let mut names: Vec<&str> = Vec::new();
        let mut groups: Vec<Vec<usize>> = Vec::new();
        let mut overrides: Vec<Option<f64>> = Vec::new();
        for (c, label) in labels.iter().enumerate() {
            let label = label.as_ref();
            let j = match names.iter().position(|n| *n == label) {
                Some(j) => j,
                None => {
                    names.push(label);
                    groups.push(Vec::new());
                    overrides.push(None);
                    names.len() - 1
                }
            };
            groups[j].push(c);
            if let Some(w) = weights[c] {
                if overrides[j].is_some_and(|o| o != w) {
                    return Err(Error::InvalidGroups(format!("conflicting weights for group {label}")));
                }
                overrides[j] = Some(w);
            }
        }
        let w = groups
            .iter()
            .zip(&overrides)
            .map(|(g, o)| o.unwrap_or((g.len() as f64).sqrt()))
            .collect();
        Self::new(groups, Some(w))
    }

    pub fn len(&self) -> usize {
        self.groups.len()
    }

    pub fn is_empty(&self) -> bool {
        self.groups.is_empty()
    }

    pub fn n_columns(&self) -> usize {
        self.groups.iter().map(Vec::len).sum()
    }

    pub fn group(&self, j: usize) -> &[usize] {
        &self.groups[j]
    }

    pub fn weight(&self, j: usize) -> f64 {
        self.weights[j]
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn iter(&self) -> impl Iterator<Item = &[usize]> {
        self.groups.iter().map(Vec::as_slice)
    }
}

/// Whether the orthonormal blocks are materialized.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StorageMode {
    /// Stores every `Q_g` explicitly (dense even when `X` is sparse).
    Dense,
    /// Keeps only `R_g^{-1}` and column means; products go through `X`.
    Sparse,
}

#[derive(Debug, Clone)]
pub struct Block {
    cols: Vec<usize>,
    mean: Vec<f64>,
    // k x k row-major, upper triangular
    r: Vec<f64>,
    r_inv: Vec<f64>,
    // n x k column-major
    q: Option<Vec<f64>>,
}

impl Block {
    pub fn size(&self) -> usize {
        self.cols.len()
    }

    pub fn columns(&self) -> &[usize] {
        &self.cols
    }

    pub fn means(&self) -> &[f64] {
        &self.mean
    }

    /// `R_g` as a row-major `k x k` upper-triangular matrix.
    pub fn r(&self) -> &[f64] {
        &self.r
    }

    pub fn r_inv(&self) -> &[f64] {
        &self.r_inv
    }

    /// Column `c` of the stored `Q_g`, when materialized.
    pub fn q_column(&self, c: usize, n: usize) -> Option<&[f64]> {
        self.q.as_ref().map(|q| &q[c * n..(c + 1) * n])
    }
}

#[derive(Debug, Clone)]
pub struct Standardizer {
    n: usize,
    m: usize,
    groups: GroupSpec,
    blocks: Vec<Block>,
    mode: StorageMode,
}

const RANK_TOL: f64 = 1e-10;
const ORTHO_TOL: f64 = 1e-8;

impl Standardizer {
    pub fn build(x: &Design, groups: &GroupSpec, mode: StorageMode) -> Result<Self> {
        let n = x.nrows();
        let m = x.ncols();
        check_len("grouped columns", m, groups.n_columns())?;
        if !x.all_finite() {
            return Err(Error::NonFinite("design matrix"));
        }
        let mut blocks = Vec::with_capacity(groups.len());
        for (j, cols) in groups.iter().enumerate() {
            let k = cols.len();
            if k + 1 > n {
                return Err(Error::InvalidGroups(format!(
                    "group {j} has {k} columns but only {n} samples"
                )));
            }
            let mut a = Vec::with_capacity(n * k);
            let mut mean = Vec::with_capacity(k);
            for &c in cols {
                let col = x.col_dense(c);
                let mu = col.iter().sum::<f64>() / n as f64;
                mean.push(mu);
                a.extend(col.iter().map(|v| v - mu));
            }
            let r_raw = householder_r(&mut a, n, k, j)?;
            let scale = (n as f64).sqrt();
            let r: Vec<f64> = r_raw.iter().map(|v| v / scale).collect();
            let r_inv = upper_inverse(&r, k);
            let q = match mode {
                StorageMode::Dense => {
                    let q = materialize_q(x, cols, &mean, &r_inv, n);
                    verify_orthonormal(&q, n, k, j)?;
                    Some(q)
                }
                StorageMode::Sparse => None,
            };
            blocks.push(Block {
                cols: cols.to_vec(),
                mean,
                r,
                r_inv,
                q,
            });
        }
        Ok(Self {
            n,
            m,
            groups: groups.clone(),
            blocks,
            mode,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Coefficient vector length including the intercept.
    pub fn p(&self) -> usize {
        self.m + 1
    }

    pub fn mode(&self) -> StorageMode {
        self.mode
    }

    pub fn groups(&self) -> &GroupSpec {
        &self.groups
    }

    pub fn n_groups(&self) -> usize {
        self.blocks.len()
    }

    pub fn block(&self, j: usize) -> &Block {
        &self.blocks[j]
    }

    pub fn weight(&self, j: usize) -> f64 {
        self.groups.weight(j)
    }

    /// Coefficients of group `j` gathered from a full-length vector.
    pub fn gather(&self, j: usize, v: &[f64]) -> Vec<f64> {
        self.blocks[j].cols.iter().map(|&c| v[1 + c]).collect()
    }

    pub fn scatter(&self, j: usize, values: &[f64], v: &mut [f64]) {
        for (&c, &x) in self.blocks[j].cols.iter().zip(values) {
            v[1 + c] = x;
        }
    }

    /// Original-scale coefficients from orthonormal-scale coefficients.
    pub fn from_standardized(&self, nu: &[f64]) -> Result<Vec<f64>> {
        check_len("standardized coefficients", self.p(), nu.len())?;
        let mut theta = vec![0.0; self.p()];
        let mut shift = 0.0;
        for (j, b) in self.blocks.iter().enumerate() {
            let th = upper_mul(&b.r_inv, &self.gather(j, nu), b.size());
            shift += dot(&b.mean, &th);
            self.scatter(j, &th, &mut theta);
        }
        theta[0] = nu[0] - shift;
        Ok(theta)
    }

    pub fn to_standardized(&self, theta: &[f64]) -> Result<Vec<f64>> {
        check_len("coefficients", self.p(), theta.len())?;
        let mut nu = vec![0.0; self.p()];
        let mut shift = 0.0;
        for (j, b) in self.blocks.iter().enumerate() {
            let th = self.gather(j, theta);
            shift += dot(&b.mean, &th);
            self.scatter(j, &upper_mul(&b.r, &th, b.size()), &mut nu);
        }
        nu[0] = theta[0] + shift;
        Ok(nu)
    }

    /// `Q_g^T r` (without the `1/n` factor). `r_sum` must equal `sum(r)`.
    pub fn q_transpose(&self, x: &Design, j: usize, r: &[f64], r_sum: f64) -> Vec<f64> {
        let b = &self.blocks[j];
        let k = b.size();
        match &b.q {
            Some(q) => (0..k).map(|c| dot(&q[c * self.n..(c + 1) * self.n], r)).collect(),
            None => {
                // R^{-T} (X_g^T r - n mean_g mean(r))
                let xr: Vec<f64> = b
                    .cols
                    .iter()
                    .zip(&b.mean)
                    .map(|(&c, &mu)| x.col_dot(c, r) - mu * r_sum)
                    .collect();
                upper_transpose_mul(&b.r_inv, &xr, k)
            }
        }
    }

    /// `out += Q_g v`.
    pub fn q_axpy(&self, x: &Design, j: usize, v: &[f64], out: &mut [f64]) {
        let b = &self.blocks[j];
        match &b.q {
            Some(q) => {
                for (c, &vc) in v.iter().enumerate() {
                    if vc != 0.0 {
                        axpy(vc, &q[c * self.n..(c + 1) * self.n], out);
                    }
                }
            }
            None => {
                let th = upper_mul(&b.r_inv, v, b.size());
                let shift = dot(&b.mean, &th);
                for (&c, &tc) in b.cols.iter().zip(&th) {
                    if tc != 0.0 {
                        x.col_axpy(c, tc, out);
                    }
                }
                for o in out.iter_mut() {
                    *o -= shift;
                }
            }
        }
    }

    /// Fitted values `Q nu` with the intercept column `1`.
    pub fn fitted(&self, x: &Design, nu: &[f64]) -> Result<Vec<f64>> {
        check_len("standardized coefficients", self.p(), nu.len())?;
        let mut out = vec![nu[0]; self.n];
        for j in 0..self.blocks.len() {
            self.q_axpy(x, j, &self.gather(j, nu), &mut out);
        }
        Ok(out)
    }

    /// Explicit `Q_g` (n x k, column-major), computed if not stored.
    pub fn q_matrix(&self, x: &Design, j: usize) -> Vec<f64> {
        let b = &self.blocks[j];
        match &b.q {
            Some(q) => q.clone(),
            None => materialize_q(x, &b.cols, &b.mean, &b.r_inv, self.n),
        }
    }
}


/// Householder QR of the column-major `n x k` block in place; returns `R`
/// (row-major, positive diagonal).
fn householder_r(a: &mut [f64], n: usize, k: usize, group: usize) -> Result<Vec<f64>> {
    let max_norm = (0..k)
        .map(|c| a[c * n..(c + 1) * n].iter().map(|v| v * v).sum::<f64>().sqrt())
        .fold(0.0, f64::max);
    let threshold = RANK_TOL * (n as f64).sqrt() * max_norm;
    let mut r = vec![0.0; k * k];
    for c in 0..k {
        let tail = &mut a[c * n..];
        let col = &mut tail[..n];
        let norm = col[c..].iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm <= threshold || norm == 0.0 {
            return Err(Error::RankDeficient {
                group,
                pivot: norm,
                threshold,
            });
        }
        let alpha = if col[c] >= 0.0 { -norm } else { norm };
        // v = x - alpha e_c, stored in col[c..]
        col[c] -= alpha;
        let vnorm2: f64 = col[c..].iter().map(|v| v * v).sum();
        // apply reflector to remaining columns
        let v: Vec<f64> = col[c..].to_vec();
        for d in (c + 1)..k {
            let other = &mut tail[(d - c) * n..(d - c + 1) * n];
            let s: f64 = v.iter().zip(&other[c..]).map(|(a, b)| a * b).sum();
            let f = 2.0 * s / vnorm2;
            for (o, vi) in other[c..].iter_mut().zip(&v) {
                *o -= f * vi;
            }
        }
        r[c * k + c] = alpha;
        for d in (c + 1)..k {
            r[c * k + d] = tail[(d - c) * n + c];
        }
    }
    // positive diagonal: flip rows with negative pivots
    for c in 0..k {
        if r[c * k + c] < 0.0 {
            for d in c..k {
                r[c * k + d] = -r[c * k + d];
            }
        }
    }
    Ok(r)
}

fn upper_inverse(r: &[f64], k: usize) -> Vec<f64> {
    let mut inv = vec![0.0; k * k];
    for col in 0..k {
        // solve R x = e_col
        for row in (0..=col).rev() {
            let mut s = if row == col { 1.0 } else { 0.0 };
            for d in (row + 1)..=col {
                s -= r[row * k + d] * inv[d * k + col];
            }
            inv[row * k + col] = s / r[row * k + row];
        }
    }
    inv
}

fn upper_mul(u: &[f64], v: &[f64], k: usize) -> Vec<f64> {
    (0..k)
        .map(|row| (row..k).map(|d| u[row * k + d] * v[d]).sum())
        .collect()
}

fn upper_transpose_mul(u: &[f64], v: &[f64], k: usize) -> Vec<f64> {
    (0..k)
        .map(|col| (0..=col).map(|d| u[d * k + col] * v[d]).sum())
        .collect()
}

fn materialize_q(x: &Design, cols: &[usize], mean: &[f64], r_inv: &[f64], n: usize) -> Vec<f64> {
    let k = cols.len();
    let centered: Vec<Vec<f64>> = cols
        .iter()
        .zip(mean)
        .map(|(&c, &mu)| x.col_dense(c).iter().map(|v| v - mu).collect())
        .collect();
    let mut q = vec![0.0; n * k];
    // Q[:, c] = sum_{d <= c} A[:, d] * Rinv[d, c]
    for c in 0..k {
        let out = &mut q[c * n..(c + 1) * n];
        for (d, a) in centered.iter().enumerate().take(c + 1) {
            let f = r_inv[d * k + c];
            for (o, v) in out.iter_mut().zip(a) {
                *o += f * v;
            }
        }
    }
    q
}

fn verify_orthonormal(q: &[f64], n: usize, k: usize, group: usize) -> Result<()> {
    let mut worst: f64 = 0.0;
    for a in 0..k {
        let qa = &q[a * n..(a + 1) * n];
        worst = worst.max((qa.iter().sum::<f64>() / n as f64).abs());
        for b in a..k {
            let g = dot(qa, &q[b * n..(b + 1) * n]) / n as f64;
            let target = if a == b { 1.0 } else { 0.0 };
            worst = worst.max((g - target).abs());
        }
    }
    if worst > ORTHO_TOL {
        return Err(Error::RankDeficient {
            group,
            pivot: worst,
            threshold: ORTHO_TOL,
        });
    }
    Ok(())
}
