//! Design matrices: dense column-major storage or compressed sparse columns.
//!
//! User matrices never carry the intercept column; every routine that maps
//! coefficients to linear predictors treats `theta[0]` as the intercept and
//! `theta[1 + c]` as the coefficient of raw column `c`.

use ndarray::{Array2, ShapeBuilder};

use crate::error::{check_len, Error, Result};

/// Compressed sparse column matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct CscMatrix {
    nrows: usize,
    ncols: usize,
    col_ptr: Vec<usize>,
    row_idx: Vec<usize>,
    values: Vec<f64>,
}

impl CscMatrix {
    pub fn new(
        nrows: usize,
        ncols: usize,
        col_ptr: Vec<usize>,
        row_idx: Vec<usize>,
        values: Vec<f64>,
    ) -> Result<Self> {
        check_len("csc column pointer", ncols + 1, col_ptr.len())?;
        check_len("csc values", row_idx.len(), values.len())?;
        if col_ptr[0] != 0 || col_ptr[ncols] != row_idx.len() {
            return Err(Error::Parse("inconsistent csc column pointers".into()));
        }
        for c in 0..ncols {
            if col_ptr[c] > col_ptr[c + 1] {
                return Err(Error::Parse("csc column pointers not monotone".into()));
            }
            let rows = &row_idx[col_ptr[c]..col_ptr[c + 1]];
            if rows.windows(2).any(|w| w[0] >= w[1]) {
                return Err(Error::Parse(format!("csc rows of column {c} not strictly sorted")));
            }
            if rows.last().is_some_and(|&r| r >= nrows) {
                return Err(Error::Parse(format!("csc row index out of range in column {c}")));
            }
        }
        Ok(Self {
            nrows,
            ncols,
            col_ptr,
            row_idx,
            values,
        })
    }

    /// Builds from `(row, col, value)` triplets; duplicates are summed and
    /// explicit zeros are kept.
    pub fn from_triplets(nrows: usize, ncols: usize, triplets: &[(usize, usize, f64)]) -> Result<Self> {
        let mut sorted: Vec<(usize, usize, f64)> = triplets.to_vec();
        for &(r, c, _) in &sorted {
            if r >= nrows || c >= ncols {
                return Err(Error::Parse(format!("entry ({r}, {c}) outside {nrows}x{ncols}")));
            }
        }
        sorted.sort_by(|a, b| (a.1, a.0).cmp(&(b.1, b.0)));
        let mut col_ptr = vec![0usize; ncols + 1];
        let mut row_idx = Vec::with_capacity(sorted.len());
        let mut values: Vec<f64> = Vec::with_capacity(sorted.len());
        let mut last: Option<(usize, usize)> = None;
        for (r, c, v) in sorted {
            if last == Some((r, c)) {
                *values.last_mut().unwrap() += v;
                continue;
            }
            row_idx.push(r);
            values.push(v);
            col_ptr[c + 1] += 1;
            last = Some((r, c));
        }
        for c in 0..ncols {
            col_ptr[c + 1] += col_ptr[c];
        }
        Self::new(nrows, ncols, col_ptr, row_idx, values)
    }

    pub fn from_dense(x: &Array2<f64>) -> Self {
        let (nrows, ncols) = x.dim();
        let mut col_ptr = Vec::with_capacity(ncols + 1);
        let mut row_idx = Vec::new();
        let mut values = Vec::new();
        col_ptr.push(0);
        for c in 0..ncols {
            for (r, &v) in x.column(c).iter().enumerate() {
                if v != 0.0 {
                    row_idx.push(r);
                    values.push(v);
                }
            }
            col_ptr.push(row_idx.len());
        }
        Self {
            nrows,
            ncols,
            col_ptr,
            row_idx,
            values,
        }
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    /// Row indices and values of column `c`.
    pub fn column(&self, c: usize) -> (&[usize], &[f64]) {
        let range = self.col_ptr[c]..self.col_ptr[c + 1];
        (&self.row_idx[range.clone()], &self.values[range])
    }

    /// Iterates `(row, col, value)` in column-major order.
    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.ncols).flat_map(move |c| {
            let (rows, vals) = self.column(c);
            rows.iter().zip(vals).map(move |(&r, &v)| (r, c, v))
        })
    }

    pub fn to_dense(&self) -> Array2<f64> {
        let mut out = Array2::zeros((self.nrows, self.ncols).f());
        for (r, c, v) in self.triplets() {
            out[[r, c]] = v;
        }
        out
    }
}

/// Inner product with eight independent accumulators, so the additions
/// pipeline instead of waiting on one running sum.
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len().min(b.len());
    let (a, b) = (&a[..n], &b[..n]);
    let mut acc = [0.0; 8];
    let mut ca = a.chunks_exact(8);
    let mut cb = b.chunks_exact(8);
    for (x, y) in ca.by_ref().zip(cb.by_ref()) {
        for k in 0..8 {
            acc[k] += x[k] * y[k];
        }
    }
    let tail: f64 = ca.remainder().iter().zip(cb.remainder()).map(|(x, y)| x * y).sum();
    (acc[0] + acc[4]) + (acc[1] + acc[5]) + (acc[2] + acc[6]) + (acc[3] + acc[7]) + tail
}

/// `y += alpha * x` over the common length.
pub(crate) fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    let n = x.len().min(y.len());
    for (yi, xi) in y[..n].iter_mut().zip(&x[..n]) {
        *yi += alpha * xi;
    }
}

/// Feature matrix without the intercept column.
#[derive(Debug, Clone, PartialEq)]
pub enum Design {
    Dense(Array2<f64>),
    Sparse(CscMatrix),
}

impl Design {
    /// Dense design from row-major data.
    pub fn dense_from_rows(nrows: usize, ncols: usize, data: &[f64]) -> Result<Self> {
        check_len("dense data", nrows * ncols, data.len())?;
        let mut x = Array2::zeros((nrows, ncols).f());
        for r in 0..nrows {
            for c in 0..ncols {
                x[[r, c]] = data[r * ncols + c];
            }
        }
        Ok(Design::Dense(x))
    }

    pub fn dense(x: Array2<f64>) -> Self {
        // column access assumes Fortran layout
        if x.is_standard_layout() && x.ncols() > 1 && x.nrows() > 1 {
            let mut f = Array2::zeros(x.raw_dim().f());
            f.assign(&x);
            Design::Dense(f)
        } else {
            Design::Dense(x)
        }
    }

    pub fn nrows(&self) -> usize {
        match self {
            Design::Dense(x) => x.nrows(),
            Design::Sparse(x) => x.nrows(),
        }
    }

    pub fn ncols(&self) -> usize {
        match self {
            Design::Dense(x) => x.ncols(),
            Design::Sparse(x) => x.ncols(),
        }
    }

    pub fn is_sparse(&self) -> bool {
        matches!(self, Design::Sparse(_))
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        match self {
            Design::Dense(x) => x[[r, c]],
            Design::Sparse(x) => {
                let (rows, vals) = x.column(c);
                match rows.binary_search(&r) {
                    Ok(k) => vals[k],
                    Err(_) => 0.0,
                }
            }
        }
    }

    pub fn all_finite(&self) -> bool {
        match self {
            Design::Dense(x) => x.iter().all(|v| v.is_finite()),
            Design::Sparse(x) => x.values.iter().all(|v| v.is_finite()),
        }
    }

    /// Fraction of stored entries that are exactly zero, over `n * m`.
    pub fn sparsity(&self) -> f64 {
        let total = (self.nrows() * self.ncols()).max(1) as f64;
        let nnz = match self {
            Design::Dense(x) => x.iter().filter(|&&v| v != 0.0).count(),
            Design::Sparse(x) => x.values.iter().filter(|&&v| v != 0.0).count(),
        };
        1.0 - nnz as f64 / total
    }

    /// `sum_i x_ic * v_i`.
    pub fn col_dot(&self, c: usize, v: &[f64]) -> f64 {
        match self {
            Design::Dense(x) => {
                let col = x.column(c);
                match col.as_slice() {
                    Some(s) => dot(s, v),
                    None => col.iter().zip(v).map(|(a, b)| a * b).sum(),
                }
            }
            Design::Sparse(x) => {
                let (rows, vals) = x.column(c);
                rows.iter().zip(vals).map(|(&r, &a)| a * v[r]).sum()
            }
        }
    }

    /// `v += alpha * x_c`.
    pub fn col_axpy(&self, c: usize, alpha: f64, v: &mut [f64]) {
        match self {
            Design::Dense(x) => {
                let col = x.column(c);
                match col.as_slice() {
                    Some(s) => axpy(alpha, s, v),
                    None => {
                        for (vi, a) in v.iter_mut().zip(col.iter()) {
                            *vi += alpha * a;
                        }
                    }
                }
            }
            Design::Sparse(x) => {
                let (rows, vals) = x.column(c);
                for (&r, &a) in rows.iter().zip(vals) {
                    v[r] += alpha * a;
                }
            }
        }
    }

    pub fn col_sum(&self, c: usize) -> f64 {
        match self {
            Design::Dense(x) => x.column(c).sum(),
            Design::Sparse(x) => x.column(c).1.iter().sum(),
        }
    }

    pub fn col_dense(&self, c: usize) -> Vec<f64> {
        match self {
            Design::Dense(x) => x.column(c).to_vec(),
            Design::Sparse(x) => {
                let mut out = vec![0.0; x.nrows];
                let (rows, vals) = x.column(c);
                for (&r, &a) in rows.iter().zip(vals) {
                    out[r] = a;
                }
                out
            }
        }
    }

    /// Linear predictor `theta[0] + X * theta[1..]`.
    pub fn linear_predictor(&self, theta: &[f64]) -> Result<Vec<f64>> {
        check_len("coefficients", self.ncols() + 1, theta.len())?;
        let mut t = vec![theta[0]; self.nrows()];
        for (c, &b) in theta[1..].iter().enumerate() {
            if b != 0.0 {
                self.col_axpy(c, b, &mut t);
            }
        }
        Ok(t)
    }

    /// `X^T v`, without the intercept entry.
    pub fn transpose_times(&self, v: &[f64]) -> Vec<f64> {
        (0..self.ncols()).map(|c| self.col_dot(c, v)).collect()
    }

    pub fn row(&self, r: usize) -> Vec<f64> {
        (0..self.ncols()).map(|c| self.get(r, c)).collect()
    }

    pub fn select_rows(&self, rows: &[usize]) -> Design {
        match self {
            Design::Dense(x) => {
                let mut out = Array2::zeros((rows.len(), x.ncols()).f());
                for (k, &r) in rows.iter().enumerate() {
                    out.row_mut(k).assign(&x.row(r));
                }
                Design::Dense(out)
            }
            Design::Sparse(x) => {
                let mut targets: Vec<Vec<usize>> = vec![Vec::new(); x.nrows];
                for (k, &r) in rows.iter().enumerate() {
                    targets[r].push(k);
                }
                let trip: Vec<(usize, usize, f64)> = x
                    .triplets()
                    .flat_map(|(r, c, v)| targets[r].iter().map(move |&k| (k, c, v)))
                    .collect();
                Design::Sparse(
                    CscMatrix::from_triplets(rows.len(), x.ncols, &trip)
                        .expect("row selection stays in range"),
                )
            }
        }
    }

    pub fn to_dense(&self) -> Array2<f64> {
        match self {
            Design::Dense(x) => x.clone(),
            Design::Sparse(x) => x.to_dense(),
        }
    }

    pub fn to_sparse(&self) -> CscMatrix {
        match self {
            Design::Dense(x) => CscMatrix::from_dense(x),
            Design::Sparse(x) => x.clone(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dot_matches_sequential_sum() {
        for n in [0, 1, 7, 8, 9, 31, 500] {
            let a: Vec<f64> = (0..n).map(|i| (i as f64 * 0.37).sin()).collect();
            let b: Vec<f64> = (0..n).map(|i| (i as f64 * 1.3).cos()).collect();
            let naive: f64 = a.iter().zip(&b).map(|(x, y)| x * y).sum();
            assert!((dot(&a, &b) - naive).abs() < 1e-12, "n = {n}");
        }
    }

    fn toy() -> Design {
        Design::dense_from_rows(3, 2, &[1.0, 0.0, 0.0, 2.0, 3.0, 0.0]).unwrap()
    }

    #[test]
    fn sparse_and_dense_kernels_agree() {
        let d = toy();
        let s = Design::Sparse(d.to_sparse());
        let v = [1.0, -2.0, 0.5];
        for c in 0..2 {
            assert_eq!(d.col_dot(c, &v), s.col_dot(c, &v));
            assert_eq!(d.col_sum(c), s.col_sum(c));
        }
        let theta = [0.5, 1.0, -1.0];
        assert_eq!(d.linear_predictor(&theta).unwrap(), s.linear_predictor(&theta).unwrap());
        assert_eq!(s.get(1, 1), 2.0);
        assert_eq!(s.get(1, 0), 0.0);
    }

    #[test]
    fn triplets_sum_duplicates() {
        let m = CscMatrix::from_triplets(2, 2, &[(0, 1, 1.0), (0, 1, 2.0), (1, 0, 4.0)]).unwrap();
        assert_eq!(m.nnz(), 2);
        assert_eq!(m.to_dense()[[0, 1]], 3.0);
    }

    #[test]
    fn select_rows_matches_between_storage() {
        let d = toy();
        let s = Design::Sparse(d.to_sparse());
        let rows = [2, 0];
        assert_eq!(d.select_rows(&rows).to_dense(), s.select_rows(&rows).to_dense());
        assert_eq!(d.select_rows(&rows).row(0), vec![3.0, 0.0]);
    }

    #[test]
    fn linear_predictor_checks_length() {
        assert!(toy().linear_predictor(&[0.0, 1.0]).is_err());
    }
}
