//! Row-compressed sparse matrices and the iterative / direct kernels built on
//! them.  Columns are sorted and unique within each row; explicit zeros are
//! permitted (column operations can cancel values without changing the
//! pattern).

mod blockdiag;
pub mod smalldense;
mod cg;
mod fgmres;
mod ldl;
mod rcm;

pub use blockdiag::BlockDiagSolver;
pub use cg::{cg_solve, CgOutcome, CgParams};
pub use fgmres::{fgmres, FgmresParams, FgmresResult, LinearOperator};
pub use ldl::LdlFactor;
pub use rcm::reverse_cuthill_mckee;

use crate::error::Error;
use crate::Result;
use std::fmt::Write as _;

/// Sparse matrix in CSR form.
#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    nrows: usize,
    ncols: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
}

impl CsrMatrix {
    /// Builds a CSR matrix from (row, col, value) triplets, summing duplicates.
    /// Uses a stable sort so repeated contributions accumulate in input order.
    pub fn from_triplets(
        nrows: usize,
        ncols: usize,
        mut triplets: Vec<(usize, usize, f64)>,
    ) -> Self {
        triplets.sort_by_key(|&(r, c, _)| (r, c));
        let mut row_ptr = vec![0usize; nrows + 1];
        let mut col_idx = Vec::new();
        let mut values: Vec<f64> = Vec::new();
        let mut last = (usize::MAX, usize::MAX);
        for &(r, c, v) in &triplets {
            debug_assert!(r < nrows && c < ncols);
            if (r, c) == last {
                *values.last_mut().unwrap() += v;
            } else {
                col_idx.push(c);
                values.push(v);
                row_ptr[r + 1] += 1;
                last = (r, c);
            }
        }
        for r in 0..nrows {
            row_ptr[r + 1] += row_ptr[r];
        }
        CsrMatrix {
            nrows,
            ncols,
            row_ptr,
            col_idx,
            values,
        }
    }

    pub fn from_parts(
        nrows: usize,
        ncols: usize,
        row_ptr: Vec<usize>,
        col_idx: Vec<usize>,
        values: Vec<f64>,
    ) -> Self {
        debug_assert_eq!(row_ptr.len(), nrows + 1);
        debug_assert_eq!(col_idx.len(), values.len());
        CsrMatrix {
            nrows,
            ncols,
            row_ptr,
            col_idx,
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
        self.col_idx.len()
    }

    pub fn row(&self, r: usize) -> (&[usize], &[f64]) {
        let span = self.row_ptr[r]..self.row_ptr[r + 1];
        (&self.col_idx[span.clone()], &self.values[span])
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        let (cols, vals) = self.row(r);
        match cols.binary_search(&c) {
            Ok(k) => vals[k],
            Err(_) => 0.0,
        }
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.nrows.min(self.ncols)).map(|i| self.get(i, i)).collect()
    }

    /// y = A x
    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        debug_assert_eq!(x.len(), self.ncols);
        let mut y = vec![0.0; self.nrows];
        for r in 0..self.nrows {
            let (cols, vals) = self.row(r);
            let mut acc = 0.0;
            for (c, v) in cols.iter().zip(vals) {
                acc += v * x[*c];
            }
            y[r] = acc;
        }
        y
    }

    /// y = A^T x
    pub fn matvec_transpose(&self, x: &[f64]) -> Vec<f64> {
        debug_assert_eq!(x.len(), self.nrows);
        let mut y = vec![0.0; self.ncols];
        for r in 0..self.nrows {
            let (cols, vals) = self.row(r);
            for (c, v) in cols.iter().zip(vals) {
                y[*c] += v * x[r];
            }
        }
        y
    }

    pub fn transpose(&self) -> CsrMatrix {
        let mut counts = vec![0usize; self.ncols + 1];
        for &c in &self.col_idx {
            counts[c + 1] += 1;
        }
        for i in 0..self.ncols {
            counts[i + 1] += counts[i];
        }
        let row_ptr = counts.clone();
        let mut col_idx = vec![0usize; self.nnz()];
        let mut values = vec![0.0; self.nnz()];
        let mut next = counts;
        for r in 0..self.nrows {
            let (cols, vals) = self.row(r);
            for (c, v) in cols.iter().zip(vals) {
                let slot = next[*c];
                col_idx[slot] = r;
                values[slot] = *v;
                next[*c] += 1;
            }
        }
        CsrMatrix {
            nrows: self.ncols,
            ncols: self.nrows,
            row_ptr,
            col_idx,
            values,
        }
    }

    /// Sparse product self * other.
    pub fn matmul(&self, other: &CsrMatrix) -> CsrMatrix {
        assert_eq!(self.ncols, other.nrows);
        let mut row_ptr = vec![0usize; self.nrows + 1];
        let mut col_idx = Vec::new();
        let mut values = Vec::new();
        let mut marker = vec![usize::MAX; other.ncols];
        let mut accum = vec![0.0; other.ncols];
        let mut active: Vec<usize> = Vec::new();
        for r in 0..self.nrows {
            active.clear();
            let (cols, vals) = self.row(r);
            for (k, v) in cols.iter().zip(vals) {
                let (ocols, ovals) = other.row(*k);
                for (c, w) in ocols.iter().zip(ovals) {
                    if marker[*c] != r {
                        marker[*c] = r;
                        accum[*c] = 0.0;
                        active.push(*c);
                    }
                    accum[*c] += v * w;
                }
            }
            active.sort_unstable();
            for &c in &active {
                col_idx.push(c);
                values.push(accum[c]);
            }
            row_ptr[r + 1] = col_idx.len();
        }
        CsrMatrix {
            nrows: self.nrows,
            ncols: other.ncols,
            row_ptr,
            col_idx,
            values,
        }
    }

    /// Scales columns by `d` (self * diag(d)).
    pub fn scale_columns(&self, d: &[f64]) -> CsrMatrix {
        let mut out = self.clone();
        for (c, v) in out.col_idx.iter().zip(out.values.iter_mut()) {
            *v *= d[*c];
        }
        out
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Maximum absolute entry of A - A^T; zero for exactly symmetric assembly.
    pub fn asymmetry(&self) -> f64 {
        let t = self.transpose();
        let mut worst = 0.0f64;
        for r in 0..self.nrows {
            let (c1, v1) = self.row(r);
            let (c2, v2) = t.row(r);
            let mut i = 0;
            let mut j = 0;
            while i < c1.len() || j < c2.len() {
                if j >= c2.len() || (i < c1.len() && c1[i] < c2[j]) {
                    worst = worst.max(v1[i].abs());
                    i += 1;
                } else if i >= c1.len() || c2[j] < c1[i] {
                    worst = worst.max(v2[j].abs());
                    j += 1;
                } else {
                    worst = worst.max((v1[i] - v2[j]).abs());
                    i += 1;
                    j += 1;
                }
            }
        }
        worst
    }

    /// Coordinate-format text dump (`row col value` lines).
    pub fn to_coordinate_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "% {} {} {}", self.nrows, self.ncols, self.nnz());
        for r in 0..self.nrows {
            let (cols, vals) = self.row(r);
            for (c, v) in cols.iter().zip(vals) {
                let _ = writeln!(out, "{r} {c} {v:.16e}");
            }
        }
        out
    }

    /// Entrywise maximum absolute difference over the union pattern.
    pub fn max_abs_diff(&self, other: &CsrMatrix) -> f64 {
        assert_eq!(self.nrows, other.nrows);
        assert_eq!(self.ncols, other.ncols);
        let mut worst = 0.0f64;
        for r in 0..self.nrows {
            let (c1, v1) = self.row(r);
            let (c2, v2) = other.row(r);
            let mut i = 0;
            let mut j = 0;
            while i < c1.len() || j < c2.len() {
                if j >= c2.len() || (i < c1.len() && c1[i] < c2[j]) {
                    worst = worst.max(v1[i].abs());
                    i += 1;
                } else if i >= c1.len() || c2[j] < c1[i] {
                    worst = worst.max(v2[j].abs());
                    j += 1;
                } else {
                    worst = worst.max((v1[i] - v2[j]).abs());
                    i += 1;
                    j += 1;
                }
            }
        }
        worst
    }

    /// True when the sparsity patterns (row pointers and column indices) agree
    /// exactly.
    pub fn same_pattern(&self, other: &CsrMatrix) -> bool {
        self.nrows == other.nrows
            && self.ncols == other.ncols
            && self.row_ptr == other.row_ptr
            && self.col_idx == other.col_idx
    }

    /// Symmetric permutation P A P^T with `perm[new] = old`.
    pub fn permute_symmetric(&self, perm: &[usize]) -> CsrMatrix {
        assert_eq!(self.nrows, self.ncols);
        let n = self.nrows;
        let mut inv = vec![0usize; n];
        for (new, &old) in perm.iter().enumerate() {
            inv[old] = new;
        }
        let mut triplets = Vec::with_capacity(self.nnz());
        for r in 0..n {
            let (cols, vals) = self.row(r);
            for (c, v) in cols.iter().zip(vals) {
                triplets.push((inv[r], inv[*c], *v));
            }
        }
        CsrMatrix::from_triplets(n, n, triplets)
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub fn axpy(y: &mut [f64], alpha: f64, x: &[f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

pub fn scale(y: &mut [f64], alpha: f64) {
    for yi in y.iter_mut() {
        *yi *= alpha;
    }
}

/// Parses a coordinate-format dump back into a matrix (testing aid).
pub fn parse_coordinate_text(text: &str) -> Result<CsrMatrix> {
    let mut lines = text.lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::invalid("empty coordinate text"))?;
    let parts: Vec<&str> = header.trim_start_matches('%').split_whitespace().collect();
    if parts.len() != 3 {
        return Err(Error::invalid("bad coordinate header"));
    }
    let nrows: usize = parts[0].parse().map_err(|_| Error::invalid("bad nrows"))?;
    let ncols: usize = parts[1].parse().map_err(|_| Error::invalid("bad ncols"))?;
    let mut triplets = Vec::new();
    for line in lines {
        if line.trim().is_empty() {
            continue;
        }
        let p: Vec<&str> = line.split_whitespace().collect();
        if p.len() != 3 {
            return Err(Error::invalid(format!("bad coordinate line {line:?}")));
        }
        triplets.push((
            p[0].parse().map_err(|_| Error::invalid("bad row"))?,
            p[1].parse().map_err(|_| Error::invalid("bad col"))?,
            p[2].parse().map_err(|_| Error::invalid("bad value"))?,
        ));
    }
    Ok(CsrMatrix::from_triplets(nrows, ncols, triplets))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn triplets_sum_duplicates() {
        let a = CsrMatrix::from_triplets(2, 2, vec![(0, 0, 1.0), (0, 0, 2.0), (1, 1, 4.0)]);
        assert_eq!(a.get(0, 0), 3.0);
        assert_eq!(a.get(0, 1), 0.0);
        assert_eq!(a.get(1, 1), 4.0);
        assert_eq!(a.nnz(), 2);
    }

    #[test]
    fn matvec_and_transpose_agree_with_dense() {
        let a = CsrMatrix::from_triplets(
            3,
            2,
            vec![(0, 0, 1.0), (0, 1, 2.0), (1, 0, -1.0), (2, 1, 5.0)],
        );
        let x = vec![3.0, -2.0];
        assert_eq!(a.matvec(&x), vec![-1.0, -3.0, -10.0]);
        let y = vec![1.0, 1.0, 1.0];
        assert_eq!(a.matvec_transpose(&y), vec![0.0, 7.0]);
        let at = a.transpose();
        assert_eq!(at.matvec(&y), vec![0.0, 7.0]);
    }

    #[test]
    fn matmul_matches_dense() {
        let a = CsrMatrix::from_triplets(2, 3, vec![(0, 0, 1.0), (0, 2, 2.0), (1, 1, 3.0)]);
        let b = CsrMatrix::from_triplets(3, 2, vec![(0, 0, 1.0), (1, 0, 4.0), (2, 1, -1.0)]);
        let c = a.matmul(&b);
        assert_eq!(c.get(0, 0), 1.0);
        assert_eq!(c.get(0, 1), -2.0);
        assert_eq!(c.get(1, 0), 12.0);
        assert_eq!(c.get(1, 1), 0.0);
    }

    #[test]
    fn coordinate_roundtrip() {
        let a = CsrMatrix::from_triplets(2, 3, vec![(0, 1, 1.5), (1, 2, -2.25)]);
        let b = parse_coordinate_text(&a.to_coordinate_text()).unwrap();
        assert!(a.same_pattern(&b));
        assert_eq!(a.max_abs_diff(&b), 0.0);
    }
}
