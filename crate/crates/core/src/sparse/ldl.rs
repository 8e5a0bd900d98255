//! Sparse simplicial LDL^T factorization (up-looking, elimination-tree based)
//! with reverse Cuthill-McKee pre-ordering.  Intended for symmetric positive
//! definite matrices; a nonpositive pivot is reported as a singular block.

use super::{reverse_cuthill_mckee, CsrMatrix};
use crate::error::Error;
use crate::Result;

pub struct LdlFactor {
    n: usize,
    /// perm[new] = old
    perm: Vec<usize>,
    inv_perm: Vec<usize>,
    // L stored by columns (unit diagonal omitted)
    lp: Vec<usize>,
    li: Vec<usize>,
    lx: Vec<f64>,
    d: Vec<f64>,
}

impl LdlFactor {
    /// Factorizes a symmetric positive definite matrix.  `block` names the
    /// operator in pivot-failure diagnostics.
    pub fn new(a: &CsrMatrix, block: &'static str) -> Result<Self> {
        assert_eq!(a.nrows(), a.ncols());
        let perm = reverse_cuthill_mckee(a);
        let pa = a.permute_symmetric(&perm);
        let n = pa.nrows();
        let mut inv_perm = vec![0usize; n];
        for (new, &old) in perm.iter().enumerate() {
            inv_perm[old] = new;
        }

        // symbolic: elimination tree and column counts from the upper part
        // (row k of CSR holds column k of the symmetric matrix)
        let mut parent = vec![usize::MAX; n];
        let mut lnz = vec![0usize; n];
        let mut flag = vec![usize::MAX; n];
        for k in 0..n {
            flag[k] = k;
            for &c in pa.row(k).0 {
                if c >= k {
                    continue;
                }
                let mut i = c;
                while flag[i] != k {
                    if parent[i] == usize::MAX {
                        parent[i] = k;
                    }
                    lnz[i] += 1;
                    flag[i] = k;
                    i = parent[i];
                }
            }
        }
        let mut lp = vec![0usize; n + 1];
        for i in 0..n {
            lp[i + 1] = lp[i] + lnz[i];
        }
        let nnz = lp[n];
        let mut li = vec![0usize; nnz];
        let mut lx = vec![0.0f64; nnz];
        let mut lfill = vec![0usize; n]; // entries filled per column
        let mut d = vec![0.0f64; n];

        // numeric, up-looking: compute row k of L and d[k]
        let mut y = vec![0.0f64; n];
        let mut pattern = vec![0usize; n];
        for k in 0..n {
            flag[k] = k;
            let mut top = n;
            d[k] = 0.0;
            let (cols, vals) = pa.row(k);
            for (c, v) in cols.iter().zip(vals) {
                if *c > k {
                    continue;
                }
                if *c == k {
                    d[k] = *v;
                    continue;
                }
                y[*c] = *v;
                // walk the etree collecting the pattern in topological order
                let mut len = 0;
                let mut i = *c;
                while flag[i] != k {
                    pattern[len] = i;
                    len += 1;
                    flag[i] = k;
                    i = parent[i];
                }
                // push this chain in reverse onto the stack region [top-len, top)
                for l in 0..len {
                    top -= 1;
                    pattern[top] = pattern[len - 1 - l];
                    // temporary swap storage; fixed below
                }
                // note: chain was stored in pattern[0..len] then copied reversed
            }
            // pattern[top..n] now holds the nonzero pattern of row k of L in
            // etree order; eliminate
            for idx in top..n {
                let i = pattern[idx];
                let yi = y[i];
                y[i] = 0.0;
                let p2 = lp[i] + lfill[i];
                for p in lp[i]..p2 {
                    y[li[p]] -= lx[p] * yi;
                }
                let l_ki = yi / d[i];
                d[k] -= l_ki * yi;
                li[p2] = k;
                lx[p2] = l_ki;
                lfill[i] += 1;
            }
            if d[k] <= 0.0 || !d[k].is_finite() {
                return Err(Error::SingularBlock {
                    block,
                    msg: format!("nonpositive pivot {:e} at eliminated row {k}", d[k]),
                });
            }
        }

        Ok(LdlFactor {
            n,
            perm,
            inv_perm,
            lp,
            li,
            lx,
            d,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Solves A x = b.
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        debug_assert_eq!(b.len(), self.n);
        let mut x: Vec<f64> = (0..self.n).map(|i| b[self.perm[i]]).collect();
        // L z = b
        for j in 0..self.n {
            let xj = x[j];
            if xj != 0.0 {
                for p in self.lp[j]..self.lp[j + 1] {
                    x[self.li[p]] -= self.lx[p] * xj;
                }
            }
        }
        for j in 0..self.n {
            x[j] /= self.d[j];
        }
        // L^T y = z
        for j in (0..self.n).rev() {
            let mut acc = x[j];
            for p in self.lp[j]..self.lp[j + 1] {
                acc -= self.lx[p] * x[self.li[p]];
            }
            x[j] = acc;
        }
        let mut out = vec![0.0; self.n];
        for new in 0..self.n {
            out[self.perm[new]] = x[new];
        }
        out
    }

    pub fn nnz_l(&self) -> usize {
        self.lx.len()
    }

    #[allow(dead_code)]
    pub(crate) fn inv_perm(&self) -> &[usize] {
        &self.inv_perm
    }
}
