//! Exact solver for block-diagonal SPD matrices.  The blocks are recovered as
//! connected components of the sparsity graph, which makes this directly
//! applicable to constrained-pressure mass matrices (one small block per
//! singular feature) and to plain diagonal matrices.

use super::CsrMatrix;
use crate::error::Error;
use crate::Result;

pub struct BlockDiagSolver {
    n: usize,
    /// Per block: member indices and the dense Cholesky factor (lower, row-major).
    blocks: Vec<(Vec<usize>, Vec<f64>)>,
}

impl BlockDiagSolver {
    pub fn new(m: &CsrMatrix, block_name: &'static str) -> Result<Self> {
        assert_eq!(m.nrows(), m.ncols());
        let n = m.nrows();
        let mut component = vec![usize::MAX; n];
        let mut blocks_members: Vec<Vec<usize>> = Vec::new();
        for start in 0..n {
            if component[start] != usize::MAX {
                continue;
            }
            let id = blocks_members.len();
            let mut members = vec![start];
            component[start] = id;
            let mut stack = vec![start];
            while let Some(u) = stack.pop() {
                for &v in m.row(u).0 {
                    if component[v] == usize::MAX {
                        component[v] = id;
                        members.push(v);
                        stack.push(v);
                    }
                }
            }
            members.sort_unstable();
            blocks_members.push(members);
        }
        let mut blocks = Vec::with_capacity(blocks_members.len());
        for members in blocks_members {
            let k = members.len();
            let mut dense = vec![0.0; k * k];
            for (li, &gi) in members.iter().enumerate() {
                for (lj, &gj) in members.iter().enumerate() {
                    dense[li * k + lj] = m.get(gi, gj);
                }
            }
            cholesky_in_place(&mut dense, k).map_err(|pivot| Error::SingularBlock {
                block: block_name,
                msg: format!("block of size {k} has nonpositive pivot {pivot:e}"),
            })?;
            blocks.push((members, dense));
        }
        Ok(BlockDiagSolver { n, blocks })
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        debug_assert_eq!(b.len(), self.n);
        let mut x = vec![0.0; self.n];
        for (members, chol) in &self.blocks {
            let k = members.len();
            let mut y: Vec<f64> = members.iter().map(|&g| b[g]).collect();
            // forward then backward substitution with the dense factor
            for i in 0..k {
                let mut acc = y[i];
                for j in 0..i {
                    acc -= chol[i * k + j] * y[j];
                }
                y[i] = acc / chol[i * k + i];
            }
            for i in (0..k).rev() {
                let mut acc = y[i];
                for j in (i + 1)..k {
                    acc -= chol[j * k + i] * y[j];
                }
                y[i] = acc / chol[i * k + i];
            }
            for (li, &g) in members.iter().enumerate() {
                x[g] = y[li];
            }
        }
        x
    }

    pub fn n_blocks(&self) -> usize {
        self.blocks.len()
    }

    pub fn max_block_size(&self) -> usize {
        self.blocks.iter().map(|(m, _)| m.len()).max().unwrap_or(0)
    }
}

/// Dense lower Cholesky in place; returns the offending pivot on failure.
fn cholesky_in_place(a: &mut [f64], k: usize) -> std::result::Result<(), f64> {
    for i in 0..k {
        for j in 0..=i {
            let mut acc = a[i * k + j];
            for l in 0..j {
                acc -= a[i * k + l] * a[j * k + l];
            }
            if i == j {
                if acc <= 0.0 || !acc.is_finite() {
                    return Err(acc);
                }
                a[i * k + i] = acc.sqrt();
            } else {
                a[i * k + j] = acc / a[j * k + j];
            }
        }
        for j in (i + 1)..k {
            a[i * k + j] = 0.0;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solves_block_diagonal_system() {
        // two blocks: {0, 2} coupled, {1} alone
        let m = CsrMatrix::from_triplets(
            3,
            3,
            vec![
                (0, 0, 2.0),
                (0, 2, 1.0),
                (2, 0, 1.0),
                (2, 2, 2.0),
                (1, 1, 4.0),
            ],
        );
        let solver = BlockDiagSolver::new(&m, "mass").unwrap();
        assert_eq!(solver.n_blocks(), 2);
        let b = vec![3.0, 8.0, 3.0];
        let x = solver.solve(&b);
        let mx = m.matvec(&x);
        for (a, b) in mx.iter().zip(&b) {
            assert!((a - b).abs() < 1e-13);
        }
    }
}
