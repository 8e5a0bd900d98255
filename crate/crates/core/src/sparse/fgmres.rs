//! Flexible GMRES: the right preconditioner may change between iterations
//! (here it contains inner CG sweeps), so the preconditioned basis vectors
//! are stored alongside the Arnoldi basis.

use super::{axpy, norm2};
use crate::error::Error;
use crate::Result;

/// Abstract operator for Krylov methods.
pub trait LinearOperator {
    fn dim(&self) -> usize;
    fn apply(&self, x: &[f64]) -> Vec<f64>;
}

pub struct FgmresParams {
    /// Absolute tolerance on the Euclidean residual norm.
    pub abs_tol: f64,
    pub max_iter: usize,
}

impl Default for FgmresParams {
    fn default() -> Self {
        FgmresParams {
            abs_tol: 1e-8,
            max_iter: 500,
        }
    }
}

pub struct FgmresResult {
    pub x: Vec<f64>,
    pub iterations: usize,
    pub residual_history: Vec<f64>,
}

/// Solves A x = b with a flexible right preconditioner `precond` (an
/// approximate application of A^{-1} that may be iterative itself).
pub fn fgmres(
    a: &dyn LinearOperator,
    b: &[f64],
    precond: &mut dyn FnMut(&[f64]) -> Vec<f64>,
    params: &FgmresParams,
) -> Result<FgmresResult> {
    let n = a.dim();
    assert_eq!(b.len(), n);
    let mut history = Vec::new();
    let beta0 = norm2(b);
    history.push(beta0);
    if beta0 <= params.abs_tol {
        return Ok(FgmresResult {
            x: vec![0.0; n],
            iterations: 0,
            residual_history: history,
        });
    }

    let m = params.max_iter;
    let mut v: Vec<Vec<f64>> = Vec::with_capacity(m + 1); // Arnoldi basis
    let mut z: Vec<Vec<f64>> = Vec::with_capacity(m); // preconditioned vectors
    let mut h = vec![0.0f64; (m + 1) * m]; // Hessenberg, column-major per iteration
    let mut cs = vec![0.0f64; m];
    let mut sn = vec![0.0f64; m];
    let mut g = vec![0.0f64; m + 1];
    g[0] = beta0;
    let mut v0 = b.to_vec();
    for val in v0.iter_mut() {
        *val /= beta0;
    }
    v.push(v0);

    let mut iterations = 0;
    for j in 0..m {
        iterations = j + 1;
        let zj = precond(&v[j]);
        let mut w = a.apply(&zj);
        z.push(zj);
        // modified Gram-Schmidt
        for i in 0..=j {
            let hij = super::dot(&w, &v[i]);
            h[i * m + j] = hij;
            axpy(&mut w, -hij, &v[i]);
        }
        let hnext = norm2(&w);
        h[(j + 1) * m + j] = hnext;
        // apply stored Givens rotations to the new column
        for i in 0..j {
            let t1 = cs[i] * h[i * m + j] + sn[i] * h[(i + 1) * m + j];
            let t2 = -sn[i] * h[i * m + j] + cs[i] * h[(i + 1) * m + j];
            h[i * m + j] = t1;
            h[(i + 1) * m + j] = t2;
        }
        // new rotation
        let (c, s) = givens(h[j * m + j], h[(j + 1) * m + j]);
        cs[j] = c;
        sn[j] = s;
        h[j * m + j] = c * h[j * m + j] + s * h[(j + 1) * m + j];
        h[(j + 1) * m + j] = 0.0;
        g[j + 1] = -s * g[j];
        g[j] *= c;
        let res = g[j + 1].abs();
        history.push(res);
        if res <= params.abs_tol {
            let x = assemble_solution(&z, &h, &g, j + 1, m, n);
            return Ok(FgmresResult {
                x,
                iterations,
                residual_history: history,
            });
        }
        if hnext == 0.0 {
            break;
        }
        let mut vnext = w;
        for val in vnext.iter_mut() {
            *val /= hnext;
        }
        v.push(vnext);
    }
    // not converged; report history
    let tail: Vec<f64> = history.iter().rev().take(5).copied().collect();
    Err(Error::NonConvergence {
        iterations,
        tail,
    })
}

fn givens(a: f64, b: f64) -> (f64, f64) {
    if b == 0.0 {
        (1.0, 0.0)
    } else {
        let r = a.hypot(b);
        (a / r, b / r)
    }
}

fn assemble_solution(
    z: &[Vec<f64>],
    h: &[f64],
    g: &[f64],
    k: usize,
    m: usize,
    n: usize,
) -> Vec<f64> {
    // back substitution on the k x k upper triangular system
    let mut y = vec![0.0f64; k];
    for i in (0..k).rev() {
        let mut acc = g[i];
        for j in (i + 1)..k {
            acc -= h[i * m + j] * y[j];
        }
        y[i] = acc / h[i * m + i];
    }
    let mut x = vec![0.0f64; n];
    for (j, yj) in y.iter().enumerate() {
        axpy(&mut x, *yj, &z[j]);
    }
    x
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sparse::CsrMatrix;

    struct MatOp(CsrMatrix);
    impl LinearOperator for MatOp {
        fn dim(&self) -> usize {
            self.0.nrows()
        }
        fn apply(&self, x: &[f64]) -> Vec<f64> {
            self.0.matvec(x)
        }
    }

    #[test]
    fn solves_nonsymmetric_system() {
        let a = CsrMatrix::from_triplets(
            3,
            3,
            vec![
                (0, 0, 3.0),
                (0, 1, 1.0),
                (1, 1, 2.0),
                (1, 2, -1.0),
                (2, 0, 0.5),
                (2, 2, 4.0),
            ],
        );
        let op = MatOp(a.clone());
        let b = vec![1.0, 0.0, 2.0];
        let mut ident = |r: &[f64]| r.to_vec();
        let params = FgmresParams {
            abs_tol: 1e-12,
            max_iter: 50,
        };
        let result = fgmres(&op, &b, &mut ident, &params).unwrap();
        let r: Vec<f64> = a
            .matvec(&result.x)
            .iter()
            .zip(&b)
            .map(|(ax, bi)| ax - bi)
            .collect();
        assert!(norm2(&r) <= 1e-11);
    }

    #[test]
    fn zero_rhs_converges_immediately() {
        let a = CsrMatrix::from_triplets(2, 2, vec![(0, 0, 1.0), (1, 1, 1.0)]);
        let op = MatOp(a);
        let mut ident = |r: &[f64]| r.to_vec();
        let result = fgmres(&op, &[0.0, 0.0], &mut ident, &FgmresParams::default()).unwrap();
        assert_eq!(result.iterations, 0);
        assert_eq!(result.x, vec![0.0, 0.0]);
    }
}
