//! Projected, preconditioned conjugate gradients on an operator given as a
//! closure.  The projection keeps iterates in a subspace (used to pin the
//! pressure mean); a curvature breakdown is reported together with the
//! offending direction, which callers use to detect singular Schur blocks and
//! to extract near-kernel vectors.

use super::{axpy, dot, norm2};

pub struct CgParams {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_iter: usize,
    /// Relative curvature threshold: breakdown when p'Sp <= threshold * |p|^2 * scale.
    pub curvature_tol: f64,
}

impl Default for CgParams {
    fn default() -> Self {
        CgParams {
            rel_tol: 1e-13,
            abs_tol: 0.0,
            max_iter: 5000,
            curvature_tol: 1e-14,
        }
    }
}

pub enum CgOutcome {
    /// Converged solution and iteration count.
    Converged { x: Vec<f64>, iterations: usize },
    /// Iteration cap reached; best iterate and final residual norm.
    MaxIterations { x: Vec<f64>, residual: f64 },
    /// Direction of (numerically) nonpositive curvature: p' S p ~ 0.
    KernelDirection { p: Vec<f64>, curvature: f64 },
}

/// Solves S x = b with S symmetric positive semidefinite on the subspace
/// picked out by `project`.  `op` applies S, `precond` an approximation of
/// S^{-1}, `project` the subspace projector (applied to every produced
/// vector), and `curv_scale` measures |p|^2 for the curvature test (an
/// M-norm in pencil settings).
pub fn cg_solve(
    op: &dyn Fn(&[f64]) -> Vec<f64>,
    b: &[f64],
    precond: &dyn Fn(&[f64]) -> Vec<f64>,
    project: &dyn Fn(&mut Vec<f64>),
    curv_scale: &dyn Fn(&[f64]) -> f64,
    params: &CgParams,
) -> CgOutcome {
    let n = b.len();
    let mut x = vec![0.0; n];
    let mut r = b.to_vec();
    project(&mut r);
    let b_norm = norm2(&r).max(params.abs_tol).max(f64::MIN_POSITIVE);
    let target = params.rel_tol * b_norm + params.abs_tol;
    if norm2(&r) <= target {
        return CgOutcome::Converged { x, iterations: 0 };
    }
    let mut z = precond(&r);
    project(&mut z);
    let mut p = z.clone();
    let mut rho = dot(&r, &z);
    for it in 0..params.max_iter {
        let mut q = op(&p);
        project(&mut q);
        let curvature = dot(&p, &q);
        let scale = curv_scale(&p).max(f64::MIN_POSITIVE);
        if curvature <= params.curvature_tol * scale {
            return CgOutcome::KernelDirection { p, curvature };
        }
        let alpha = rho / curvature;
        axpy(&mut x, alpha, &p);
        axpy(&mut r, -alpha, &q);
        let rnorm = norm2(&r);
        if rnorm <= target {
            return CgOutcome::Converged { x, iterations: it + 1 };
        }
        z = precond(&r);
        project(&mut z);
        let rho_new = dot(&r, &z);
        let beta = rho_new / rho;
        rho = rho_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    let residual = norm2(&r);
    CgOutcome::MaxIterations { x, residual }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sparse::CsrMatrix;

    #[test]
    fn solves_small_spd_system() {
        let a = CsrMatrix::from_triplets(
            3,
            3,
            vec![
                (0, 0, 4.0),
                (0, 1, 1.0),
                (1, 0, 1.0),
                (1, 1, 3.0),
                (1, 2, 1.0),
                (2, 1, 1.0),
                (2, 2, 5.0),
            ],
        );
        let b = vec![1.0, 2.0, 3.0];
        let outcome = cg_solve(
            &|x| a.matvec(x),
            &b,
            &|r| r.to_vec(),
            &|_v| {},
            &|p| dot(p, p),
            &CgParams::default(),
        );
        match outcome {
            CgOutcome::Converged { x, .. } => {
                let r: Vec<f64> = a.matvec(&x).iter().zip(&b).map(|(ax, bi)| ax - bi).collect();
                assert!(norm2(&r) < 1e-11);
            }
            _ => panic!("CG failed on SPD system"),
        }
    }

    #[test]
    fn detects_kernel_direction_of_singular_system() {
        // S = diag(1, 1, 0): rhs with a kernel component
        let a = CsrMatrix::from_triplets(3, 3, vec![(0, 0, 1.0), (1, 1, 1.0), (2, 2, 0.0)]);
        let b = vec![1.0, 1.0, 1.0];
        let outcome = cg_solve(
            &|x| a.matvec(x),
            &b,
            &|r| r.to_vec(),
            &|_v| {},
            &|p| dot(p, p),
            &CgParams::default(),
        );
        match outcome {
            CgOutcome::KernelDirection { p, .. } => {
                let sp = a.matvec(&p);
                assert!(norm2(&sp) <= 1e-10 * norm2(&p));
            }
            CgOutcome::Converged { .. } => panic!("should not converge"),
            CgOutcome::MaxIterations { .. } => panic!("should break down, not stall"),
        }
    }
}
