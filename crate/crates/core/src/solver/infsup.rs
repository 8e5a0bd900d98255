//! Inf-sup constant via the pressure Schur generalized eigenproblem
//!
//!   (B^T A^{-1} B) q = lambda M q
//!
//! restricted to the mean-zero subspace (the constant-pressure direction is
//! deflated M-orthogonally; the mean row equals M times the all-ones
//! coefficient vector).  Small pressure spaces are reduced densely; larger
//! ones use block LOBPCG with the mass inverse as preconditioner, which
//! handles the clustered bottom of the Schur spectrum that defeats
//! single-vector inverse iteration.  beta = sqrt(nu * lambda_min) removes the
//! viscosity scaling of A.  A rank-deficient pair (the raw unreduced
//! divergence matrix) simply produces lambda_min ~ 0.

use crate::error::Error;
use crate::sparse::smalldense::{
    backward_solve_t, dense_cholesky, forward_solve, jacobi_eigen,
};
use crate::sparse::{axpy, dot, norm2, BlockDiagSolver, CsrMatrix, LdlFactor};
use crate::Result;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

#[derive(Debug, Clone)]
pub struct InfSupResult {
    pub beta: f64,
    /// Viscosity-normalized smallest eigenvalue (beta^2).
    pub lambda_min: f64,
    pub iterations: usize,
    /// Scaled eigenresidual ||S x - lambda M x|| / (||S x|| + lambda_max ||M x||).
    pub eigen_residual: f64,
}

/// Threshold between the dense reduction and LOBPCG.
const DENSE_LIMIT: usize = 400;

pub fn compute_infsup_constant(
    a: &CsrMatrix,
    b: &CsrMatrix,
    pressure_mass: &CsrMatrix,
    mean_row: &[f64],
    nu: f64,
) -> Result<InfSupResult> {
    let m = b.ncols();
    if m < 2 {
        return Err(Error::invalid("pressure space too small for an inf-sup value"));
    }
    let a_factor = LdlFactor::new(a, "velocity stiffness")?;
    let schur = |p: &[f64]| -> Vec<f64> {
        let bp = b.matvec(p);
        let ainv = a_factor.solve(&bp);
        b.matvec_transpose(&ainv)
    };
    let total_mass: f64 = mean_row.iter().sum();
    let project = |v: &mut [f64]| {
        let c = dot(mean_row, v) / total_mass;
        for vi in v.iter_mut() {
            *vi -= c;
        }
    };
    let result = if m <= DENSE_LIMIT {
        dense_smallest(&schur, pressure_mass, &project, m)?
    } else {
        lobpcg_smallest(&schur, pressure_mass, &project, m)?
    };
    Ok(InfSupResult {
        beta: (nu * result.0).max(0.0).sqrt(),
        lambda_min: nu * result.0,
        iterations: result.2,
        eigen_residual: result.1,
    })
}

/// Dense reduction: an explicit basis of the mean-zero complement, dense
/// Schur and mass blocks, Cholesky reduction, Jacobi eigensolve.
fn dense_smallest(
    schur: &dyn Fn(&[f64]) -> Vec<f64>,
    mass: &CsrMatrix,
    project: &dyn Fn(&mut [f64]),
    m: usize,
) -> Result<(f64, f64, usize)> {
    let k = m - 1;
    // basis f_i = projection of e_i, i = 0..m-2 (any m-1 projections of the
    // coordinate vectors span the complement)
    let basis: Vec<Vec<f64>> = (0..k)
        .map(|i| {
            let mut e = vec![0.0; m];
            e[i] = 1.0;
            project(&mut e);
            e
        })
        .collect();
    let s_cols: Vec<Vec<f64>> = basis.iter().map(|f| schur(f)).collect();
    let m_cols: Vec<Vec<f64>> = basis.iter().map(|f| mass.matvec(f)).collect();
    let mut s_red = vec![0.0; k * k];
    let mut m_red = vec![0.0; k * k];
    for i in 0..k {
        for j in 0..k {
            s_red[i * k + j] = dot(&basis[i], &s_cols[j]);
            m_red[i * k + j] = dot(&basis[i], &m_cols[j]);
        }
    }
    // symmetrize against accumulation noise
    for i in 0..k {
        for j in 0..i {
            let v = 0.5 * (s_red[i * k + j] + s_red[j * k + i]);
            s_red[i * k + j] = v;
            s_red[j * k + i] = v;
            let w = 0.5 * (m_red[i * k + j] + m_red[j * k + i]);
            m_red[i * k + j] = w;
            m_red[j * k + i] = w;
        }
    }
    if !dense_cholesky(&mut m_red, k) {
        return Err(Error::SingularBlock {
            block: "pressure mass",
            msg: "reduced mass matrix not positive definite".into(),
        });
    }
    // C = L^{-1} S L^{-T}
    let mut c = s_red;
    // columns: solve L X = S
    for j in 0..k {
        let mut col: Vec<f64> = (0..k).map(|i| c[i * k + j]).collect();
        forward_solve(&m_red, k, &mut col);
        for i in 0..k {
            c[i * k + j] = col[i];
        }
    }
    // rows: solve X L^T = Y  =>  L X^T = Y^T
    for i in 0..k {
        let mut row: Vec<f64> = c[i * k..(i + 1) * k].to_vec();
        forward_solve(&m_red, k, &mut row);
        c[i * k..(i + 1) * k].copy_from_slice(&row);
    }
    let (vals, vecs) = jacobi_eigen(&mut c, k);
    let lambda = vals[0].max(0.0);
    // eigenvector back in pressure coordinates for the residual check
    let mut y: Vec<f64> = (0..k).map(|i| vecs[i * k]).collect();
    backward_solve_t(&m_red, k, &mut y);
    let mut x = vec![0.0; m];
    for (i, f) in basis.iter().enumerate() {
        axpy(&mut x, y[i], f);
    }
    let res = eigen_residual(schur, mass, &x, lambda, vals[k - 1].max(lambda));
    Ok((lambda, res, 1))
}

fn eigen_residual(
    schur: &dyn Fn(&[f64]) -> Vec<f64>,
    mass: &CsrMatrix,
    x: &[f64],
    lambda: f64,
    lambda_max: f64,
) -> f64 {
    let sx = schur(x);
    let mx = mass.matvec(x);
    let mut r = sx.clone();
    axpy(&mut r, -lambda, &mx);
    norm2(&r) / (norm2(&sx) + lambda_max * norm2(&mx)).max(f64::MIN_POSITIVE)
}

/// Block LOBPCG for the smallest eigenvalues of the (S, M) pencil on the
/// deflated subspace, preconditioned by the block-diagonal mass inverse.
fn lobpcg_smallest(
    schur: &dyn Fn(&[f64]) -> Vec<f64>,
    mass: &CsrMatrix,
    project: &dyn Fn(&mut [f64]),
    m: usize,
) -> Result<(f64, f64, usize)> {
    let mass_solver = BlockDiagSolver::new(mass, "pressure mass")?;
    let block = 5usize.min(m / 4).max(2);
    let tol = 1e-10;
    let max_iter = 400;

    // crude largest-eigenvalue estimate for the convergence scale
    let mut rng = StdRng::seed_from_u64(0xe16);
    let lambda_max_est = {
        let mut v: Vec<f64> = (0..m).map(|_| rng.gen::<f64>() - 0.5).collect();
        project(&mut v);
        let mut lam = 1.0;
        for _ in 0..20 {
            let sv = schur(&v);
            let mut w = mass_solver.solve(&sv);
            project(&mut w);
            let nw = norm2(&w).max(f64::MIN_POSITIVE);
            lam = dot(&v, &sv) / dot(&v, &mass.matvec(&v)).max(f64::MIN_POSITIVE);
            for (a, b) in v.iter_mut().zip(&w) {
                *a = b / nw;
            }
        }
        lam.abs().max(f64::MIN_POSITIVE)
    };

    let m_inner = |u: &[f64], v: &[f64]| dot(u, &mass.matvec(v));
    // M-orthonormalizes `vecs` against `fixed` and among themselves (two
    // Gram-Schmidt passes); candidates are normalized first so the dependence
    // test is relative, which keeps small correction directions alive near
    // convergence.
    let orthonormalize = |vecs: &mut Vec<Vec<f64>>, fixed: &[Vec<f64>]| {
        let mut out: Vec<Vec<f64>> = Vec::with_capacity(vecs.len());
        for v in vecs.iter() {
            let mut w = v.clone();
            project(&mut w);
            let n0 = m_inner(&w, &w).max(0.0).sqrt();
            if n0 <= 0.0 {
                continue;
            }
            crate::sparse::scale(&mut w, 1.0 / n0);
            for _pass in 0..2 {
                for f in fixed.iter().chain(out.iter()) {
                    let c = m_inner(f, &w);
                    axpy(&mut w, -c, f);
                }
            }
            let nw = m_inner(&w, &w).max(0.0).sqrt();
            if nw > 1e-7 {
                crate::sparse::scale(&mut w, 1.0 / nw);
                out.push(w);
            }
        }
        *vecs = out;
    };

    let mut x: Vec<Vec<f64>> = (0..block)
        .map(|_| (0..m).map(|_| rng.gen::<f64>() - 0.5).collect())
        .collect();
    orthonormalize(&mut x, &[]);
    let mut p: Vec<Vec<f64>> = Vec::new();
    let mut lambda = f64::INFINITY;
    let mut best_res = f64::INFINITY;
    let mut stagnant = 0usize;

    for it in 1..=max_iter {
        // subspace V = [X, W, P] with W the preconditioned residuals
        let sx: Vec<Vec<f64>> = x.iter().map(|v| schur(v)).collect();
        let mx: Vec<Vec<f64>> = x.iter().map(|v| mass.matvec(v)).collect();
        let mut w: Vec<Vec<f64>> = Vec::with_capacity(x.len());
        for i in 0..x.len() {
            let lam = dot(&x[i], &sx[i]);
            let mut r = sx[i].clone();
            axpy(&mut r, -lam, &mx[i]);
            let mut z = mass_solver.solve(&r);
            project(&mut z);
            w.push(z);
        }
        let mut v = x.clone();
        orthonormalize(&mut w, &v);
        v.extend(w);
        let mut pdir = p.clone();
        orthonormalize(&mut pdir, &v);
        v.extend(pdir);

        let nv = v.len();
        let sv: Vec<Vec<f64>> = v.iter().map(|u| schur(u)).collect();
        let mut h = vec![0.0; nv * nv];
        for i in 0..nv {
            for j in 0..=i {
                let val = dot(&v[i], &sv[j]);
                h[i * nv + j] = val;
                h[j * nv + i] = val;
            }
        }
        let (vals, vecs) = jacobi_eigen(&mut h, nv);
        let keep = block.min(nv);
        let mut xnew: Vec<Vec<f64>> = Vec::with_capacity(keep);
        let mut pnew: Vec<Vec<f64>> = Vec::with_capacity(keep);
        for j in 0..keep {
            let mut xi = vec![0.0; m];
            let mut pi = vec![0.0; m];
            for (i, u) in v.iter().enumerate() {
                let c = vecs[i * nv + j];
                axpy(&mut xi, c, u);
                if i >= x.len() {
                    axpy(&mut pi, c, u);
                }
            }
            xnew.push(xi);
            pnew.push(pi);
        }
        x = xnew;
        orthonormalize(&mut x, &[]);
        p = pnew;

        let new_lambda = vals[0].max(0.0);
        let change = (new_lambda - lambda).abs() / new_lambda.abs().max(f64::MIN_POSITIVE);
        lambda = new_lambda;
        let res = eigen_residual(schur, mass, &x[0], lambda, lambda_max_est);
        best_res = res;
        if res <= tol {
            return Ok((lambda, res, it));
        }
        // a Ritz value is an upper bound on lambda_min, so a tiny one already
        // certifies the (near-)singular case
        if lambda <= 1e-12 * lambda_max_est {
            return Ok((lambda, res, it));
        }
        stagnant = if change <= 1e-13 { stagnant + 1 } else { 0 };
        if stagnant >= 12 && res <= 1e-8 {
            return Ok((lambda, res, it));
        }
    }
    if best_res <= 1e-6 {
        return Ok((lambda, best_res, max_iter));
    }
    Err(Error::NonConvergence {
        iterations: max_iter,
        tail: vec![lambda, best_res],
    })
}
