//! Solvers for the constrained saddle-point system
//!
//!   [ A   B   0 ] [u]   [f]
//!   [ B^T 0   m ] [p] = [0]
//!   [ 0   m^T 0 ] [mu]  [0]
//!
//! where m is the vector of pressure basis integrals; the scalar multiplier
//! pins the pressure mean without disturbing the symmetric block shape.
//! The direct path eliminates the velocity block with a sparse LDL^T of A and
//! runs projected CG on the pressure Schur complement; the iterative path is
//! flexible GMRES on the full system with the block-diagonal preconditioner
//! diag(A-hat, S-hat, 1), S-hat = B^T diag(A)^{-1} B.

mod bestapprox;
mod infsup;
mod ipm;

pub use bestapprox::{
    best_approx_pressure, best_approx_velocity, h1_seminorm_diff, interpolate_velocity,
};
pub use infsup::{compute_infsup_constant, InfSupResult};
pub use ipm::{iterated_penalty_solve, IpmConfig, IpmSolution};

use crate::error::Error;
use crate::sparse::{
    axpy, cg_solve, dot, fgmres, norm2, CgOutcome, CgParams, CsrMatrix, FgmresParams,
    LdlFactor, LinearOperator,
};
use crate::Result;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

/// Assembled saddle system on the reduced (weakly continuous) pressure space.
#[derive(Debug, Clone)]
pub struct SaddleSystem {
    pub a: CsrMatrix,
    pub b: CsrMatrix,
    /// Integral of each pressure basis function (cell-measure sums per column).
    pub mean_row: Vec<f64>,
    pub rhs: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct Solution {
    pub velocity: Vec<f64>,
    /// Pressure coefficients in the reduced basis.
    pub pressure: Vec<f64>,
    pub multiplier: f64,
    pub iterations: usize,
    pub residuals: Vec<f64>,
    /// Relative residual of the full augmented system.
    pub final_residual: f64,
}

pub struct DirectOptions {
    /// Re-solve from a random start and compare pressures; detects a
    /// rank-deficient constraint space (e.g. the unreduced raw pair).
    pub probe_rank_deficiency: bool,
    pub cg: CgParams,
}

impl Default for DirectOptions {
    fn default() -> Self {
        DirectOptions {
            probe_rank_deficiency: true,
            cg: CgParams::default(),
        }
    }
}

fn mean_projector(mean_row: &[f64]) -> impl Fn(&mut Vec<f64>) + '_ {
    let mm = dot(mean_row, mean_row);
    move |v: &mut Vec<f64>| {
        let c = dot(mean_row, v) / mm;
        axpy(v, -c, mean_row);
    }
}

/// Direct solve: factor A, run projected CG on the Schur complement with the
/// pressure mass as preconditioner, then recover u and the multiplier.  One
/// round of iterative refinement keeps the augmented residual at the 1e-10
/// relative target.
pub fn solve_direct(
    sys: &SaddleSystem,
    pressure_mass: &CsrMatrix,
    opts: &DirectOptions,
) -> Result<Solution> {
    let n = sys.a.nrows();
    let m = sys.b.ncols();
    let rhs_norm = norm2(&sys.rhs);
    if rhs_norm == 0.0 {
        return Ok(Solution {
            velocity: vec![0.0; n],
            pressure: vec![0.0; m],
            multiplier: 0.0,
            iterations: 0,
            residuals: vec![0.0],
            final_residual: 0.0,
        });
    }
    let a_factor = LdlFactor::new(&sys.a, "velocity stiffness")?;
    let mass = crate::sparse::BlockDiagSolver::new(pressure_mass, "pressure mass")?;
    let schur = |p: &[f64]| -> Vec<f64> {
        let bp = sys.b.matvec(p);
        let ainv_bp = a_factor.solve(&bp);
        sys.b.matvec_transpose(&ainv_bp)
    };
    let project = mean_projector(&sys.mean_row);
    let curv_scale = |p: &[f64]| -> f64 { dot(p, &pressure_mass.matvec(p)) };
    let precond = |r: &[f64]| mass.solve(r);

    // b_p = B^T A^{-1} f
    let ainv_f = a_factor.solve(&sys.rhs);
    let b_p = sys.b.matvec_transpose(&ainv_f);

    let solve_pressure = |rhs_p: &[f64]| -> Result<(Vec<f64>, usize)> {
        match cg_solve(&schur, rhs_p, &precond, &project, &curv_scale, &opts.cg) {
            CgOutcome::Converged { x, iterations } => Ok((x, iterations)),
            CgOutcome::MaxIterations { x, residual } => {
                // accept if the refinement loop can still reach the target
                if residual <= 1e-8 * norm2(rhs_p).max(1e-300) {
                    Ok((x, opts.cg.max_iter))
                } else {
                    Err(Error::NonConvergence {
                        iterations: opts.cg.max_iter,
                        tail: vec![residual],
                    })
                }
            }
            CgOutcome::KernelDirection { curvature, .. } => Err(Error::SingularBlock {
                block: "pressure Schur complement",
                msg: format!(
                    "near-zero curvature {curvature:e}; the constraint transform is rank deficient"
                ),
            }),
        }
    };

    let (mut pressure, mut iterations) = solve_pressure(&b_p)?;

    if opts.probe_rank_deficiency {
        // a random start keeps any kernel component it begins with; a unique
        // system reproduces the same pressure
        let mut rng = StdRng::seed_from_u64(0x5eed);
        let mut start: Vec<f64> = (0..m).map(|_| rng.gen::<f64>() - 0.5).collect();
        let scale = norm2(&pressure).max(1.0);
        let start_norm = norm2(&start).max(1e-300);
        crate::sparse::scale(&mut start, scale / start_norm);
        project(&mut start);
        let s_start = schur(&start);
        let shifted: Vec<f64> = b_p.iter().zip(&s_start).map(|(b, s)| b - s).collect();
        let (delta, _) = solve_pressure(&shifted)?;
        let second: Vec<f64> = start.iter().zip(&delta).map(|(a, b)| a + b).collect();
        let diff: Vec<f64> = second.iter().zip(&pressure).map(|(a, b)| a - b).collect();
        if norm2(&diff) > 1e-6 * scale {
            return Err(Error::RankDeficient(format!(
                "two pressure solves differ by {:e}; spurious pressure modes present",
                norm2(&diff)
            )));
        }
    }

    // u = A^{-1} (f - B p), multiplier from the Schur residual
    let mut velocity = {
        let bp = sys.b.matvec(&pressure);
        let mut r = sys.rhs.clone();
        axpy(&mut r, -1.0, &bp);
        a_factor.solve(&r)
    };
    let sp = schur(&pressure);
    let mm = dot(&sys.mean_row, &sys.mean_row);
    let mut multiplier = sys
        .mean_row
        .iter()
        .zip(b_p.iter().zip(&sp))
        .map(|(mi, (bi, si))| mi * (bi - si))
        .sum::<f64>()
        / mm;

    // iterative refinement on the full augmented system
    let mut residuals = Vec::new();
    let mut final_residual = f64::INFINITY;
    for _round in 0..3 {
        let (r1, r2, r3) = augmented_residual(sys, &velocity, &pressure, multiplier);
        let total = (norm2(&r1).powi(2) + norm2(&r2).powi(2) + r3 * r3).sqrt();
        final_residual = total / rhs_norm;
        residuals.push(final_residual);
        if final_residual <= 1e-11 {
            break;
        }
        // correction solve with rhs (r1, r2)
        let ainv_r1 = a_factor.solve(&r1);
        let mut rhs_p = sys.b.matvec_transpose(&ainv_r1);
        axpy(&mut rhs_p, -1.0, &r2);
        let (dp, its) = solve_pressure(&rhs_p)?;
        iterations += its;
        let sdp = schur(&dp);
        let dmu = sys
            .mean_row
            .iter()
            .zip(rhs_p.iter().zip(&sdp))
            .map(|(mi, (bi, si))| mi * (bi - si))
            .sum::<f64>()
            / mm;
        let bdp = sys.b.matvec(&dp);
        let mut r1_minus = r1.clone();
        axpy(&mut r1_minus, -1.0, &bdp);
        let du = a_factor.solve(&r1_minus);
        axpy(&mut velocity, 1.0, &du);
        axpy(&mut pressure, 1.0, &dp);
        multiplier += dmu;
    }

    Ok(Solution {
        velocity,
        pressure,
        multiplier,
        iterations,
        residuals,
        final_residual,
    })
}

fn augmented_residual(
    sys: &SaddleSystem,
    u: &[f64],
    p: &[f64],
    mu: f64,
) -> (Vec<f64>, Vec<f64>, f64) {
    let au = sys.a.matvec(u);
    let bp = sys.b.matvec(p);
    let r1: Vec<f64> = sys
        .rhs
        .iter()
        .zip(au.iter().zip(&bp))
        .map(|(f, (a, b))| f - a - b)
        .collect();
    let btu = sys.b.matvec_transpose(u);
    let r2: Vec<f64> = btu
        .iter()
        .zip(&sys.mean_row)
        .map(|(b, mi)| -(b + mi * mu))
        .collect();
    let r3 = -dot(&sys.mean_row, p);
    (r1, r2, r3)
}

/// Configuration for the block-preconditioned flexible GMRES path.
#[derive(Debug, Clone)]
pub struct KrylovConfig {
    /// Absolute residual tolerance on the augmented system.
    pub tol: f64,
    pub max_iter: usize,
    /// Iteration cap of the inner diagonally-scaled CG on A.
    pub inner_velocity_cap: usize,
    /// Iteration cap of the inner CG on the approximate Schur complement.
    pub inner_schur_cap: usize,
}

impl Default for KrylovConfig {
    fn default() -> Self {
        KrylovConfig {
            tol: 1e-8,
            max_iter: 600,
            inner_velocity_cap: 60,
            inner_schur_cap: 60,
        }
    }
}

struct AugmentedOperator<'a> {
    sys: &'a SaddleSystem,
}

impl LinearOperator for AugmentedOperator<'_> {
    fn dim(&self) -> usize {
        self.sys.a.nrows() + self.sys.b.ncols() + 1
    }

    fn apply(&self, x: &[f64]) -> Vec<f64> {
        let n = self.sys.a.nrows();
        let m = self.sys.b.ncols();
        let (xu, rest) = x.split_at(n);
        let (xp, xm) = rest.split_at(m);
        let mut y = vec![0.0; n + m + 1];
        let au = self.sys.a.matvec(xu);
        let bp = self.sys.b.matvec(xp);
        for i in 0..n {
            y[i] = au[i] + bp[i];
        }
        let btu = self.sys.b.matvec_transpose(xu);
        for j in 0..m {
            y[n + j] = btu[j] + self.sys.mean_row[j] * xm[0];
        }
        y[n + m] = dot(&self.sys.mean_row, xp);
        y
    }
}

/// Flexible GMRES on the augmented saddle system with the block-diagonal
/// preconditioner: inner diagonally-scaled CG approximates A^{-1}, and the
/// Schur block is approximated by B^T diag(A)^{-1} B (also applied by inner
/// CG).  Terminates when the Euclidean residual drops below `cfg.tol`.
pub fn solve_block_preconditioned(sys: &SaddleSystem, cfg: &KrylovConfig) -> Result<Solution> {
    let n = sys.a.nrows();
    let m = sys.b.ncols();
    let op = AugmentedOperator { sys };

    let diag_a = sys.a.diagonal();
    let inv_diag_a: Vec<f64> = diag_a.iter().map(|&d| 1.0 / d).collect();
    let schur_hat = {
        let scaled = sys.b.transpose().scale_columns(&inv_diag_a);
        scaled.matmul(&sys.b)
    };
    let diag_s: Vec<f64> = schur_hat
        .diagonal()
        .iter()
        .map(|&d| if d > 0.0 { d } else { 1.0 })
        .collect();

    let ones_scale = 1.0 / (m as f64).sqrt();
    let trace_s: f64 = schur_hat.diagonal().iter().sum::<f64>() / m as f64;

    let cg_a = CgParams {
        rel_tol: 1e-10,
        abs_tol: 0.0,
        max_iter: cfg.inner_velocity_cap,
        curvature_tol: 0.0,
    };
    let cg_s = CgParams {
        rel_tol: 1e-10,
        abs_tol: 0.0,
        max_iter: cfg.inner_schur_cap,
        curvature_tol: 0.0,
    };

    let mut precond = |v: &[f64]| -> Vec<f64> {
        let (vu, rest) = v.split_at(n);
        let (vp, vm) = rest.split_at(m);
        let mut z = vec![0.0; n + m + 1];
        // velocity block: diagonally-scaled CG with a fixed cap
        let zu = match cg_solve(
            &|x| sys.a.matvec(x),
            vu,
            &|r| r.iter().zip(&inv_diag_a).map(|(a, b)| a * b).collect(),
            &|_v| {},
            &|p| dot(p, p),
            &cg_a,
        ) {
            CgOutcome::Converged { x, .. } | CgOutcome::MaxIterations { x, .. } => x,
            CgOutcome::KernelDirection { .. } => vu.to_vec(),
        };
        z[..n].copy_from_slice(&zu);
        // pressure block: deflated CG on the diagonal-Schur approximation,
        // identity (scaled) on the constant direction
        let ones_component: f64 = vp.iter().sum::<f64>() * ones_scale;
        let deflate = |w: &mut Vec<f64>| {
            let c: f64 = w.iter().sum::<f64>() * ones_scale;
            for wi in w.iter_mut() {
                *wi -= c * ones_scale;
            }
        };
        let zp = match cg_solve(
            &|x| schur_hat.matvec(x),
            vp,
            &|r| r.iter().zip(&diag_s).map(|(a, b)| a / b).collect(),
            &deflate,
            &|p| dot(p, p),
            &cg_s,
        ) {
            CgOutcome::Converged { x, .. } | CgOutcome::MaxIterations { x, .. } => x,
            CgOutcome::KernelDirection { .. } => vp.to_vec(),
        };
        for j in 0..m {
            z[n + j] = zp[j] + ones_component * ones_scale / trace_s;
        }
        z[n + m] = vm[0];
        z
    };

    let mut rhs = vec![0.0; n + m + 1];
    rhs[..n].copy_from_slice(&sys.rhs);
    let params = FgmresParams {
        abs_tol: cfg.tol,
        max_iter: cfg.max_iter,
    };
    let result = fgmres(&op, &rhs, &mut precond, &params)?;
    let velocity = result.x[..n].to_vec();
    let pressure = result.x[n..n + m].to_vec();
    let multiplier = result.x[n + m];
    let final_residual = result.residual_history.last().copied().unwrap_or(0.0)
        / norm2(&sys.rhs).max(1e-300);
    Ok(Solution {
        velocity,
        pressure,
        multiplier,
        iterations: result.iterations,
        residuals: result.residual_history,
        final_residual,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::assembly::{
        assemble_divergence, assemble_pressure_mass, assemble_stiffness,
    };
    use crate::constraints::{build_constraint_transform, transform_divergence_product};
    use crate::dofs::DofMap;
    use crate::mesh::build_structured_square;
    use crate::split::powell_sabin_split;

    fn reduced_system(n: usize) -> (SaddleSystem, CsrMatrix) {
        let sm = powell_sabin_split(&build_structured_square(n).unwrap()).unwrap();
        let dofs = DofMap::new(&sm);
        let a = assemble_stiffness(&sm, &dofs, 1.0);
        let b_tilde = assemble_divergence(&sm, &dofs);
        let ct = build_constraint_transform(&sm, &dofs);
        let b = transform_divergence_product(&b_tilde, &ct);
        let m_raw = assemble_pressure_mass(&sm, &dofs);
        let measures = m_raw.diagonal();
        let mean_row = ct.reduce_mean_row(&measures);
        let m_psi = {
            let zt = ct.z.transpose();
            zt.matmul(&m_raw).matmul(&ct.z)
        };
        let rhs = vec![0.0; a.nrows()];
        (
            SaddleSystem {
                a,
                b,
                mean_row,
                rhs,
            },
            m_psi,
        )
    }

    #[test]
    fn zero_rhs_gives_zero_solution() {
        let (sys, m_psi) = reduced_system(2);
        let sol = solve_direct(&sys, &m_psi, &DirectOptions::default()).unwrap();
        assert!(sol.velocity.iter().all(|&v| v == 0.0));
        assert!(sol.pressure.iter().all(|&v| v == 0.0));
        assert_eq!(sol.multiplier, 0.0);

        let sol = solve_block_preconditioned(&sys, &KrylovConfig::default()).unwrap();
        assert_eq!(sol.iterations, 0);
        assert!(sol.velocity.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn direct_solve_hits_residual_target() {
        let (mut sys, m_psi) = reduced_system(2);
        // a generic smooth load
        for (i, v) in sys.rhs.iter_mut().enumerate() {
            *v = ((i as f64) * 0.37).sin();
        }
        let sol = solve_direct(&sys, &m_psi, &DirectOptions::default()).unwrap();
        assert!(
            sol.final_residual <= 1e-10,
            "residual {}",
            sol.final_residual
        );
        // mean-zero pressure
        let mean = dot(&sys.mean_row, &sol.pressure);
        assert!(mean.abs() <= 1e-10);
    }

    #[test]
    fn fgmres_agrees_with_direct() {
        let (mut sys, m_psi) = reduced_system(2);
        for (i, v) in sys.rhs.iter_mut().enumerate() {
            *v = ((i as f64) * 0.61).cos();
        }
        let direct = solve_direct(&sys, &m_psi, &DirectOptions::default()).unwrap();
        let krylov = solve_block_preconditioned(&sys, &KrylovConfig::default()).unwrap();
        let diff: Vec<f64> = direct
            .velocity
            .iter()
            .zip(&krylov.velocity)
            .map(|(a, b)| a - b)
            .collect();
        let rel = norm2(&diff) / norm2(&direct.velocity);
        assert!(rel <= 1e-6, "velocity disagreement {rel}");
    }
}
