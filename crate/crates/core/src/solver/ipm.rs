//! Iterated penalty method: a velocity-only iteration whose accumulated
//! divergences converge to the pressure.
//!
//! Each step solves (nu A1 + gamma D) u^n = f + B~ w^{n-1} with
//! D the grad-div matrix and w^n = sum_{i<=n} rho div(u^i) stored as a raw
//! piecewise-constant field; iteration stops once ||div u^n|| drops below the
//! tolerance.  No pressure transform is needed.

use crate::error::Error;
use crate::sparse::{CsrMatrix, LdlFactor};
use crate::Result;

#[derive(Debug, Clone)]
pub struct IpmConfig {
    pub rho: f64,
    pub gamma: f64,
    /// Tolerance on the L2 norm of div(u^n).
    pub tol: f64,
    pub max_iterations: usize,
}

impl Default for IpmConfig {
    fn default() -> Self {
        IpmConfig {
            rho: 100.0,
            gamma: 100.0,
            tol: 1e-7,
            max_iterations: 500,
        }
    }
}

#[derive(Debug, Clone)]
pub struct IpmSolution {
    pub velocity: Vec<f64>,
    /// Recovered pressure as a raw piecewise-constant field (sigma ordering),
    /// mean-zero corrected.
    pub pressure_raw: Vec<f64>,
    pub iterations: usize,
    pub div_history: Vec<f64>,
}

/// `stiffness` must already carry the viscosity; `divdiv` is unweighted.
/// `measures` are the cell measures in sigma ordering (the diagonal of the
/// raw pressure mass).
pub fn iterated_penalty_solve(
    stiffness: &CsrMatrix,
    divdiv: &CsrMatrix,
    b_tilde: &CsrMatrix,
    load: &[f64],
    measures: &[f64],
    cfg: &IpmConfig,
) -> Result<IpmSolution> {
    let n = stiffness.nrows();
    let m = b_tilde.ncols();
    // K = nu A1 + gamma D assembled by value merge
    let mut triplets = Vec::with_capacity(stiffness.nnz() + divdiv.nnz());
    for r in 0..n {
        let (cols, vals) = stiffness.row(r);
        for (c, v) in cols.iter().zip(vals) {
            triplets.push((r, *c, *v));
        }
        let (cols, vals) = divdiv.row(r);
        for (c, v) in cols.iter().zip(vals) {
            triplets.push((r, *c, cfg.gamma * *v));
        }
    }
    let k = CsrMatrix::from_triplets(n, n, triplets);
    let factor = LdlFactor::new(&k, "penalized velocity")?;

    let total_measure: f64 = measures.iter().sum();
    let mut w = vec![0.0f64; m];
    let mut velocity = vec![0.0f64; n];
    let mut div_history = Vec::new();
    for it in 1..=cfg.max_iterations {
        // rhs = f + B~ w
        let bw = b_tilde.matvec(&w);
        let rhs: Vec<f64> = load.iter().zip(&bw).map(|(f, b)| f + b).collect();
        velocity = factor.solve(&rhs);
        // div(u)|_K = -(B~^T u)_K / |K| since B~ integrates -div against phi
        let btu = b_tilde.matvec_transpose(&velocity);
        let div: Vec<f64> = btu
            .iter()
            .zip(measures)
            .map(|(b, m)| -b / m)
            .collect();
        let div_norm = {
            let acc: f64 = div
                .iter()
                .zip(measures)
                .map(|(d, m)| m * d * d)
                .sum();
            acc.sqrt()
        };
        div_history.push(div_norm);
        for (wi, di) in w.iter_mut().zip(&div) {
            *wi += cfg.rho * di;
        }
        if div_norm <= cfg.tol {
            // mean-zero correction of the accumulated pressure
            let mean: f64 = w
                .iter()
                .zip(measures)
                .map(|(wi, mi)| wi * mi)
                .sum::<f64>()
                / total_measure;
            for wi in w.iter_mut() {
                *wi -= mean;
            }
            return Ok(IpmSolution {
                velocity,
                pressure_raw: w,
                iterations: it,
                div_history,
            });
        }
        // stagnation check over a 10-iteration window
        if it >= 10 {
            let prev = div_history[it - 10];
            if div_norm >= 0.999 * prev {
                break;
            }
        }
    }
    let _ = velocity;
    let tail: Vec<f64> = div_history.iter().rev().take(5).copied().collect();
    Err(Error::NonConvergence {
        iterations: div_history.len(),
        tail,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::assembly::{
        assemble_divdiv, assemble_divergence, assemble_pressure_mass, assemble_stiffness,
    };
    use crate::dofs::DofMap;
    use crate::mesh::build_structured_square;
    use crate::split::powell_sabin_split;

    #[test]
    fn zero_load_converges_immediately() {
        let sm = powell_sabin_split(&build_structured_square(1).unwrap()).unwrap();
        let dofs = DofMap::new(&sm);
        let a = assemble_stiffness(&sm, &dofs, 1.0);
        let d = assemble_divdiv(&sm, &dofs);
        let b = assemble_divergence(&sm, &dofs);
        let measures = assemble_pressure_mass(&sm, &dofs).diagonal();
        let load = vec![0.0; dofs.n_velocity];
        let sol =
            iterated_penalty_solve(&a, &d, &b, &load, &measures, &IpmConfig::default()).unwrap();
        assert_eq!(sol.iterations, 1);
        assert!(sol.velocity.iter().all(|&v| v == 0.0));
        assert!(sol.pressure_raw.iter().all(|&v| v == 0.0));
    }
}
