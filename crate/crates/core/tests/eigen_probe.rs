//! Convergence diagnostics for the inf-sup eigensolver at the largest
//! acceptance mesh sizes (ignored by default; run with --ignored).

use macrostokes::experiment::build_discretization;
use macrostokes::manufactured::ProblemId;
use macrostokes::solver::compute_infsup_constant;

#[test]
#[ignore]
fn probe_lobpcg_on_large_meshes() {
    for n in [16, 32] {
        let disc = build_discretization(ProblemId::Ps2d, 1.0, n).unwrap();
        let t0 = std::time::Instant::now();
        let stable = compute_infsup_constant(
            &disc.a,
            &disc.b,
            &disc.m_psi,
            &disc.mean_reduced,
            1.0,
        )
        .unwrap();
        println!(
            "n={n} stable: beta={:.6} lambda={:.6e} iters={} res={:.2e} time={:.2}s",
            stable.beta,
            stable.lambda_min,
            stable.iterations,
            stable.eigen_residual,
            t0.elapsed().as_secs_f64()
        );
        let t1 = std::time::Instant::now();
        let raw = compute_infsup_constant(
            &disc.a,
            &disc.b_tilde,
            &disc.m_raw,
            &disc.measures,
            1.0,
        )
        .unwrap();
        println!(
            "n={n} raw: lambda={:.3e} iters={} res={:.2e} time={:.2}s",
            raw.lambda_min,
            raw.iterations,
            raw.eigen_residual,
            t1.elapsed().as_secs_f64()
        );
    }
}
