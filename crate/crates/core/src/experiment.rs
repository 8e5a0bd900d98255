//! End-to-end experiment driver: convergence tables, inf-sup sweeps, error
//! bound verification, and the timing comparison between the iterated penalty
//! method and the reduced-system solve.

use crate::assembly::{
    assemble_divdiv, assemble_divergence, assemble_load, assemble_pressure_mass,
    assemble_stiffness, error_norms,
};
use crate::constraints::{apply_column_operations, build_constraint_transform, ConstraintTransform};
use crate::dofs::DofMap;
use crate::error::Error;
use crate::manufactured::{ManufacturedSolution, ProblemId};
use crate::mesh::{build_structured_cube, build_structured_square, Triangulation};
use crate::quadrature::QuadratureRule;
use crate::solver::{
    best_approx_pressure, best_approx_velocity, compute_infsup_constant, iterated_penalty_solve,
    solve_block_preconditioned, solve_direct, DirectOptions, IpmConfig, KrylovConfig,
    SaddleSystem,
};
use crate::sparse::{CsrMatrix, LdlFactor};
use crate::split::{powell_sabin_split, worsey_farin_split, SplitMesh};
use crate::Result;
use std::fmt::Write as _;
use std::time::Instant;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolverChoice {
    Direct,
    Fgmres,
    Ipm,
}

impl SolverChoice {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "direct" => Some(SolverChoice::Direct),
            "fgmres" => Some(SolverChoice::Fgmres),
            "ipm" => Some(SolverChoice::Ipm),
            _ => None,
        }
    }
}

#[derive(Clone)]
pub struct ExperimentSpec {
    pub problem: ProblemId,
    pub nu: f64,
    /// Strictly increasing structured-mesh subdivision counts.
    pub mesh_sizes: Vec<usize>,
    pub solver: SolverChoice,
    pub compute_beta: bool,
    pub compute_bounds: bool,
    pub ipm: IpmConfig,
    pub krylov: KrylovConfig,
    /// Wall-clock timings are an opt-in output; deterministic byte-identical
    /// CSV emission requires them off.
    pub record_timings: bool,
}

impl ExperimentSpec {
    pub fn new(problem: ProblemId, nu: f64, mesh_sizes: Vec<usize>) -> Result<Self> {
        if nu <= 0.0 {
            return Err(Error::invalid("viscosity must be positive"));
        }
        if mesh_sizes.is_empty() || mesh_sizes.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::invalid("mesh sizes must be strictly increasing"));
        }
        Ok(ExperimentSpec {
            problem,
            nu,
            mesh_sizes,
            solver: SolverChoice::Direct,
            compute_beta: false,
            compute_bounds: false,
            ipm: IpmConfig::default(),
            krylov: KrylovConfig::default(),
            record_timings: false,
        })
    }

    pub fn dim(&self) -> usize {
        self.problem.dim()
    }
}

/// One mesh worth of assembled discretization.
pub struct Discretization {
    pub n: usize,
    pub coarse: Triangulation,
    pub sm: SplitMesh,
    pub dofs: DofMap,
    pub ms: ManufacturedSolution,
    pub rule: QuadratureRule,
    /// Viscosity-weighted stiffness.
    pub a: CsrMatrix,
    pub b_tilde: CsrMatrix,
    pub ct: ConstraintTransform,
    /// Reduced divergence matrix (column-operation path).
    pub b: CsrMatrix,
    pub m_raw: CsrMatrix,
    pub measures: Vec<f64>,
    pub m_psi: CsrMatrix,
    pub mean_reduced: Vec<f64>,
    pub load: Vec<f64>,
    pub assembly_seconds: f64,
}

pub fn build_discretization(problem: ProblemId, nu: f64, n: usize) -> Result<Discretization> {
    let start = Instant::now();
    let dim = problem.dim();
    let coarse = match dim {
        2 => build_structured_square(n)?,
        _ => build_structured_cube(n)?,
    };
    let sm = match dim {
        2 => powell_sabin_split(&coarse)?,
        _ => worsey_farin_split(&coarse)?,
    };
    let dofs = DofMap::new(&sm);
    let ms = ManufacturedSolution::new(problem, nu);
    let rule = QuadratureRule::for_dim(dim);
    let a = assemble_stiffness(&sm, &dofs, nu);
    let b_tilde = assemble_divergence(&sm, &dofs);
    let ct = build_constraint_transform(&sm, &dofs);
    let b = apply_column_operations(&b_tilde, &ct);
    let m_raw = assemble_pressure_mass(&sm, &dofs);
    let measures = m_raw.diagonal();
    let m_psi = ct.z.transpose().matmul(&m_raw).matmul(&ct.z);
    let mean_reduced = ct.reduce_mean_row(&measures);
    let load = {
        let source = |p: &crate::mesh::Point| ms.source(p);
        assemble_load(&sm, &dofs, source, &rule)
    };
    Ok(Discretization {
        n,
        coarse,
        sm,
        dofs,
        ms,
        rule,
        a,
        b_tilde,
        ct,
        b,
        m_raw,
        measures,
        m_psi,
        mean_reduced,
        load,
        assembly_seconds: start.elapsed().as_secs_f64(),
    })
}

impl Discretization {
    pub fn saddle_system(&self) -> SaddleSystem {
        SaddleSystem {
            a: self.a.clone(),
            b: self.b.clone(),
            mean_row: self.mean_reduced.clone(),
            rhs: self.load.clone(),
        }
    }

    /// Solves with the requested method; returns free velocity coefficients,
    /// the raw (sigma-ordered) pressure field, and solver iterations.
    pub fn solve(
        &self,
        solver: SolverChoice,
        ipm: &IpmConfig,
        krylov: &KrylovConfig,
    ) -> Result<(Vec<f64>, Vec<f64>, usize)> {
        match solver {
            SolverChoice::Direct => {
                let sol = solve_direct(&self.saddle_system(), &self.m_psi, &DirectOptions::default())?;
                Ok((sol.velocity, self.ct.expand(&sol.pressure), sol.iterations))
            }
            SolverChoice::Fgmres => {
                let sol = solve_block_preconditioned(&self.saddle_system(), krylov)?;
                Ok((sol.velocity, self.ct.expand(&sol.pressure), sol.iterations))
            }
            SolverChoice::Ipm => {
                let divdiv = assemble_divdiv(&self.sm, &self.dofs);
                let sol = iterated_penalty_solve(
                    &self.a,
                    &divdiv,
                    &self.b_tilde,
                    &self.load,
                    &self.measures,
                    ipm,
                )?;
                Ok((sol.velocity, sol.pressure_raw, sol.iterations))
            }
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct ReportRow {
    pub n: usize,
    /// Max coarse cell diameter.
    pub h: f64,
    pub err_u_l2: f64,
    pub err_u_h1: f64,
    pub err_p_l2: f64,
    pub div_norm: f64,
    pub rate_u_l2: Option<f64>,
    pub rate_u_h1: Option<f64>,
    pub rate_p_l2: Option<f64>,
    pub beta: Option<f64>,
    pub best_approx_velocity: Option<f64>,
    pub best_approx_pressure: Option<f64>,
    /// (1 + 1/beta) * best_approx_velocity.
    pub velocity_bound_rhs: Option<f64>,
    /// best_approx_pressure + (nu / beta) * |u - u_h|_H1.
    pub pressure_bound_rhs: Option<f64>,
    pub velocity_bound_holds: Option<bool>,
    pub pressure_bound_holds: Option<bool>,
    /// Velocity term of the pressure bound divided by the best-approximation
    /// term; > 1 when the velocity error dominates.
    pub pressure_bound_dominance: Option<f64>,
    /// Solve wall time, recorded only when the spec requests timings.
    pub time_s: Option<f64>,
}

/// Rates from consecutive rows: log(e1 / e2) / log(h1 / h2).
fn attach_rates(rows: &mut [ReportRow]) {
    for i in 1..rows.len() {
        let (h1, h2) = (rows[i - 1].h, rows[i].h);
        let lr = (h1 / h2).ln();
        let rate = |e1: f64, e2: f64| -> Option<f64> {
            if e1 > 0.0 && e2 > 0.0 {
                Some((e1 / e2).ln() / lr)
            } else {
                None
            }
        };
        rows[i].rate_u_l2 = rate(rows[i - 1].err_u_l2, rows[i].err_u_l2);
        rows[i].rate_u_h1 = rate(rows[i - 1].err_u_h1, rows[i].err_u_h1);
        rows[i].rate_p_l2 = rate(rows[i - 1].err_p_l2, rows[i].err_p_l2);
    }
}

/// Full pipeline per mesh: build, solve, norms, optional inf-sup constant and
/// error-bound right-hand sides.  On failure the rows computed so far are
/// returned alongside the error.
pub fn run_convergence_study(spec: &ExperimentSpec) -> (Vec<ReportRow>, Option<Error>) {
    let mut rows = Vec::new();
    for &n in &spec.mesh_sizes {
        match run_single(spec, n) {
            Ok(row) => rows.push(row),
            Err(e) => {
                attach_rates(&mut rows);
                return (rows, Some(e));
            }
        }
    }
    attach_rates(&mut rows);
    (rows, None)
}

fn run_single(spec: &ExperimentSpec, n: usize) -> Result<ReportRow> {
    let disc = build_discretization(spec.problem, spec.nu, n)?;
    let t0 = Instant::now();
    let (velocity, pressure_raw, _iters) = disc.solve(spec.solver, &spec.ipm, &spec.krylov)?;
    let time_s = spec.record_timings.then(|| t0.elapsed().as_secs_f64());
    let norms = error_norms(
        &disc.sm,
        &disc.dofs,
        &velocity,
        &pressure_raw,
        &disc.ms,
        &disc.rule,
    );
    let mut row = ReportRow {
        n,
        h: disc.coarse.max_diameter(),
        err_u_l2: norms.l2_velocity,
        err_u_h1: norms.h1_seminorm_velocity,
        err_p_l2: norms.l2_pressure,
        div_norm: norms.l2_divergence,
        time_s,
        ..ReportRow::default()
    };
    if spec.compute_beta || spec.compute_bounds {
        let infsup = compute_infsup_constant(
            &disc.a,
            &disc.b,
            &disc.m_psi,
            &disc.mean_reduced,
            spec.nu,
        )?;
        row.beta = Some(infsup.beta);
    }
    if spec.compute_bounds {
        let beta = row.beta.unwrap();
        let a_factor = LdlFactor::new(&disc.a, "velocity stiffness")?;
        let inf_v = best_approx_velocity(
            &disc.sm,
            &disc.dofs,
            &a_factor,
            &disc.ms,
            spec.nu,
            &disc.rule,
        );
        let inf_p = best_approx_pressure(&disc.sm, &disc.dofs, &disc.ct, &disc.ms, &disc.rule)?;
        let rhs_v = (1.0 + 1.0 / beta) * inf_v;
        let velocity_term = spec.nu / beta * norms.h1_seminorm_velocity;
        let rhs_p = inf_p + velocity_term;
        row.best_approx_velocity = Some(inf_v);
        row.best_approx_pressure = Some(inf_p);
        row.velocity_bound_rhs = Some(rhs_v);
        row.pressure_bound_rhs = Some(rhs_p);
        row.velocity_bound_holds = Some(norms.h1_seminorm_velocity <= rhs_v);
        row.pressure_bound_holds = Some(norms.l2_pressure <= rhs_p);
        row.pressure_bound_dominance = Some(velocity_term / inf_p);
    }
    Ok(row)
}

/// Bound-verification study: convergence rows with the best-approximation
/// right-hand sides attached.
pub fn verify_bounds(spec: &ExperimentSpec) -> (Vec<ReportRow>, Option<Error>) {
    let mut spec = spec.clone();
    spec.compute_bounds = true;
    spec.compute_beta = true;
    run_convergence_study(&spec)
}

// ---------------------------------------------------------------------------
// timing comparison (iterated penalty vs reduced-system Krylov solve)
// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
pub struct TimingRow {
    pub n: usize,
    pub h: f64,
    pub assembly_s: f64,
    pub ipm_s: f64,
    pub reduced_s: f64,
    /// L2 distance between the two velocity fields.
    pub velocity_gap: f64,
    pub ipm_div_norm: f64,
}

#[derive(Debug, Clone)]
pub struct TimingReport {
    pub machine: String,
    pub rows: Vec<TimingRow>,
}

pub fn machine_info() -> String {
    let threads = std::thread::available_parallelism()
        .map(|p| p.get())
        .unwrap_or(1);
    format!(
        "{} {} ({} hardware threads)",
        std::env::consts::OS,
        std::env::consts::ARCH,
        threads
    )
}

pub fn timing_comparison(spec: &ExperimentSpec) -> Result<TimingReport> {
    let mut rows = Vec::new();
    for &n in &spec.mesh_sizes {
        let disc = build_discretization(spec.problem, spec.nu, n)?;

        // the grad-div assembly is specific to the penalty method, so it
        // counts toward the IPM wall time
        let t0 = Instant::now();
        let divdiv = assemble_divdiv(&disc.sm, &disc.dofs);
        let ipm = iterated_penalty_solve(
            &disc.a,
            &divdiv,
            &disc.b_tilde,
            &disc.load,
            &disc.measures,
            &spec.ipm,
        )?;
        let ipm_s = t0.elapsed().as_secs_f64();

        let t1 = Instant::now();
        let reduced = solve_block_preconditioned(&disc.saddle_system(), &spec.krylov)?;
        let reduced_s = t1.elapsed().as_secs_f64();

        let diff: Vec<f64> = ipm
            .velocity
            .iter()
            .zip(&reduced.velocity)
            .map(|(a, b)| a - b)
            .collect();
        let velocity_gap =
            crate::assembly::discrete_velocity_l2(&disc.sm, &disc.dofs, &diff);
        rows.push(TimingRow {
            n,
            h: disc.coarse.max_diameter(),
            assembly_s: disc.assembly_seconds,
            ipm_s,
            reduced_s,
            velocity_gap,
            ipm_div_norm: ipm.div_history.last().copied().unwrap_or(0.0),
        });
    }
    Ok(TimingReport {
        machine: machine_info(),
        rows,
    })
}

impl TimingReport {
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "# timing comparison on {}", self.machine);
        let _ = writeln!(
            out,
            "{:>6} {:>12} {:>12} {:>12} {:>12} {:>12}",
            "n", "h", "assembly_s", "ipm_s", "reduced_s", "vel_gap"
        );
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{:>6} {:>12.4e} {:>12.4e} {:>12.4e} {:>12.4e} {:>12.4e}",
                r.n, r.h, r.assembly_s, r.ipm_s, r.reduced_s, r.velocity_gap
            );
        }
        out
    }
}

// ---------------------------------------------------------------------------
// CSV / table emission
// ---------------------------------------------------------------------------

pub const CSV_HEADER: &str =
    "h,err_u_l2,rate_u_l2,err_u_h1,rate_u_h1,err_p_l2,rate_p_l2,div_norm,beta,time_s";

fn sci(v: f64) -> String {
    format!("{v:.4e}")
}

fn opt(v: Option<f64>) -> String {
    v.map(sci).unwrap_or_default()
}

pub fn emit_csv_string(rows: &[ReportRow]) -> String {
    let mut out = String::new();
    out.push_str(CSV_HEADER);
    out.push('\n');
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{}",
            sci(r.h),
            sci(r.err_u_l2),
            opt(r.rate_u_l2),
            sci(r.err_u_h1),
            opt(r.rate_u_h1),
            sci(r.err_p_l2),
            opt(r.rate_p_l2),
            sci(r.div_norm),
            opt(r.beta),
            opt(r.time_s),
        );
    }
    out
}

pub fn emit_csv(rows: &[ReportRow], path: &std::path::Path) -> Result<()> {
    std::fs::write(path, emit_csv_string(rows))?;
    Ok(())
}

/// Parses a CSV produced by [`emit_csv_string`] (testing aid).
pub fn parse_csv(text: &str) -> Result<Vec<ReportRow>> {
    let mut lines = text.lines();
    let header = lines.next().ok_or_else(|| Error::invalid("empty CSV"))?;
    if header != CSV_HEADER {
        return Err(Error::invalid(format!("unexpected CSV header {header:?}")));
    }
    let mut rows = Vec::new();
    for line in lines {
        if line.trim().is_empty() {
            continue;
        }
        let cells: Vec<&str> = line.split(',').collect();
        if cells.len() != 10 {
            return Err(Error::invalid(format!("bad CSV row {line:?}")));
        }
        let num = |s: &str| -> Result<f64> {
            s.parse::<f64>()
                .map_err(|_| Error::invalid(format!("bad number {s:?}")))
        };
        let optnum = |s: &str| -> Result<Option<f64>> {
            if s.is_empty() {
                Ok(None)
            } else {
                num(s).map(Some)
            }
        };
        rows.push(ReportRow {
            n: 0,
            h: num(cells[0])?,
            err_u_l2: num(cells[1])?,
            rate_u_l2: optnum(cells[2])?,
            err_u_h1: num(cells[3])?,
            rate_u_h1: optnum(cells[4])?,
            err_p_l2: num(cells[5])?,
            rate_p_l2: optnum(cells[6])?,
            div_norm: num(cells[7])?,
            beta: optnum(cells[8])?,
            time_s: optnum(cells[9])?,
            ..ReportRow::default()
        });
    }
    Ok(rows)
}

/// Fixed-width table mirroring the convergence-table column order.
pub fn emit_table(rows: &[ReportRow]) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{:>10} {:>11} {:>7} {:>11} {:>7} {:>11} {:>7} {:>11} {:>11} {:>9}",
        "h", "|u-uh|_L2", "rate", "|u-uh|_H1", "rate", "|p-ph|_L2", "rate", "div_u", "beta", "time_s"
    );
    let fr = |v: Option<f64>| v.map(|r| format!("{r:.3}")).unwrap_or_else(|| "--".into());
    for r in rows {
        let _ = writeln!(
            out,
            "{:>10.4e} {:>11.4e} {:>7} {:>11.4e} {:>7} {:>11.4e} {:>7} {:>11.4e} {:>11} {:>9}",
            r.h,
            r.err_u_l2,
            fr(r.rate_u_l2),
            r.err_u_h1,
            fr(r.rate_u_h1),
            r.err_p_l2,
            fr(r.rate_p_l2),
            r.div_norm,
            r.beta.map(|b| format!("{b:.4e}")).unwrap_or_else(|| "--".into()),
            r.time_s.map(|t| format!("{t:.3}")).unwrap_or_else(|| "--".into()),
        );
    }
    if rows.iter().any(|r| r.velocity_bound_rhs.is_some()) {
        let _ = writeln!(
            out,
            "{:>10} {:>11} {:>11} {:>11} {:>11} {:>9} {:>9}",
            "h", "inf_v", "rhs(7.1)", "inf_p", "rhs(7.2)", "v<=rhs", "p<=rhs"
        );
        for r in rows {
            let _ = writeln!(
                out,
                "{:>10.4e} {:>11} {:>11} {:>11} {:>11} {:>9} {:>9}",
                r.h,
                opt(r.best_approx_velocity),
                opt(r.velocity_bound_rhs),
                opt(r.best_approx_pressure),
                opt(r.pressure_bound_rhs),
                r.velocity_bound_holds.map(|b| b.to_string()).unwrap_or_default(),
                r.pressure_bound_holds.map(|b| b.to_string()).unwrap_or_default(),
            );
        }
    }
    out
}

// ---------------------------------------------------------------------------
// `key = value` configuration overrides
// ---------------------------------------------------------------------------

/// Applies plain-text `key = value` lines on top of a spec (config wins over
/// flags).  Unknown keys are rejected.
pub fn apply_config(spec: &mut ExperimentSpec, text: &str) -> Result<()> {
    for (idx, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| Error::MeshFormat {
            line: idx + 1,
            msg: format!("expected `key = value`, got {line:?}"),
        })?;
        let key = key.trim();
        let value = value.trim();
        let bad = |what: &str| Error::MeshFormat {
            line: idx + 1,
            msg: format!("bad {what} {value:?}"),
        };
        match key {
            "solver" => {
                spec.solver = SolverChoice::parse(value).ok_or_else(|| bad("solver"))?;
            }
            "nu" => spec.nu = value.parse().map_err(|_| bad("viscosity"))?,
            "beta" => spec.compute_beta = value.parse().map_err(|_| bad("flag"))?,
            "bounds" => spec.compute_bounds = value.parse().map_err(|_| bad("flag"))?,
            "ipm.rho" => spec.ipm.rho = value.parse().map_err(|_| bad("ipm.rho"))?,
            "ipm.gamma" => spec.ipm.gamma = value.parse().map_err(|_| bad("ipm.gamma"))?,
            "ipm.tol" => spec.ipm.tol = value.parse().map_err(|_| bad("ipm.tol"))?,
            "ipm.maxit" => {
                spec.ipm.max_iterations = value.parse().map_err(|_| bad("ipm.maxit"))?
            }
            "krylov.tol" => spec.krylov.tol = value.parse().map_err(|_| bad("krylov.tol"))?,
            "krylov.maxit" => {
                spec.krylov.max_iter = value.parse().map_err(|_| bad("krylov.maxit"))?
            }
            _ => {
                return Err(Error::MeshFormat {
                    line: idx + 1,
                    msg: format!("unknown configuration key {key:?}"),
                })
            }
        }
    }
    Ok(())
}
