//! Experiment driver for the split-mesh Stokes elements.
//!
//! Subcommands: `mesh` writes structured unit square / cube meshes, `split`
//! applies the Powell-Sabin or Worsey-Farin refinement (with feature
//! sections appended to the mesh file), `run` executes convergence /
//! stability studies, and `timing` compares the iterated penalty method with
//! the reduced-system Krylov solve.

use clap::{Parser, Subcommand};
use macrostokes::experiment::{
    apply_config, build_discretization, emit_csv, emit_table, run_convergence_study,
    timing_comparison, ExperimentSpec, SolverChoice,
};
use macrostokes::manufactured::ProblemId;
use macrostokes::mesh::{build_structured_cube, build_structured_square, read_mesh, write_mesh};
use macrostokes::split::{powell_sabin_split, verify_singularity, SplitKind, SplitMesh};
use std::fmt::Write as _;
use std::path::PathBuf;
use std::process::ExitCode;

const MAX_N_2D: usize = 64;
const MAX_N_3D: usize = 8;

#[derive(Parser)]
#[command(name = "macrostokes", about = "Divergence-free Stokes elements on split meshes")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a structured mesh of the unit square or cube.
    Mesh {
        #[arg(long, value_parser = ["2", "3"])]
        dim: String,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Refine a mesh and append the parent / singular-feature sections.
    Split {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long, value_parser = ["ps", "wf"])]
        kind: String,
        #[arg(long)]
        out: PathBuf,
        /// Verify the singularity predicates and print a summary.
        #[arg(long)]
        report: bool,
    },
    /// Convergence / stability study over a list of mesh sizes.
    Run {
        #[arg(long, value_parser = ["2", "3"])]
        dim: String,
        #[arg(long, value_parser = ["ps2d", "wf3d", "wf3d-curl"])]
        problem: String,
        #[arg(long, default_value_t = 1.0)]
        nu: f64,
        /// Comma-separated subdivision counts, strictly increasing.
        #[arg(long, value_delimiter = ',')]
        n: Vec<usize>,
        #[arg(long, default_value = "direct", value_parser = ["direct", "fgmres", "ipm"])]
        solver: String,
        /// Compute the inf-sup constant per mesh.
        #[arg(long)]
        beta: bool,
        /// Compute the error-bound right-hand sides per mesh.
        #[arg(long)]
        bounds: bool,
        #[arg(long)]
        csv: Option<PathBuf>,
        /// `key = value` overrides applied on top of the flags.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Exit with code 2 if any acceptance invariant is violated.
        #[arg(long)]
        check: bool,
        /// Record per-mesh solve wall times in the output (breaks byte-level
        /// determinism of the CSV).
        #[arg(long)]
        timings: bool,
        /// Dump A, B~ and B in coordinate text format per mesh.
        #[arg(long)]
        dump_matrices: bool,
        /// Dump the constraint transform Z in coordinate text format per mesh.
        #[arg(long)]
        dump_transform: bool,
    },
    /// Wall-clock comparison of the penalty and reduced-system solvers.
    Timing {
        #[arg(long, value_parser = ["ps2d", "wf3d", "wf3d-curl"])]
        problem: String,
        #[arg(long, default_value_t = 1.0)]
        nu: f64,
        #[arg(long, value_delimiter = ',')]
        n: Vec<usize>,
    },
}

fn main() -> ExitCode {
    match dispatch() {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

fn check_desk_scale(dim: usize, sizes: &[usize]) -> Result<(), macrostokes::Error> {
    let cap = if dim == 2 { MAX_N_2D } else { MAX_N_3D };
    for &n in sizes {
        if n > cap {
            return Err(macrostokes::Error::InvalidArg(format!(
                "n = {n} exceeds the {dim}D desk-scale cap {cap} (direct factorization memory)"
            )));
        }
    }
    Ok(())
}

fn dispatch() -> Result<ExitCode, macrostokes::Error> {
    let cli = Cli::parse();
    match cli.command {
        Command::Mesh { dim, n, out } => {
            let mesh = match dim.as_str() {
                "2" => build_structured_square(n)?,
                _ => build_structured_cube(n)?,
            };
            write_mesh(&mesh, &out)?;
            println!(
                "wrote {} ({} vertices, {} cells)",
                out.display(),
                mesh.n_vertices(),
                mesh.n_cells()
            );
            Ok(ExitCode::SUCCESS)
        }
        Command::Split {
            input,
            kind,
            out,
            report,
        } => {
            let coarse = read_mesh(&input)?;
            let sm = match kind.as_str() {
                "ps" => powell_sabin_split(&coarse)?,
                _ => macrostokes::split::worsey_farin_split(&coarse)?,
            };
            std::fs::write(&out, split_file_text(&sm))?;
            println!(
                "wrote {} ({} cells, {} singular features)",
                out.display(),
                sm.mesh.n_cells(),
                match sm.kind {
                    SplitKind::PowellSabin => sm.singular_points.len(),
                    SplitKind::WorseyFarin => sm.singular_edges.len(),
                }
            );
            if report {
                let rep = verify_singularity(&sm);
                for (desc, ok) in &rep.features {
                    println!("{}: {}", desc, if *ok { "pass" } else { "FAIL" });
                }
                println!(
                    "singularity check: {}/{} passed",
                    rep.features.len() - rep.n_failed(),
                    rep.features.len()
                );
                if !rep.all_pass() {
                    return Ok(ExitCode::from(2));
                }
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Run {
            dim,
            problem,
            nu,
            n,
            solver,
            beta,
            bounds,
            csv,
            config,
            check,
            timings,
            dump_matrices,
            dump_transform,
        } => {
            let problem = ProblemId::parse(&problem).expect("clap restricted the values");
            let dim: usize = dim.parse().unwrap();
            if problem.dim() != dim {
                return Err(macrostokes::Error::InvalidArg(format!(
                    "problem {} is {}-dimensional but --dim {dim} was given",
                    problem.name(),
                    problem.dim()
                )));
            }
            check_desk_scale(dim, &n)?;
            let mut spec = ExperimentSpec::new(problem, nu, n)?;
            spec.solver = SolverChoice::parse(&solver).expect("clap restricted the values");
            spec.compute_beta = beta;
            spec.compute_bounds = bounds;
            spec.record_timings = timings;
            if let Some(path) = config {
                let text = std::fs::read_to_string(path)?;
                apply_config(&mut spec, &text)?;
            }
            if dump_matrices || dump_transform {
                for &size in &spec.mesh_sizes {
                    let disc = build_discretization(spec.problem, spec.nu, size)?;
                    if dump_matrices {
                        for (name, m) in
                            [("A", &disc.a), ("Btilde", &disc.b_tilde), ("B", &disc.b)]
                        {
                            let path = format!("matrices_n{size}_{name}.txt");
                            std::fs::write(&path, m.to_coordinate_text())?;
                            println!("wrote {path}");
                        }
                    }
                    if dump_transform {
                        let path = format!("transform_n{size}_Z.txt");
                        std::fs::write(&path, disc.ct.z.to_coordinate_text())?;
                        println!("wrote {path}");
                    }
                }
            }
            let (rows, err) = run_convergence_study(&spec);
            print!("{}", emit_table(&rows));
            if let Some(path) = csv {
                emit_csv(&rows, &path)?;
                println!("wrote {}", path.display());
            }
            if let Some(e) = err {
                return Err(e);
            }
            if check {
                let mut violations = Vec::new();
                for row in &rows {
                    if row.div_norm > 1e-8 {
                        violations.push(format!(
                            "n = {}: ||div u_h|| = {:e} exceeds 1e-8",
                            row.n, row.div_norm
                        ));
                    }
                    if row.velocity_bound_holds == Some(false) {
                        violations.push(format!("n = {}: velocity bound violated", row.n));
                    }
                    if row.pressure_bound_holds == Some(false) {
                        violations.push(format!("n = {}: pressure bound violated", row.n));
                    }
                    if let Some(b) = row.beta {
                        if !(b.is_finite() && b > 0.0) {
                            violations.push(format!("n = {}: nonpositive inf-sup constant", row.n));
                        }
                    }
                }
                if !violations.is_empty() {
                    for v in &violations {
                        eprintln!("check failed: {v}");
                    }
                    return Ok(ExitCode::from(2));
                }
                println!("all checks passed");
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Timing { problem, nu, n } => {
            let problem = ProblemId::parse(&problem).expect("clap restricted the values");
            check_desk_scale(problem.dim(), &n)?;
            let mut spec = ExperimentSpec::new(problem, nu, n)?;
            spec.solver = SolverChoice::Ipm;
            let report = timing_comparison(&spec)?;
            print!("{}", report.to_text());
            Ok(ExitCode::SUCCESS)
        }
    }
}

/// Mesh file format plus `#parents` and `#singular` sections.
fn split_file_text(sm: &SplitMesh) -> String {
    let mut out = macrostokes::mesh::format_mesh(&sm.mesh);
    out.push_str("#parents\n");
    for &p in &sm.parent {
        let _ = writeln!(out, "{p}");
    }
    out.push_str("#singular\n");
    match sm.kind {
        SplitKind::PowellSabin => {
            for sp in &sm.singular_points {
                let fan: Vec<String> = sp.fan.iter().map(|c| c.to_string()).collect();
                let _ = writeln!(
                    out,
                    "point vertex={} interior={} fan={}",
                    sp.vertex,
                    sp.interior as u8,
                    fan.join(",")
                );
            }
        }
        SplitKind::WorseyFarin => {
            for fp in &sm.face_points {
                let fan: Vec<String> = fp.fan.iter().map(|c| c.to_string()).collect();
                let _ = writeln!(
                    out,
                    "facepoint vertex={} interior={} fan={}",
                    fp.vertex,
                    fp.interior as u8,
                    fan.join(",")
                );
            }
            for se in &sm.singular_edges {
                let fan: Vec<String> = se.fan.iter().map(|c| c.to_string()).collect();
                let _ = writeln!(
                    out,
                    "edge v0={} v1={} interior={} fan={}",
                    se.vertices.0,
                    se.vertices.1,
                    se.interior as u8,
                    fan.join(",")
                );
            }
            for ct in &sm.ct_faces {
                let _ = writeln!(
                    out,
                    "ctface facepoint={} corners={},{},{} designated={}",
                    ct.face_point, ct.corners[0], ct.corners[1], ct.corners[2], ct.designated
                );
            }
        }
    }
    out
}
