//! Matrix and vector assembly for the linear-velocity / constant-pressure
//! pair, plus error norms.
//!
//! Element loops map over cells producing local contributions in cell order;
//! the global accumulation is a single sequential pass, so results are
//! bitwise reproducible with and without the `parallel` feature.

use crate::dofs::{DofMap, DIRICHLET};
use crate::manufactured::ManufacturedSolution;
use crate::mesh::{Point, Triangulation};
use crate::quadrature::QuadratureRule;
use crate::sparse::CsrMatrix;
use crate::split::SplitMesh;

/// Applies `f` to every index in order.  With the `parallel` feature the map
/// runs on rayon with order-preserving collection, so the merged result is
/// identical to the sequential one.
pub(crate) fn map_indexed<T: Send>(n: usize, f: impl Fn(usize) -> T + Send + Sync) -> Vec<T> {
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        (0..n).into_par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        (0..n).map(f).collect()
    }
}

/// Barycentric gradients and measure of a cell: `grads[k]` is the gradient of
/// the hat function of local vertex `k`.
pub fn cell_gradients(mesh: &Triangulation, c: usize) -> ([[f64; 3]; 4], f64) {
    let cell = mesh.cell(c);
    let p0 = mesh.vertices[cell[0]];
    let mut grads = [[0.0; 3]; 4];
    let measure;
    match mesh.dim {
        2 => {
            let e1 = mesh.vertices[cell[1]].sub(&p0);
            let e2 = mesh.vertices[cell[2]].sub(&p0);
            let det = e1[0] * e2[1] - e1[1] * e2[0];
            measure = det / 2.0;
            // rows of the inverse of [e1 e2]^T
            grads[1] = [e2[1] / det, -e2[0] / det, 0.0];
            grads[2] = [-e1[1] / det, e1[0] / det, 0.0];
        }
        3 => {
            let e1 = mesh.vertices[cell[1]].sub(&p0);
            let e2 = mesh.vertices[cell[2]].sub(&p0);
            let e3 = mesh.vertices[cell[3]].sub(&p0);
            let c23 = crate::mesh::cross(&e2, &e3);
            let c31 = crate::mesh::cross(&e3, &e1);
            let c12 = crate::mesh::cross(&e1, &e2);
            let det = crate::mesh::dot(&e1, &c23);
            measure = det / 6.0;
            for d in 0..3 {
                grads[1][d] = c23[d] / det;
                grads[2][d] = c31[d] / det;
                grads[3][d] = c12[d] / det;
            }
        }
        _ => unreachable!(),
    }
    for d in 0..3 {
        grads[0][d] = -(grads[1][d] + grads[2][d] + grads[3][d]);
    }
    (grads, measure)
}

/// Velocity stiffness over free dofs: entries nu * |K| * grad(phi_i) . grad(phi_j)
/// per component.  Symmetric positive definite.
pub fn assemble_stiffness(sm: &SplitMesh, dofs: &DofMap, nu: f64) -> CsrMatrix {
    let mesh = &sm.mesh;
    let dim = mesh.dim;
    let nv = dim + 1;
    let locals = map_indexed(mesh.n_cells(), |c| {
        let (grads, measure) = cell_gradients(mesh, c);
        let mut local = [[0.0f64; 4]; 4];
        for a in 0..nv {
            for b in 0..nv {
                local[a][b] = nu
                    * measure
                    * (grads[a][0] * grads[b][0]
                        + grads[a][1] * grads[b][1]
                        + grads[a][2] * grads[b][2]);
            }
        }
        local
    });
    let mut triplets = Vec::with_capacity(mesh.n_cells() * nv * nv * dim);
    for (c, local) in locals.iter().enumerate() {
        let cell = mesh.cell(c);
        for a in 0..nv {
            for b in 0..nv {
                for comp in 0..dim {
                    let i = dofs.velocity_dof(cell[a], comp);
                    let j = dofs.velocity_dof(cell[b], comp);
                    if i != DIRICHLET && j != DIRICHLET {
                        triplets.push((i, j, local[a][b]));
                    }
                }
            }
        }
    }
    CsrMatrix::from_triplets(dofs.n_velocity, dofs.n_velocity, triplets)
}

/// Raw divergence matrix B~ over (free velocity dofs) x (raw P0 dofs):
/// B~[i, sigma(K)] = -int_K div(phi_i), exact since P1 divergences are
/// constant per cell.
pub fn assemble_divergence(sm: &SplitMesh, dofs: &DofMap) -> CsrMatrix {
    let mesh = &sm.mesh;
    let dim = mesh.dim;
    let nv = dim + 1;
    let locals = map_indexed(mesh.n_cells(), |c| {
        let (grads, measure) = cell_gradients(mesh, c);
        let mut local = [[0.0f64; 3]; 4];
        for (a, grad) in grads.iter().enumerate().take(nv) {
            for comp in 0..dim {
                local[a][comp] = -measure * grad[comp];
            }
        }
        local
    });
    let mut triplets = Vec::with_capacity(mesh.n_cells() * nv * dim);
    for (c, local) in locals.iter().enumerate() {
        let cell = mesh.cell(c);
        let col = dofs.pressure_of_cell[c];
        for a in 0..nv {
            for comp in 0..dim {
                let i = dofs.velocity_dof(cell[a], comp);
                if i != DIRICHLET {
                    triplets.push((i, col, local[a][comp]));
                }
            }
        }
    }
    CsrMatrix::from_triplets(dofs.n_velocity, dofs.n_pressure_raw, triplets)
}

/// Diagonal mass matrix of cell measures in sigma ordering.
pub fn assemble_pressure_mass(sm: &SplitMesh, dofs: &DofMap) -> CsrMatrix {
    let mesh = &sm.mesh;
    let mut triplets = Vec::with_capacity(mesh.n_cells());
    for c in 0..mesh.n_cells() {
        triplets.push((dofs.pressure_of_cell[c], dofs.pressure_of_cell[c], mesh.measure(c)));
    }
    CsrMatrix::from_triplets(dofs.n_pressure_raw, dofs.n_pressure_raw, triplets)
}

/// Grad-div matrix over free dofs: int div(phi_i) div(phi_j), used by the
/// iterated penalty iteration.
pub fn assemble_divdiv(sm: &SplitMesh, dofs: &DofMap) -> CsrMatrix {
    let mesh = &sm.mesh;
    let dim = mesh.dim;
    let nv = dim + 1;
    let locals = map_indexed(mesh.n_cells(), |c| {
        let (grads, measure) = cell_gradients(mesh, c);
        (grads, measure)
    });
    let mut triplets = Vec::with_capacity(mesh.n_cells() * (nv * dim) * (nv * dim));
    for (c, (grads, measure)) in locals.iter().enumerate() {
        let cell = mesh.cell(c);
        for a in 0..nv {
            for ca in 0..dim {
                let i = dofs.velocity_dof(cell[a], ca);
                if i == DIRICHLET {
                    continue;
                }
                for b in 0..nv {
                    for cb in 0..dim {
                        let j = dofs.velocity_dof(cell[b], cb);
                        if j != DIRICHLET {
                            triplets.push((i, j, measure * grads[a][ca] * grads[b][cb]));
                        }
                    }
                }
            }
        }
    }
    CsrMatrix::from_triplets(dofs.n_velocity, dofs.n_velocity, triplets)
}

/// Load vector int f . phi_i by quadrature.
pub fn assemble_load<F>(sm: &SplitMesh, dofs: &DofMap, f: F, rule: &QuadratureRule) -> Vec<f64>
where
    F: Fn(&Point) -> [f64; 3] + Send + Sync,
{
    let mesh = &sm.mesh;
    let dim = mesh.dim;
    let nv = dim + 1;
    let locals = map_indexed(mesh.n_cells(), |c| {
        let measure = mesh.measure(c);
        let mut local = [[0.0f64; 3]; 4];
        for q in 0..rule.len() {
            let x = rule.physical_point(mesh, c, q);
            let w = rule.physical_weight(measure, q);
            let fx = f(&x);
            for a in 0..nv {
                let lambda = rule.points[q][a];
                for comp in 0..dim {
                    local[a][comp] += w * fx[comp] * lambda;
                }
            }
        }
        local
    });
    let mut load = vec![0.0; dofs.n_velocity];
    for (c, local) in locals.iter().enumerate() {
        let cell = mesh.cell(c);
        for a in 0..nv {
            for comp in 0..dim {
                let i = dofs.velocity_dof(cell[a], comp);
                if i != DIRICHLET {
                    load[i] += local[a][comp];
                }
            }
        }
    }
    load
}

/// r_i = nu * int grad(u) : grad(phi_i), the right-hand side of the
/// H1-projection onto the discrete velocity space.
pub fn assemble_gradient_load(
    sm: &SplitMesh,
    dofs: &DofMap,
    ms: &ManufacturedSolution,
    nu: f64,
    rule: &QuadratureRule,
) -> Vec<f64> {
    let mesh = &sm.mesh;
    let dim = mesh.dim;
    let nv = dim + 1;
    let locals = map_indexed(mesh.n_cells(), |c| {
        let (grads, measure) = cell_gradients(mesh, c);
        let mut local = [[0.0f64; 3]; 4];
        for q in 0..rule.len() {
            let x = rule.physical_point(mesh, c, q);
            let w = rule.physical_weight(measure, q);
            let gu = ms.gradient(&x);
            for a in 0..nv {
                for comp in 0..dim {
                    // row comp of grad(u) dotted with grad(phi_a)
                    let mut acc = 0.0;
                    for d in 0..dim {
                        acc += gu[comp][d] * grads[a][d];
                    }
                    local[a][comp] += w * nu * acc;
                }
            }
        }
        local
    });
    let mut load = vec![0.0; dofs.n_velocity];
    for (c, local) in locals.iter().enumerate() {
        let cell = mesh.cell(c);
        for a in 0..nv {
            for comp in 0..dim {
                let i = dofs.velocity_dof(cell[a], comp);
                if i != DIRICHLET {
                    load[i] += local[a][comp];
                }
            }
        }
    }
    load
}

/// Cellwise divergence of a discrete velocity, returned in sigma ordering.
/// `full_velocity` is indexed `vertex * dim + comp` (see
/// [`DofMap::expand_velocity`]).
pub fn divergence_vector(sm: &SplitMesh, dofs: &DofMap, full_velocity: &[f64]) -> Vec<f64> {
    let mesh = &sm.mesh;
    let dim = mesh.dim;
    let nv = dim + 1;
    let per_cell = map_indexed(mesh.n_cells(), |c| {
        let (grads, _) = cell_gradients(mesh, c);
        let cell = mesh.cell(c);
        let mut div = 0.0;
        for (a, grad) in grads.iter().enumerate().take(nv) {
            for comp in 0..dim {
                div += full_velocity[cell[a] * dim + comp] * grad[comp];
            }
        }
        div
    });
    let mut out = vec![0.0; dofs.n_pressure_raw];
    for (c, div) in per_cell.into_iter().enumerate() {
        out[dofs.pressure_of_cell[c]] = div;
    }
    out
}

/// L2 norm of a sigma-ordered piecewise-constant field.
pub fn p0_l2_norm(sm: &SplitMesh, dofs: &DofMap, values: &[f64]) -> f64 {
    let mesh = &sm.mesh;
    let acc: f64 = (0..mesh.n_cells())
        .map(|c| {
            let v = values[dofs.pressure_of_cell[c]];
            mesh.measure(c) * v * v
        })
        .sum();
    acc.sqrt()
}

/// Mean of a sigma-ordered piecewise-constant field over the domain.
pub fn p0_mean(sm: &SplitMesh, dofs: &DofMap, values: &[f64]) -> f64 {
    let mesh = &sm.mesh;
    let mut total = 0.0;
    let mut vol = 0.0;
    for c in 0..mesh.n_cells() {
        let m = mesh.measure(c);
        total += m * values[dofs.pressure_of_cell[c]];
        vol += m;
    }
    total / vol
}

/// Exact L2 norm of a discrete P1 velocity field given by free coefficients
/// (uses the closed-form P1 mass on each cell).
pub fn discrete_velocity_l2(sm: &SplitMesh, dofs: &DofMap, free: &[f64]) -> f64 {
    let mesh = &sm.mesh;
    let dim = mesh.dim;
    let nv = dim + 1;
    let full = dofs.expand_velocity(free);
    let mut acc = 0.0;
    for c in 0..mesh.n_cells() {
        let cell = mesh.cell(c);
        let m = mesh.measure(c);
        let denom = ((nv + 1) * (nv)) as f64; // (d+1)(d+2)
        for comp in 0..dim {
            for a in 0..nv {
                for b in 0..nv {
                    let w = if a == b { 2.0 } else { 1.0 };
                    acc += m * w / denom
                        * full[cell[a] * dim + comp]
                        * full[cell[b] * dim + comp];
                }
            }
        }
    }
    acc.sqrt()
}

#[derive(Debug, Clone, Copy)]
pub struct ErrorNorms {
    pub l2_velocity: f64,
    pub h1_seminorm_velocity: f64,
    pub l2_pressure: f64,
    pub l2_divergence: f64,
}

/// Quadrature norms of the discretization error.  The pressure error is
/// measured after subtracting the numerical mean of (p - p_h); the divergence
/// norm is exact since div(u_h) is piecewise constant.
pub fn error_norms(
    sm: &SplitMesh,
    dofs: &DofMap,
    velocity_free: &[f64],
    pressure_sigma: &[f64],
    ms: &ManufacturedSolution,
    rule: &QuadratureRule,
) -> ErrorNorms {
    let mesh = &sm.mesh;
    let dim = mesh.dim;
    let nv = dim + 1;
    let full = dofs.expand_velocity(velocity_free);

    // pass 1: velocity norms, divergence, and the mean of (p - p_h)
    let partials = map_indexed(mesh.n_cells(), |c| {
        let (grads, measure) = cell_gradients(mesh, c);
        let cell = mesh.cell(c);
        let mut gh = [[0.0f64; 3]; 3];
        for a in 0..nv {
            for comp in 0..dim {
                let coeff = full[cell[a] * dim + comp];
                for d in 0..dim {
                    gh[comp][d] += coeff * grads[a][d];
                }
            }
        }
        let divh: f64 = (0..dim).map(|d| gh[d][d]).sum();
        let ph = pressure_sigma[dofs.pressure_of_cell[c]];
        let mut l2 = 0.0;
        let mut h1 = 0.0;
        let mut pdiff = 0.0;
        for q in 0..rule.len() {
            let x = rule.physical_point(mesh, c, q);
            let w = rule.physical_weight(measure, q);
            let u = ms.velocity(&x);
            let gu = ms.gradient(&x);
            for comp in 0..dim {
                let mut uh = 0.0;
                for a in 0..nv {
                    uh += rule.points[q][a] * full[cell[a] * dim + comp];
                }
                l2 += w * (u[comp] - uh) * (u[comp] - uh);
                for d in 0..dim {
                    let e = gu[comp][d] - gh[comp][d];
                    h1 += w * e * e;
                }
            }
            pdiff += w * (ms.pressure(&x) - ph);
        }
        (l2, h1, pdiff, measure * divh * divh, measure)
    });
    let mut l2 = 0.0;
    let mut h1 = 0.0;
    let mut pmean = 0.0;
    let mut div2 = 0.0;
    let mut vol = 0.0;
    for &(a, b, c, d, m) in &partials {
        l2 += a;
        h1 += b;
        pmean += c;
        div2 += d;
        vol += m;
    }
    let mean_diff = pmean / vol;

    // pass 2: centered pressure error
    let p_parts = map_indexed(mesh.n_cells(), |c| {
        let measure = mesh.measure(c);
        let ph = pressure_sigma[dofs.pressure_of_cell[c]];
        let mut acc = 0.0;
        for q in 0..rule.len() {
            let x = rule.physical_point(mesh, c, q);
            let w = rule.physical_weight(measure, q);
            let e = ms.pressure(&x) - ph - mean_diff;
            acc += w * e * e;
        }
        acc
    });
    let p2: f64 = p_parts.iter().sum();

    ErrorNorms {
        l2_velocity: l2.sqrt(),
        h1_seminorm_velocity: h1.sqrt(),
        l2_pressure: p2.sqrt(),
        l2_divergence: div2.sqrt(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::manufactured::ProblemId;
    use crate::mesh::build_structured_square;
    use crate::split::powell_sabin_split;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    fn setup(n: usize) -> (SplitMesh, DofMap) {
        let sm = powell_sabin_split(&build_structured_square(n).unwrap()).unwrap();
        let dofs = DofMap::new(&sm);
        (sm, dofs)
    }

    #[test]
    fn stiffness_is_exactly_symmetric_and_positive() {
        let (sm, dofs) = setup(2);
        let a = assemble_stiffness(&sm, &dofs, 1.0);
        assert_eq!(a.asymmetry(), 0.0);
        let mut rng = StdRng::seed_from_u64(1);
        for _ in 0..20 {
            let x: Vec<f64> = (0..a.nrows()).map(|_| rng.gen::<f64>() - 0.5).collect();
            let quad = crate::sparse::dot(&x, &a.matvec(&x));
            assert!(quad > 0.0);
        }
    }

    #[test]
    fn divergence_rows_annihilate_constants() {
        let (sm, dofs) = setup(2);
        let b = assemble_divergence(&sm, &dofs);
        let ones = vec![1.0; b.ncols()];
        let bv = b.matvec(&ones);
        let worst = bv.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        assert!(worst <= 1e-13, "B~ 1 = {worst}");
    }

    #[test]
    fn divergence_entries_match_gradient_formula() {
        // independent oracle: entries are -|K| * (inward facet normal scaled),
        // recomputed from edge rotations in 2D
        let (sm, dofs) = setup(1);
        let b = assemble_divergence(&sm, &dofs);
        let mesh = &sm.mesh;
        for c in 0..mesh.n_cells() {
            let cell = mesh.cell(c);
            let col = dofs.pressure_of_cell[c];
            let measure = mesh.measure(c);
            for a in 0..3 {
                // gradient of hat a: rotate opposite edge by 90 degrees / (2|K|)
                let p1 = mesh.vertices[cell[(a + 1) % 3]];
                let p2 = mesh.vertices[cell[(a + 2) % 3]];
                let edge = p2.sub(&p1);
                let grad = [-edge[1] / (2.0 * measure), edge[0] / (2.0 * measure)];
                for comp in 0..2 {
                    let i = dofs.velocity_dof(cell[a], comp);
                    if i == DIRICHLET {
                        continue;
                    }
                    let expect = -measure * grad[comp];
                    assert!(
                        (b.get(i, col) - expect).abs() <= 1e-14,
                        "cell {c} vertex {a} comp {comp}"
                    );
                }
            }
        }
    }

    #[test]
    fn divergence_entries_scale_like_h() {
        // 2D entries scale like h^{d-1} = h; structured meshes scale exactly
        let (sm1, d1) = setup(2);
        let (sm2, d2) = setup(4);
        let b1 = assemble_divergence(&sm1, &d1);
        let b2 = assemble_divergence(&sm2, &d2);
        let ratio = b1.max_abs() / b2.max_abs();
        assert!((ratio - 2.0).abs() <= 1e-9, "ratio {ratio}");
    }

    #[test]
    fn pressure_mass_traces_domain_measure() {
        let (sm, dofs) = setup(2);
        let m = assemble_pressure_mass(&sm, &dofs);
        let trace: f64 = m.diagonal().iter().sum();
        assert!((trace - 1.0).abs() <= 1e-12);
        assert!(m.diagonal().iter().all(|&v| v > 0.0));

        // PS split of one coarse triangle: 6 positive entries summing to its area
        let t = crate::mesh::Triangulation::from_cells(
            2,
            vec![
                Point::new2(0.0, 0.0),
                Point::new2(1.0, 0.0),
                Point::new2(0.2, 0.8),
            ],
            vec![0, 1, 2],
        )
        .unwrap();
        let area = t.measure(0);
        let sm1 = powell_sabin_split(&t).unwrap();
        let d1 = DofMap::new(&sm1);
        let m1 = assemble_pressure_mass(&sm1, &d1);
        let diag = m1.diagonal();
        assert_eq!(diag.len(), 6);
        assert!(diag.iter().all(|&v| v > 0.0));
        let sum: f64 = diag.iter().sum();
        assert!((sum - area).abs() <= 1e-14);
    }

    #[test]
    fn zero_source_gives_zero_load() {
        let (sm, dofs) = setup(1);
        let rule = QuadratureRule::triangle_degree6();
        let load = assemble_load(&sm, &dofs, |_p: &Point| [0.0; 3], &rule);
        assert!(load.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn constant_source_matches_mass_row_sums() {
        // f = c: load_i = c * int(phi_i), and int(phi_i) is the sum of
        // |K| / (d+1) over cells touching the vertex
        let (sm, dofs) = setup(2);
        let rule = QuadratureRule::triangle_degree6();
        let c = [1.25, -0.5, 0.0];
        let load = assemble_load(&sm, &dofs, |_p: &Point| c, &rule);
        let mesh = &sm.mesh;
        let mut weights = vec![0.0; mesh.n_vertices()];
        for cell_id in 0..mesh.n_cells() {
            for &v in mesh.cell(cell_id) {
                weights[v] += mesh.measure(cell_id) / 3.0;
            }
        }
        for v in 0..mesh.n_vertices() {
            for comp in 0..2 {
                let i = dofs.velocity_dof(v, comp);
                if i == DIRICHLET {
                    continue;
                }
                assert!(
                    (load[i] - c[comp] * weights[v]).abs() <= 1e-13,
                    "vertex {v} comp {comp}"
                );
            }
        }
    }

    #[test]
    fn zero_fields_give_zero_divergence_norm() {
        let (sm, dofs) = setup(1);
        let rule = QuadratureRule::triangle_degree6();
        let free = vec![0.0; dofs.n_velocity];
        let p = vec![0.0; dofs.n_pressure_raw];
        let ms = ManufacturedSolution::new(ProblemId::Ps2d, 1.0);
        let norms = error_norms(&sm, &dofs, &free, &p, &ms, &rule);
        // u_h = 0 is exactly divergence-free; the other norms measure the
        // exact fields themselves
        assert_eq!(norms.l2_divergence, 0.0);
        assert!(norms.l2_velocity > 0.0);
        assert!(norms.l2_pressure > 0.0);
    }
}
