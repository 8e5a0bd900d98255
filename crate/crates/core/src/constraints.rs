//! Weakly-continuous pressure bases and their algebraic enforcement.
//!
//! A piecewise-constant pressure q is admissible when every alternating sum
//! theta(q) around a singular feature vanishes.  Per feature z the admissible
//! local basis is explicit: in 2D psi_z^(j) = phi_z^(j) + (-1)^j phi_z^(1) for
//! j = 2..n_z; in 3D (interior face split points, fan slots 1..6)
//!
//!   psi^(3) = phi^(3) + phi^(1) + phi^(2)
//!   psi^(4) = phi^(4) + phi^(1)
//!   psi^(5) = phi^(5) + phi^(2)
//!   psi^(6) = phi^(6) - phi^(1) - phi^(2)
//!
//! and psi^(3) alone for boundary points.  The same combinations applied as
//! elementary column operations to the raw divergence matrix produce the
//! reduced matrix B, so the constraint never has to appear in the assembly.

use crate::dofs::DofMap;
use crate::error::Error;
use crate::sparse::CsrMatrix;
use crate::split::{fan_is_adjacent_chain, SplitKind, SplitMesh};
use crate::Result;

/// Alternating-sum functional over raw pressure dofs.
#[derive(Debug, Clone)]
pub struct ThetaFunctional {
    /// Owning feature (singular point in 2D, face split point in 3D).
    pub feature: usize,
    pub interior: bool,
    /// (raw pressure dof, sign) pairs.
    pub entries: Vec<(usize, f64)>,
}

impl ThetaFunctional {
    pub fn apply(&self, q: &[f64]) -> f64 {
        self.entries.iter().map(|&(dof, s)| s * q[dof]).sum()
    }
}

/// One functional per singular vertex (2D) or singular edge (3D), interior
/// and boundary alike.
pub fn build_theta_functionals(sm: &SplitMesh, dofs: &DofMap) -> Result<Vec<ThetaFunctional>> {
    let mut out = Vec::new();
    match sm.kind {
        SplitKind::PowellSabin => {
            for (i, sp) in sm.singular_points.iter().enumerate() {
                if !fan_is_adjacent_chain(&sm.mesh, &sp.fan, sp.interior) {
                    return Err(Error::FanOrdering(format!("singular point {i}")));
                }
                let entries = sp
                    .fan
                    .iter()
                    .enumerate()
                    .map(|(j, &cell)| {
                        (dofs.pressure_of_cell[cell], if j % 2 == 0 { 1.0 } else { -1.0 })
                    })
                    .collect();
                out.push(ThetaFunctional {
                    feature: i,
                    interior: sp.interior,
                    entries,
                });
            }
        }
        SplitKind::WorseyFarin => {
            for (i, se) in sm.singular_edges.iter().enumerate() {
                if !fan_is_adjacent_chain(&sm.mesh, &se.fan, se.interior) {
                    return Err(Error::FanOrdering(format!("singular edge {i}")));
                }
                let entries = se
                    .fan
                    .iter()
                    .enumerate()
                    .map(|(j, &cell)| {
                        (dofs.pressure_of_cell[cell], if j % 2 == 0 { 1.0 } else { -1.0 })
                    })
                    .collect();
                out.push(ThetaFunctional {
                    feature: se.face_point,
                    interior: se.interior,
                    entries,
                });
            }
        }
    }
    Ok(out)
}

/// The 3x6 constraint matrix of an interior face split point in the sigma
/// fan labeling; its rows are the three singular-edge functionals.
pub fn local_constraint_matrix_3d(sm: &SplitMesh, z: usize) -> Result<[[f64; 6]; 3]> {
    if sm.kind != SplitKind::WorseyFarin {
        return Err(Error::invalid("constraint matrix is a 3D construction"));
    }
    let fp = &sm.face_points[z];
    if !fp.interior {
        return Err(Error::invalid(format!(
            "face split point {z} is on the boundary; boundary points carry a single constraint"
        )));
    }
    let mut c = [[0.0; 6]; 3];
    for j in 0..3 {
        c[j][j] = 1.0;
        c[j][(j + 1) % 3] = -1.0;
        c[j][(j + 1) % 3 + 3] = 1.0;
        c[j][j + 3] = -1.0;
    }
    Ok(c)
}

/// Sparse +-1 transform from reduced (psi) coefficients to raw piecewise
/// constants, with the bookkeeping of which raw dofs were kept or deleted.
#[derive(Debug, Clone)]
pub struct ConstraintTransform {
    /// M_raw x M_reduced, entries in {-1, 0, +1}.
    pub z: CsrMatrix,
    /// Raw dof owning each reduced column (the j-slot of its psi).
    pub kept: Vec<usize>,
    /// Raw dofs eliminated per feature (sigma(z,1), and sigma(z,2) in 3D).
    pub deleted: Vec<usize>,
    /// Elementary column operations realizing B = B~ Z in place:
    /// (target raw dof, source raw dof, coefficient).
    ops: Vec<(usize, usize, f64)>,
}

pub fn build_constraint_transform(sm: &SplitMesh, dofs: &DofMap) -> ConstraintTransform {
    match sm.kind {
        SplitKind::PowellSabin => build_constraint_transform_2d(sm, dofs),
        SplitKind::WorseyFarin => build_constraint_transform_3d(sm, dofs),
    }
}

/// psi_z^(j) = phi_z^(j) + (-1)^j phi_z^(1) for every singular vertex and
/// j = 2..n_z; raw dof sigma(z,1) is deleted.
pub fn build_constraint_transform_2d(sm: &SplitMesh, dofs: &DofMap) -> ConstraintTransform {
    assert_eq!(sm.kind, SplitKind::PowellSabin);
    let mut triplets = Vec::new();
    let mut kept = Vec::new();
    let mut deleted = Vec::new();
    let mut ops = Vec::new();
    for z in 0..sm.n_features() {
        let range = dofs.feature_dofs(z);
        let first = range.start;
        deleted.push(first);
        for (slot, raw) in range.clone().enumerate().skip(1) {
            let j = slot + 1; // 1-based fan position
            let col = kept.len();
            let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
            triplets.push((raw, col, 1.0));
            triplets.push((first, col, sign));
            ops.push((raw, first, sign));
            kept.push(raw);
        }
    }
    let z = CsrMatrix::from_triplets(dofs.n_pressure_raw, kept.len(), triplets);
    ConstraintTransform {
        z,
        kept,
        deleted,
        ops,
    }
}

/// The four-column (interior) / one-column (boundary) basis per face split
/// point; raw dofs sigma(z,1) and sigma(z,2) are deleted.
pub fn build_constraint_transform_3d(sm: &SplitMesh, dofs: &DofMap) -> ConstraintTransform {
    assert_eq!(sm.kind, SplitKind::WorseyFarin);
    let mut triplets = Vec::new();
    let mut kept = Vec::new();
    let mut deleted = Vec::new();
    let mut ops = Vec::new();
    for z in 0..sm.n_features() {
        let range = dofs.feature_dofs(z);
        let o = range.start;
        deleted.push(o);
        deleted.push(o + 1);
        let combos: &[(usize, &[(usize, f64)])] = if sm.feature_interior(z) {
            &[
                (2, &[(0, 1.0), (1, 1.0)]),
                (3, &[(0, 1.0)]),
                (4, &[(1, 1.0)]),
                (5, &[(0, -1.0), (1, -1.0)]),
            ]
        } else {
            &[(2, &[(0, 1.0), (1, 1.0)])]
        };
        for &(slot, extras) in combos {
            let col = kept.len();
            triplets.push((o + slot, col, 1.0));
            for &(src_slot, coeff) in extras {
                triplets.push((o + src_slot, col, coeff));
                ops.push((o + slot, o + src_slot, coeff));
            }
            kept.push(o + slot);
        }
    }
    let z = CsrMatrix::from_triplets(dofs.n_pressure_raw, kept.len(), triplets);
    ConstraintTransform {
        z,
        kept,
        deleted,
        ops,
    }
}

impl ConstraintTransform {
    pub fn n_reduced(&self) -> usize {
        self.kept.len()
    }

    /// Expands reduced coefficients to raw piecewise constants (Z c).
    pub fn expand(&self, reduced: &[f64]) -> Vec<f64> {
        self.z.matvec(reduced)
    }

    /// Reduced mean row Z^T m from the raw cell-measure vector.
    pub fn reduce_mean_row(&self, raw_measures: &[f64]) -> Vec<f64> {
        self.z.matvec_transpose(raw_measures)
    }
}

/// Enforces the pressure constraints on the raw divergence matrix by the
/// elementary column operations (targets gain multiples of the later-deleted
/// first columns of their feature), then deletes those columns.  The result
/// equals B~ Z entrywise and in sparsity pattern.
pub fn apply_column_operations(b_tilde: &CsrMatrix, ct: &ConstraintTransform) -> CsrMatrix {
    // work on B~^T so columns become contiguous rows
    let bt = b_tilde.transpose();
    let m_raw = bt.nrows();
    let mut rows: Vec<Vec<(usize, f64)>> = (0..m_raw)
        .map(|r| {
            let (cols, vals) = bt.row(r);
            cols.iter().copied().zip(vals.iter().copied()).collect()
        })
        .collect();
    // elementary column operations; sources are only ever deleted columns,
    // which no operation modifies, so the order is immaterial
    for &(target, source, coeff) in &ct.ops {
        let merged = merge_sparse_rows(&rows[target], &rows[source], coeff);
        rows[target] = merged;
    }
    // delete the source columns and emit the kept ones in reduced order
    let mut row_ptr = vec![0usize];
    let mut col_idx = Vec::new();
    let mut values = Vec::new();
    for &raw in &ct.kept {
        for &(c, v) in &rows[raw] {
            col_idx.push(c);
            values.push(v);
        }
        row_ptr.push(col_idx.len());
    }
    let reduced_t = CsrMatrix::from_parts(ct.kept.len(), bt.ncols(), row_ptr, col_idx, values);
    reduced_t.transpose()
}

/// Reference path: the sparse product B~ Z.
pub fn transform_divergence_product(b_tilde: &CsrMatrix, ct: &ConstraintTransform) -> CsrMatrix {
    b_tilde.matmul(&ct.z)
}

/// Sorted merge a + coeff * b keeping explicit zeros (the pattern is the
/// union of the operand patterns).
fn merge_sparse_rows(
    a: &[(usize, f64)],
    b: &[(usize, f64)],
    coeff: f64,
) -> Vec<(usize, f64)> {
    let mut out = Vec::with_capacity(a.len() + b.len());
    let mut i = 0;
    let mut j = 0;
    while i < a.len() || j < b.len() {
        if j >= b.len() || (i < a.len() && a[i].0 < b[j].0) {
            out.push(a[i]);
            i += 1;
        } else if i >= a.len() || b[j].0 < a[i].0 {
            out.push((b[j].0, coeff * b[j].1));
            j += 1;
        } else {
            out.push((a[i].0, a[i].1 + coeff * b[j].1));
            i += 1;
            j += 1;
        }
    }
    out
}
