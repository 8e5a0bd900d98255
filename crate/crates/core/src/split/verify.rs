//! Independent geometric verification of recorded singular features.
//!
//! The checks below use only vertex coordinates and cell incidence, not the
//! fan metadata stored during construction: a 2D singular vertex must have all
//! incident edges on exactly two straight lines, a 3D singular edge must have
//! all incident faces on exactly two planes (tolerance 1e-10, slightly looser
//! than the geometric 1e-12 to absorb intersection-point rounding).

use super::{SplitKind, SplitMesh};
use crate::mesh::{cross, norm};

pub const SINGULARITY_TOL: f64 = 1e-10;

#[derive(Debug, Clone)]
pub struct SingularityReport {
    /// One entry per recorded feature: (description, passed).
    pub features: Vec<(String, bool)>,
}

impl SingularityReport {
    pub fn all_pass(&self) -> bool {
        self.features.iter().all(|(_, ok)| *ok)
    }

    pub fn n_failed(&self) -> usize {
        self.features.iter().filter(|(_, ok)| !ok).count()
    }
}

/// Number of distinct lines spanned by a set of direction vectors; two
/// directions lie on one line when they are parallel or antiparallel.
fn count_lines(dirs: &[[f64; 3]]) -> usize {
    let mut reps: Vec<[f64; 3]> = Vec::new();
    for d in dirs {
        let len = norm(d);
        let unit = [d[0] / len, d[1] / len, d[2] / len];
        let on_existing = reps
            .iter()
            .any(|r| norm(&cross(r, &unit)) <= SINGULARITY_TOL);
        if !on_existing {
            reps.push(unit);
        }
    }
    reps.len()
}

/// Number of distinct planes spanned by a set of unit normals.
fn count_planes(normals: &[[f64; 3]]) -> usize {
    count_lines(normals)
}

pub fn verify_singularity(sm: &SplitMesh) -> SingularityReport {
    let mesh = &sm.mesh;
    let mut incident: Vec<Vec<usize>> = vec![Vec::new(); mesh.n_vertices()];
    for c in 0..mesh.n_cells() {
        for &v in mesh.cell(c) {
            incident[v].push(c);
        }
    }
    let mut features = Vec::new();
    match sm.kind {
        SplitKind::PowellSabin => {
            for (i, sp) in sm.singular_points.iter().enumerate() {
                let z = sp.vertex;
                let pz = mesh.vertices[z];
                let mut dirs = Vec::new();
                for &c in &incident[z] {
                    for &v in mesh.cell(c) {
                        if v != z {
                            dirs.push(mesh.vertices[v].sub(&pz));
                        }
                    }
                }
                let ok = count_lines(&dirs) == 2;
                features.push((format!("singular point {i} (vertex {z})"), ok));
            }
        }
        SplitKind::WorseyFarin => {
            for (i, se) in sm.singular_edges.iter().enumerate() {
                let (z1, z2) = se.vertices;
                let p1 = mesh.vertices[z1];
                let axis = mesh.vertices[z2].sub(&p1);
                let mut normals = Vec::new();
                for &c in &incident[z1] {
                    let cell = mesh.cell(c);
                    if !cell.contains(&z2) {
                        continue;
                    }
                    // the two faces of this tet containing the edge
                    for &w in cell {
                        if w == z1 || w == z2 {
                            continue;
                        }
                        let n = cross(&axis, &mesh.vertices[w].sub(&p1));
                        normals.push(n);
                    }
                }
                let ok = count_planes(&normals) == 2;
                features.push((format!("singular edge {i} ({z1}, {z2})"), ok));
            }
        }
    }
    SingularityReport { features }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{build_structured_cube, build_structured_square, Point};
    use crate::split::{powell_sabin_split, worsey_farin_split};

    #[test]
    fn structured_splits_pass() {
        let sm = powell_sabin_split(&build_structured_square(2).unwrap()).unwrap();
        let report = verify_singularity(&sm);
        assert!(report.all_pass(), "{:?}", report.features);

        let sm = worsey_farin_split(&build_structured_cube(1).unwrap()).unwrap();
        let report = verify_singularity(&sm);
        assert!(report.all_pass());
        // 3 face-local singular edges per coarse face, 6 interior + 12 boundary
        assert_eq!(report.features.len(), 3 * (6 + 12));
    }

    #[test]
    fn perturbed_split_point_fails_its_feature() {
        let mut sm = powell_sabin_split(&build_structured_square(2).unwrap()).unwrap();
        let sp = sm
            .singular_points
            .iter()
            .position(|s| s.interior)
            .unwrap();
        let v = sm.singular_points[sp].vertex;
        sm.mesh.vertices[v].0[0] += 1e-3;
        let report = verify_singularity(&sm);
        assert!(!report.features[sp].1);
        assert_eq!(report.n_failed(), 1);
    }

    #[test]
    fn perturbed_face_point_fails_in_3d() {
        let mut sm = worsey_farin_split(&build_structured_cube(1).unwrap()).unwrap();
        let fp = sm.face_points.iter().position(|f| f.interior).unwrap();
        let v = sm.face_points[fp].vertex;
        // shift within the face plane so the edge directions change
        let p = Point(sm.mesh.vertices[v].0);
        sm.mesh.vertices[v] = Point([p.0[0] + 1e-3, p.0[1] + 1e-3, p.0[2]]);
        let report = verify_singularity(&sm);
        assert!(!report.all_pass());
    }
}
