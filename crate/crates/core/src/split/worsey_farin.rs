//! Worsey-Farin refinement: each tetrahedron is split into twelve subtets
//! through its incenter (Alfeld stage) and the split points on its faces
//! (Clough-Tocher stage on each face).

use super::{
    fan_is_adjacent_chain, telemetry, CloughTocherFace, FaceSplitPoint3d, SingularEdge3d,
    SplitKind, SplitMesh,
};
use crate::error::Error;
use crate::mesh::{cross, dot, incenter, Point, Triangulation};
use crate::Result;
use std::sync::atomic::Ordering;

struct Face {
    corners: [usize; 3],
    /// (cell, local facet) pairs; one entry for boundary faces.
    sides: Vec<(usize, usize)>,
}

fn collect_faces(t: &Triangulation) -> Vec<Face> {
    let mut faces: Vec<Face> = Vec::new();
    let mut seen: std::collections::HashMap<[usize; 3], usize> = std::collections::HashMap::new();
    for c in 0..t.n_cells() {
        let cell = t.cell(c);
        for k in 0..4 {
            let mut corners = [0usize; 3];
            let mut idx = 0;
            for (l, &v) in cell.iter().enumerate() {
                if l != k {
                    corners[idx] = v;
                    idx += 1;
                }
            }
            let mut key = corners;
            key.sort_unstable();
            match seen.get(&key) {
                Some(&f) => faces[f].sides.push((c, k)),
                None => {
                    seen.insert(key, faces.len());
                    faces.push(Face {
                        corners: key,
                        sides: vec![(c, k)],
                    });
                }
            }
        }
    }
    faces
}

/// Intersection of the segment i1 -> i2 with the plane of triangle
/// (pa, pb, pc); returns the point if the crossing is strictly inside both
/// the segment and the triangle.
fn plane_crossing(i1: &Point, i2: &Point, pa: &Point, pb: &Point, pc: &Point) -> Option<Point> {
    let n = cross(&pb.sub(pa), &pc.sub(pa));
    let dir = i2.sub(i1);
    let denom = dot(&n, &dir);
    if denom.abs() < 1e-16 {
        return None;
    }
    let tt = dot(&n, &pa.sub(i1)) / denom;
    let eps = 1e-12;
    if tt <= eps || tt >= 1.0 - eps {
        return None;
    }
    let p = Point([
        i1.0[0] + tt * dir[0],
        i1.0[1] + tt * dir[1],
        i1.0[2] + tt * dir[2],
    ]);
    // barycentric interiority within the triangle
    let area2 = dot(&n, &n).sqrt();
    let la = dot(&n, &cross(&pb.sub(&p), &pc.sub(&p))) / area2;
    let lb = dot(&n, &cross(&pc.sub(&p), &pa.sub(&p))) / area2;
    let lc = dot(&n, &cross(&pa.sub(&p), &pb.sub(&p))) / area2;
    let scale = la + lb + lc;
    if la <= eps * scale || lb <= eps * scale || lc <= eps * scale {
        return None;
    }
    Some(p)
}

pub fn worsey_farin_split(t: &Triangulation) -> Result<SplitMesh> {
    if t.dim != 3 {
        return Err(Error::invalid("worsey_farin_split requires a 3D mesh"));
    }
    telemetry::WF_SPLITS.fetch_add(1, Ordering::Relaxed);

    let nc = t.n_cells();
    let mut vertices = t.vertices.clone();

    let mut incenter_vid = Vec::with_capacity(nc);
    for c in 0..nc {
        incenter_vid.push(vertices.len());
        vertices.push(incenter(t, c)?);
    }

    let faces = collect_faces(t);
    let mut split_vid = Vec::with_capacity(faces.len());
    for face in &faces {
        let [a, b, c] = face.corners;
        let (pa, pb, pc) = (t.vertices[a], t.vertices[b], t.vertices[c]);
        let p = match face.sides.len() {
            1 => Point([
                (pa.0[0] + pb.0[0] + pc.0[0]) / 3.0,
                (pa.0[1] + pb.0[1] + pc.0[1]) / 3.0,
                (pa.0[2] + pb.0[2] + pc.0[2]) / 3.0,
            ]),
            2 => {
                let i1 = vertices[incenter_vid[face.sides[0].0]];
                let i2 = vertices[incenter_vid[face.sides[1].0]];
                plane_crossing(&i1, &i2, &pa, &pb, &pc).ok_or_else(|| {
                    Error::SplitConstruction(format!(
                        "incenter segment misses face ({a}, {b}, {c}) interior"
                    ))
                })?
            }
            n => {
                return Err(Error::MeshConsistency(format!(
                    "face shared by {n} cells"
                )))
            }
        };
        split_vid.push(vertices.len());
        vertices.push(p);
    }
    let mut face_of_facet = vec![usize::MAX; nc * 4];
    for (f, face) in faces.iter().enumerate() {
        for &(c, k) in &face.sides {
            face_of_facet[c * 4 + k] = f;
        }
    }

    // children: per tet, per facet, one subtet per corner pair of the facet
    let mut cells = Vec::with_capacity(nc * 12 * 4);
    let mut parent = Vec::with_capacity(nc * 12);
    // per face: (side index, corner pair sorted, child id)
    let mut face_children: Vec<Vec<((usize, usize), usize)>> = vec![Vec::new(); faces.len()];
    for c in 0..nc {
        let cell = t.cell(c);
        let ic = incenter_vid[c];
        for k in 0..4 {
            let f = face_of_facet[c * 4 + k];
            let m = split_vid[f];
            let corners: Vec<usize> = (0..4).filter(|&l| l != k).map(|l| cell[l]).collect();
            for r in 0..3 {
                let (ca, cb) = (corners[r], corners[(r + 1) % 3]);
                let child = cells.len() / 4;
                cells.extend_from_slice(&[ca, cb, m, ic]);
                parent.push(c);
                face_children[f].push(((ca.min(cb), ca.max(cb)), child));
            }
        }
    }

    let mesh = Triangulation::from_cells(3, vertices, cells)?;
    mesh.validate(Some(t.total_measure()))?;

    // face split points with their ordered fans
    let mut face_points = Vec::with_capacity(faces.len());
    let mut ct_faces = Vec::with_capacity(faces.len());
    let mut singular_edges = Vec::new();
    let mut n_interior = 0;
    for (f, face) in faces.iter().enumerate() {
        let interior = face.sides.len() == 2;
        let children = &face_children[f];
        // group children by side in their construction batches of three
        let (mut first, mut second): (Vec<_>, Vec<_>) = (
            children[..3].to_vec(),
            if interior { children[3..].to_vec() } else { Vec::new() },
        );
        first.sort_by_key(|&(_, id)| id);
        second.sort_by_key(|&(_, id)| id);
        let fan: Vec<usize>;
        let pairs: Vec<(usize, usize)>;
        if interior {
            n_interior += 1;
            // lowest-cell-id side first
            let (t1, t2) = if first[0].1 <= second[0].1 {
                (first, second)
            } else {
                (second, first)
            };
            // partner in t2 shares the corner pair of the t1 child
            let mut ordered = t1.clone();
            for &(pair, _) in &t1 {
                let partner = t2
                    .iter()
                    .find(|&&(p, _)| p == pair)
                    .expect("interior face sides produce matching corner pairs");
                ordered.push(*partner);
            }
            pairs = t1.iter().map(|&(p, _)| p).collect();
            fan = ordered.iter().map(|&(_, id)| id).collect();
            for j in 0..3 {
                debug_assert!(fan_is_adjacent_chain(&mesh, &[fan[j], fan[j + 3]], false));
            }
        } else {
            pairs = first.iter().map(|&(p, _)| p).collect();
            fan = first.iter().map(|&(_, id)| id).collect();
        }
        let fp_index = face_points.len();
        face_points.push(FaceSplitPoint3d {
            vertex: split_vid[f],
            interior,
            fan: fan.clone(),
        });

        // cyclic corner order g0, g1, g2 with pairs[j] = {g_j, g_{j+1}}
        let shared01 = common_corner(pairs[0], pairs[1]);
        let g0 = other_corner(pairs[0], shared01);
        let g1 = shared01;
        let g2 = other_corner(pairs[1], shared01);
        debug_assert_eq!(
            (g2.min(g0), g2.max(g0)),
            pairs[2],
            "third Clough-Tocher triangle must close the corner cycle"
        );
        let corners = [g0, g1, g2];
        let interior_edges = [
            (split_vid[f], g1),
            (split_vid[f], g2),
            (split_vid[f], g0),
        ];
        let designated = (0..3)
            .min_by_key(|&j| interior_edges[j].1)
            .unwrap();
        ct_faces.push(CloughTocherFace {
            face_point: fp_index,
            corners,
            interior_edges,
            designated,
        });

        // the three singular edges of this face
        for j in 0..3 {
            let edge_fan = if interior {
                vec![fan[j], fan[(j + 1) % 3], fan[(j + 1) % 3 + 3], fan[j + 3]]
            } else {
                vec![fan[j], fan[(j + 1) % 3]]
            };
            if !fan_is_adjacent_chain(&mesh, &edge_fan, interior) {
                return Err(Error::FanOrdering(format!("singular edge {j} of face {f}")));
            }
            singular_edges.push(SingularEdge3d {
                vertices: interior_edges[j],
                interior,
                fan: edge_fan,
                face_point: fp_index,
                local_edge: j,
            });
        }
    }

    let n_boundary = faces.len() - n_interior;
    Ok(SplitMesh {
        mesh,
        kind: SplitKind::WorseyFarin,
        parent,
        singular_points: Vec::new(),
        singular_edges,
        face_points,
        ct_faces,
        n_coarse_cells: nc,
        n_interior_facets: n_interior,
        n_boundary_facets: n_boundary,
    })
}

fn common_corner(a: (usize, usize), b: (usize, usize)) -> usize {
    if a.0 == b.0 || a.0 == b.1 {
        a.0
    } else {
        debug_assert!(a.1 == b.0 || a.1 == b.1);
        a.1
    }
}

fn other_corner(pair: (usize, usize), not: usize) -> usize {
    if pair.0 == not {
        pair.1
    } else {
        pair.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::build_structured_cube;

    #[test]
    fn unit_cube_split_counts() {
        let t = build_structured_cube(1).unwrap();
        let sm = worsey_farin_split(&t).unwrap();
        assert_eq!(sm.mesh.n_cells(), 72);
        let si = sm.face_points.iter().filter(|f| f.interior).count();
        let sb = sm.face_points.len() - si;
        assert_eq!(si, 6);
        assert_eq!(sb, 12);
        // counting identity: 12 |T_h| = 6 |S^I| + 3 |S^B|
        assert_eq!(12 * t.n_cells(), 6 * si + 3 * sb);
        assert_eq!(sm.n_interior_facets, si);
    }

    #[test]
    fn single_tet_boundary_rule() {
        let t = Triangulation::from_cells(
            3,
            vec![
                Point::new3(0.0, 0.0, 0.0),
                Point::new3(1.0, 0.0, 0.0),
                Point::new3(0.0, 1.0, 0.0),
                Point::new3(0.0, 0.0, 1.0),
            ],
            vec![0, 1, 2, 3],
        )
        .unwrap();
        let sm = worsey_farin_split(&t).unwrap();
        assert_eq!(sm.mesh.n_cells(), 12);
        assert_eq!(sm.face_points.len(), 4);
        for (fp, ct) in sm.face_points.iter().zip(&sm.ct_faces) {
            assert!(!fp.interior);
            assert_eq!(fp.fan.len(), 3);
            let p = sm.mesh.vertices[fp.vertex];
            let mut bary = [0.0; 3];
            for d in 0..3 {
                bary[d] = ct
                    .corners
                    .iter()
                    .map(|&v| t.vertices[v].0[d])
                    .sum::<f64>()
                    / 3.0;
            }
            assert!(p.dist(&Point(bary)) < 1e-14);
        }
    }

    #[test]
    fn three_singular_edges_per_face_point() {
        let t = build_structured_cube(1).unwrap();
        let sm = worsey_farin_split(&t).unwrap();
        for (z, fp) in sm.face_points.iter().enumerate() {
            let edges: Vec<_> = sm
                .singular_edges
                .iter()
                .filter(|e| e.face_point == z)
                .collect();
            assert_eq!(edges.len(), 3);
            for e in edges {
                assert_eq!(e.vertices.0, fp.vertex);
                assert_eq!(e.interior, fp.interior);
                assert_eq!(e.fan.len(), if e.interior { 4 } else { 2 });
            }
        }
        assert_eq!(sm.singular_edges.len(), 3 * sm.face_points.len());
    }

    #[test]
    fn fan_is_bijection_onto_split_cells() {
        let t = build_structured_cube(2).unwrap();
        let sm = worsey_farin_split(&t).unwrap();
        let mut owner = vec![0usize; sm.mesh.n_cells()];
        for fp in &sm.face_points {
            for &c in &fp.fan {
                owner[c] += 1;
                assert!(sm.mesh.cell(c).contains(&fp.vertex));
            }
        }
        assert!(owner.iter().all(|&c| c == 1));
    }

    #[test]
    fn interior_labeling_pairs_share_faces_across_sides() {
        let t = build_structured_cube(1).unwrap();
        let sm = worsey_farin_split(&t).unwrap();
        for fp in sm.face_points.iter().filter(|f| f.interior) {
            assert_eq!(fp.fan.len(), 6);
            // first three in one coarse tet, last three in the other
            let t1: Vec<usize> = fp.fan[..3].iter().map(|&c| sm.parent[c]).collect();
            let t2: Vec<usize> = fp.fan[3..].iter().map(|&c| sm.parent[c]).collect();
            assert!(t1.iter().all(|&p| p == t1[0]));
            assert!(t2.iter().all(|&p| p == t2[0]));
            assert_ne!(t1[0], t2[0]);
            for j in 0..3 {
                assert!(fan_is_adjacent_chain(&sm.mesh, &[fp.fan[j], fp.fan[j + 3]], false));
            }
        }
    }

    #[test]
    fn children_partition_parents() {
        let t = build_structured_cube(1).unwrap();
        let sm = worsey_farin_split(&t).unwrap();
        let mut child_measure = vec![0.0; t.n_cells()];
        let mut counts = vec![0usize; t.n_cells()];
        for c in 0..sm.mesh.n_cells() {
            child_measure[sm.parent[c]] += sm.mesh.measure(c);
            counts[sm.parent[c]] += 1;
        }
        for c in 0..t.n_cells() {
            let parent = t.measure(c);
            assert!((child_measure[c] - parent).abs() <= 1e-12 * parent);
            assert_eq!(counts[c], 12);
        }
    }
}
