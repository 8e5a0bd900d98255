//! Powell-Sabin refinement: each triangle is split into six subtriangles
//! through its incenter and the split points on its edges.

use super::{
    canonicalize_cycle, fan_is_adjacent_chain, telemetry, SingularPoint2d, SplitKind, SplitMesh,
};
use crate::error::Error;
use crate::mesh::{incenter, Point, Triangulation};
use crate::Result;
use std::sync::atomic::Ordering;

struct Edge {
    endpoints: (usize, usize),
    /// (cell, local facet) pairs; one entry for boundary edges.
    sides: Vec<(usize, usize)>,
}

fn collect_edges(t: &Triangulation) -> Vec<Edge> {
    let mut edges: Vec<Edge> = Vec::new();
    let mut seen: std::collections::HashMap<(usize, usize), usize> =
        std::collections::HashMap::new();
    for c in 0..t.n_cells() {
        let cell = t.cell(c);
        for k in 0..3 {
            let (a, b) = (cell[(k + 1) % 3], cell[(k + 2) % 3]);
            let key = (a.min(b), a.max(b));
            match seen.get(&key) {
                Some(&e) => edges[e].sides.push((c, k)),
                None => {
                    seen.insert(key, edges.len());
                    edges.push(Edge {
                        endpoints: key,
                        sides: vec![(c, k)],
                    });
                }
            }
        }
    }
    edges
}

/// Intersection of the segment i1 -> i2 with the segment a -> b; returns the
/// parameter s along a -> b if both crossings are strictly interior.
fn segment_crossing(i1: &Point, i2: &Point, a: &Point, b: &Point) -> Option<f64> {
    let e = [b.0[0] - a.0[0], b.0[1] - a.0[1]];
    let g = [i2.0[0] - i1.0[0], i2.0[1] - i1.0[1]];
    let r = [i1.0[0] - a.0[0], i1.0[1] - a.0[1]];
    let cross2 = |u: &[f64; 2], v: &[f64; 2]| u[0] * v[1] - u[1] * v[0];
    let denom = cross2(&e, &g);
    if denom.abs() < 1e-14 {
        return None;
    }
    let s = cross2(&r, &g) / denom;
    let tt = cross2(&r, &e) / denom;
    let eps = 1e-12;
    if s <= eps || s >= 1.0 - eps || tt <= eps || tt >= 1.0 - eps {
        return None;
    }
    Some(s)
}

pub fn powell_sabin_split(t: &Triangulation) -> Result<SplitMesh> {
    if t.dim != 2 {
        return Err(Error::invalid("powell_sabin_split requires a 2D mesh"));
    }
    telemetry::PS_SPLITS.fetch_add(1, Ordering::Relaxed);

    let nc = t.n_cells();
    let mut vertices = t.vertices.clone();

    // incenter vertex per coarse cell
    let mut incenter_vid = Vec::with_capacity(nc);
    for c in 0..nc {
        incenter_vid.push(vertices.len());
        vertices.push(incenter(t, c)?);
    }

    // split point per coarse edge
    let edges = collect_edges(t);
    let mut split_vid = Vec::with_capacity(edges.len());
    for edge in &edges {
        let (a, b) = edge.endpoints;
        let (pa, pb) = (t.vertices[a], t.vertices[b]);
        let p = match edge.sides.len() {
            1 => Point::new2(0.5 * (pa.0[0] + pb.0[0]), 0.5 * (pa.0[1] + pb.0[1])),
            2 => {
                let i1 = vertices[incenter_vid[edge.sides[0].0]];
                let i2 = vertices[incenter_vid[edge.sides[1].0]];
                let s = segment_crossing(&i1, &i2, &pa, &pb).ok_or_else(|| {
                    Error::SplitConstruction(format!(
                        "incenter segment misses edge ({a}, {b}) interior"
                    ))
                })?;
                Point::new2(
                    pa.0[0] + s * (pb.0[0] - pa.0[0]),
                    pa.0[1] + s * (pb.0[1] - pa.0[1]),
                )
            }
            n => {
                return Err(Error::MeshConsistency(format!(
                    "edge shared by {n} cells"
                )))
            }
        };
        split_vid.push(vertices.len());
        vertices.push(p);
    }
    let mut edge_of_facet = vec![usize::MAX; nc * 3];
    for (e, edge) in edges.iter().enumerate() {
        for &(c, k) in &edge.sides {
            edge_of_facet[c * 3 + k] = e;
        }
    }

    // children: per coarse cell, per facet k, the two triangles
    // (v_{k+1}, m_k, I) and (m_k, v_{k+2}, I); both positively oriented.
    let mut cells = Vec::with_capacity(nc * 6 * 3);
    let mut parent = Vec::with_capacity(nc * 6);
    // per (edge, side) the two child ids (child touching endpoints.0, child
    // touching endpoints.1)
    let mut edge_children: Vec<Vec<(usize, usize)>> = vec![Vec::new(); edges.len()];
    for c in 0..nc {
        let cell = t.cell(c);
        let ic = incenter_vid[c];
        for k in 0..3 {
            let (va, vb) = (cell[(k + 1) % 3], cell[(k + 2) % 3]);
            let e = edge_of_facet[c * 3 + k];
            let m = split_vid[e];
            let first = cells.len() / 3;
            cells.extend_from_slice(&[va, m, ic]);
            cells.extend_from_slice(&[m, vb, ic]);
            parent.push(c);
            parent.push(c);
            let (child_a, child_b) = if edges[e].endpoints.0 == va {
                (first, first + 1)
            } else {
                (first + 1, first)
            };
            edge_children[e].push((child_a, child_b));
        }
    }

    let mesh = Triangulation::from_cells(2, vertices, cells)?;
    mesh.validate(Some(t.total_measure()))?;

    // singular points: one per coarse edge, fan ordered around the vertex
    let mut singular_points = Vec::with_capacity(edges.len());
    let mut n_interior = 0;
    for (e, edge) in edges.iter().enumerate() {
        let interior = edge.sides.len() == 2;
        let mut fan = match edge_children[e].as_slice() {
            [(a1, b1)] => vec![*a1, *b1],
            [(a1, b1), (a2, b2)] => vec![*a1, *b1, *b2, *a2],
            _ => unreachable!(),
        };
        if interior {
            canonicalize_cycle(&mut fan);
            n_interior += 1;
        } else {
            fan.sort_unstable();
        }
        if !fan_is_adjacent_chain(&mesh, &fan, interior) {
            return Err(Error::FanOrdering(format!("singular point {e}")));
        }
        singular_points.push(SingularPoint2d {
            vertex: split_vid[e],
            interior,
            fan,
        });
    }

    let n_boundary = edges.len() - n_interior;
    Ok(SplitMesh {
        mesh,
        kind: SplitKind::PowellSabin,
        parent,
        singular_points,
        singular_edges: Vec::new(),
        face_points: Vec::new(),
        ct_faces: Vec::new(),
        n_coarse_cells: nc,
        n_interior_facets: n_interior,
        n_boundary_facets: n_boundary,
    })
}
