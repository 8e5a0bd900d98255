//! Coarse simplicial meshes of the unit square / cube, geometric predicates,
//! and plain-text mesh I/O.
//!
//! Points are stored with three coordinates regardless of the mesh dimension;
//! 2D meshes keep the third coordinate at zero.  Cells are stored flat with
//! stride `dim + 1` and are kept positively oriented (constructors swap two
//! vertices when the signed measure comes out negative).

use crate::error::Error;
use crate::Result;
use std::fmt::Write as _;
use std::path::Path;

/// Geometric tolerance for unit-scale predicates.
pub const GEOM_TOL: f64 = 1e-12;

/// Marker for a cell facet on the domain boundary.
pub const BOUNDARY: usize = usize::MAX;

/// A point in at most three dimensions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Point(pub [f64; 3]);

impl Point {
    pub fn new2(x: f64, y: f64) -> Self {
        Point([x, y, 0.0])
    }

    pub fn new3(x: f64, y: f64, z: f64) -> Self {
        Point([x, y, z])
    }

    pub fn sub(&self, other: &Point) -> [f64; 3] {
        [
            self.0[0] - other.0[0],
            self.0[1] - other.0[1],
            self.0[2] - other.0[2],
        ]
    }

    pub fn dist(&self, other: &Point) -> f64 {
        let d = self.sub(other);
        dot(&d, &d).sqrt()
    }
}

pub fn dot(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

pub fn cross(a: &[f64; 3], b: &[f64; 3]) -> [f64; 3] {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

pub fn norm(a: &[f64; 3]) -> f64 {
    dot(a, a).sqrt()
}

/// Simplicial mesh: vertices, flat cell array, facet adjacency, boundary flags.
///
/// Invariants established by the constructors and checked by [`Triangulation::validate`]:
/// every interior facet is shared by exactly two cells, adjacency is symmetric,
/// all cells are positively oriented, and cell measures sum to the domain measure.
#[derive(Debug, Clone, PartialEq)]
pub struct Triangulation {
    pub dim: usize,
    pub vertices: Vec<Point>,
    /// Flattened cell-to-vertex array, stride `dim + 1`.
    cells: Vec<usize>,
    /// For cell `c` and local facet `k` (opposite local vertex `k`), the
    /// neighbor cell id or [`BOUNDARY`].  Flattened, stride `dim + 1`.
    facet_adjacency: Vec<usize>,
    pub boundary_vertex: Vec<bool>,
}

impl Triangulation {
    /// Builds a mesh from raw vertex/cell data, orienting cells positively
    /// and deriving the facet adjacency.
    pub fn from_cells(dim: usize, vertices: Vec<Point>, mut cells: Vec<usize>) -> Result<Self> {
        if dim != 2 && dim != 3 {
            return Err(Error::invalid(format!("dimension must be 2 or 3, got {dim}")));
        }
        let stride = dim + 1;
        if cells.len() % stride != 0 {
            return Err(Error::invalid("cell array length not a multiple of dim+1"));
        }
        let ncells = cells.len() / stride;
        for c in 0..ncells {
            let cell = &mut cells[c * stride..(c + 1) * stride];
            for &v in cell.iter() {
                if v >= vertices.len() {
                    return Err(Error::MeshConsistency(format!(
                        "cell {c} references vertex {v} out of {}",
                        vertices.len()
                    )));
                }
            }
            let mut seen = cell.to_vec();
            seen.sort_unstable();
            seen.dedup();
            if seen.len() != stride {
                return Err(Error::Degenerate {
                    cell: c,
                    msg: "repeated vertex".into(),
                });
            }
            let vol = signed_measure(dim, &vertices, cell);
            if vol.abs() < GEOM_TOL.powi(dim as i32) {
                return Err(Error::Degenerate {
                    cell: c,
                    msg: format!("signed measure {vol:e} below tolerance"),
                });
            }
            if vol < 0.0 {
                cell.swap(0, 1);
            }
        }
        let facet_adjacency = build_adjacency(dim, ncells, &cells)?;
        let mut boundary_vertex = vec![false; vertices.len()];
        for c in 0..ncells {
            for k in 0..stride {
                if facet_adjacency[c * stride + k] == BOUNDARY {
                    for (l, &v) in cells[c * stride..(c + 1) * stride].iter().enumerate() {
                        if l != k {
                            boundary_vertex[v] = true;
                        }
                    }
                }
            }
        }
        Ok(Triangulation {
            dim,
            vertices,
            cells,
            facet_adjacency,
            boundary_vertex,
        })
    }

    pub fn n_cells(&self) -> usize {
        self.cells.len() / (self.dim + 1)
    }

    pub fn n_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn cell(&self, c: usize) -> &[usize] {
        let s = self.dim + 1;
        &self.cells[c * s..(c + 1) * s]
    }

    /// Neighbor across the facet opposite local vertex `k`, or [`BOUNDARY`].
    pub fn neighbor(&self, c: usize, k: usize) -> usize {
        self.facet_adjacency[c * (self.dim + 1) + k]
    }

    pub fn cell_points(&self, c: usize) -> Vec<Point> {
        self.cell(c).iter().map(|&v| self.vertices[v]).collect()
    }

    pub fn measure(&self, c: usize) -> f64 {
        signed_measure(self.dim, &self.vertices, self.cell(c))
    }

    pub fn total_measure(&self) -> f64 {
        (0..self.n_cells()).map(|c| self.measure(c)).sum()
    }

    /// Maximum cell diameter.
    pub fn max_diameter(&self) -> f64 {
        let mut h: f64 = 0.0;
        for c in 0..self.n_cells() {
            let pts = self.cell_points(c);
            for i in 0..pts.len() {
                for j in (i + 1)..pts.len() {
                    h = h.max(pts[i].dist(&pts[j]));
                }
            }
        }
        h
    }

    /// Checks the structural invariants; `expected_measure` additionally
    /// verifies coverage of the domain.
    pub fn validate(&self, expected_measure: Option<f64>) -> Result<()> {
        let s = self.dim + 1;
        for c in 0..self.n_cells() {
            let vol = self.measure(c);
            if vol <= 0.0 {
                return Err(Error::Degenerate {
                    cell: c,
                    msg: format!("nonpositive measure {vol:e}"),
                });
            }
            for k in 0..s {
                let nb = self.neighbor(c, k);
                if nb == BOUNDARY {
                    continue;
                }
                // symmetry: nb must list c across the shared facet
                let back = (0..s).any(|l| self.neighbor(nb, l) == c);
                if !back {
                    return Err(Error::MeshConsistency(format!(
                        "adjacency not symmetric between cells {c} and {nb}"
                    )));
                }
            }
        }
        if let Some(m) = expected_measure {
            let total = self.total_measure();
            if (total - m).abs() > 1e-12 * m.max(1.0) {
                return Err(Error::MeshConsistency(format!(
                    "cell measures sum to {total}, expected {m}"
                )));
            }
        }
        Ok(())
    }
}

/// Signed measure of a simplex (area in 2D, volume in 3D).
pub fn signed_measure(dim: usize, vertices: &[Point], cell: &[usize]) -> f64 {
    let p0 = vertices[cell[0]];
    match dim {
        2 => {
            let a = vertices[cell[1]].sub(&p0);
            let b = vertices[cell[2]].sub(&p0);
            0.5 * (a[0] * b[1] - a[1] * b[0])
        }
        3 => {
            let a = vertices[cell[1]].sub(&p0);
            let b = vertices[cell[2]].sub(&p0);
            let c = vertices[cell[3]].sub(&p0);
            dot(&cross(&a, &b), &c) / 6.0
        }
        _ => unreachable!(),
    }
}

fn build_adjacency(dim: usize, ncells: usize, cells: &[usize]) -> Result<Vec<usize>> {
    let stride = dim + 1;
    // facet key (sorted vertex ids) -> (cell, local facet)
    let mut slots: Vec<([usize; 3], usize, usize)> = Vec::with_capacity(ncells * stride);
    for c in 0..ncells {
        let cell = &cells[c * stride..(c + 1) * stride];
        for k in 0..stride {
            let mut key = [usize::MAX; 3];
            let mut idx = 0;
            for (l, &v) in cell.iter().enumerate() {
                if l != k {
                    key[idx] = v;
                    idx += 1;
                }
            }
            key[..dim].sort_unstable();
            slots.push((key, c, k));
        }
    }
    slots.sort_unstable();
    let mut adjacency = vec![BOUNDARY; ncells * stride];
    let mut i = 0;
    while i < slots.len() {
        let mut j = i + 1;
        while j < slots.len() && slots[j].0 == slots[i].0 {
            j += 1;
        }
        match j - i {
            1 => {} // boundary facet
            2 => {
                let (_, c1, k1) = slots[i];
                let (_, c2, k2) = slots[i + 1];
                adjacency[c1 * stride + k1] = c2;
                adjacency[c2 * stride + k2] = c1;
            }
            n => {
                return Err(Error::MeshConsistency(format!(
                    "facet {:?} shared by {n} cells",
                    &slots[i].0[..dim]
                )))
            }
        }
        i = j;
    }
    Ok(adjacency)
}

/// Unit square split into `n x n` subsquares, each cut by the diagonal from
/// the lower-left to the upper-right corner; `2n^2` triangles.
pub fn build_structured_square(n: usize) -> Result<Triangulation> {
    if n == 0 {
        return Err(Error::invalid("subdivision count n must be >= 1"));
    }
    let np = n + 1;
    let mut vertices = Vec::with_capacity(np * np);
    for j in 0..np {
        for i in 0..np {
            vertices.push(Point::new2(i as f64 / n as f64, j as f64 / n as f64));
        }
    }
    let vid = |i: usize, j: usize| j * np + i;
    let mut cells = Vec::with_capacity(2 * n * n * 3);
    for j in 0..n {
        for i in 0..n {
            let (a, b, c, d) = (vid(i, j), vid(i + 1, j), vid(i + 1, j + 1), vid(i, j + 1));
            cells.extend_from_slice(&[a, b, c]);
            cells.extend_from_slice(&[a, c, d]);
        }
    }
    Triangulation::from_cells(2, vertices, cells)
}

/// Unit cube split into `n^3` subcubes, each split into six tetrahedra by the
/// Kuhn rule (all sharing the subcube main diagonal); `6n^3` tets with
/// consistent facet adjacency across subcube boundaries.
pub fn build_structured_cube(n: usize) -> Result<Triangulation> {
    if n == 0 {
        return Err(Error::invalid("subdivision count n must be >= 1"));
    }
    let np = n + 1;
    let mut vertices = Vec::with_capacity(np * np * np);
    for k in 0..np {
        for j in 0..np {
            for i in 0..np {
                vertices.push(Point::new3(
                    i as f64 / n as f64,
                    j as f64 / n as f64,
                    k as f64 / n as f64,
                ));
            }
        }
    }
    let vid = |i: usize, j: usize, k: usize| (k * np + j) * np + i;
    // The six permutations of coordinate orderings; each gives the tet
    // 0 -> e_{p0} -> e_{p0}+e_{p1} -> (1,1,1) within the subcube.
    const PERMS: [[usize; 3]; 6] = [
        [0, 1, 2],
        [0, 2, 1],
        [1, 0, 2],
        [1, 2, 0],
        [2, 0, 1],
        [2, 1, 0],
    ];
    let mut cells = Vec::with_capacity(6 * n * n * n * 4);
    for k in 0..n {
        for j in 0..n {
            for i in 0..n {
                let base = [i, j, k];
                for perm in PERMS {
                    let mut corner = base;
                    let v0 = vid(corner[0], corner[1], corner[2]);
                    corner[perm[0]] += 1;
                    let v1 = vid(corner[0], corner[1], corner[2]);
                    corner[perm[1]] += 1;
                    let v2 = vid(corner[0], corner[1], corner[2]);
                    corner[perm[2]] += 1;
                    let v3 = vid(corner[0], corner[1], corner[2]);
                    cells.extend_from_slice(&[v0, v1, v2, v3]);
                }
            }
        }
    }
    Triangulation::from_cells(3, vertices, cells)
}

/// Incenter of a simplex: the facet-measure-weighted average of its vertices,
/// equidistant from every facet.
pub fn incenter(t: &Triangulation, c: usize) -> Result<Point> {
    let cell = t.cell(c);
    let vol = signed_measure(t.dim, &t.vertices, cell);
    if vol.abs() < GEOM_TOL.powi(t.dim as i32) {
        return Err(Error::Degenerate {
            cell: c,
            msg: "incenter of a degenerate simplex".into(),
        });
    }
    let stride = t.dim + 1;
    let mut weights = vec![0.0; stride];
    for k in 0..stride {
        // facet opposite vertex k
        let facet: Vec<usize> = (0..stride).filter(|&l| l != k).map(|l| cell[l]).collect();
        weights[k] = facet_measure(t.dim, &t.vertices, &facet);
    }
    let total: f64 = weights.iter().sum();
    let mut coords = [0.0; 3];
    for k in 0..stride {
        let p = t.vertices[cell[k]];
        for d in 0..3 {
            coords[d] += weights[k] * p.0[d] / total;
        }
    }
    Ok(Point(coords))
}

fn facet_measure(dim: usize, vertices: &[Point], facet: &[usize]) -> f64 {
    match dim {
        2 => vertices[facet[0]].dist(&vertices[facet[1]]),
        3 => {
            let a = vertices[facet[1]].sub(&vertices[facet[0]]);
            let b = vertices[facet[2]].sub(&vertices[facet[0]]);
            0.5 * norm(&cross(&a, &b))
        }
        _ => unreachable!(),
    }
}

/// Barycentric coordinates of `p` with respect to cell `c`.
pub fn barycentric(t: &Triangulation, c: usize, p: &Point) -> Vec<f64> {
    let cell = t.cell(c);
    let vol = signed_measure(t.dim, &t.vertices, cell);
    let stride = t.dim + 1;
    let mut coords = vec![0.0; stride];
    let mut ids = cell.to_vec();
    for k in 0..stride {
        // replace vertex k by p and take the measure ratio
        let saved = ids[k];
        let mut verts = t.vertices.clone();
        verts.push(*p);
        ids[k] = verts.len() - 1;
        coords[k] = signed_measure(t.dim, &verts, &ids) / vol;
        ids[k] = saved;
    }
    coords
}

// ---------------------------------------------------------------------------
// plain-text mesh I/O
//
// line 1: `dim nv nc`
// then nv lines of dim coordinates (17 significant digits)
// then nc lines of dim+1 zero-based vertex indices
// ---------------------------------------------------------------------------

pub fn format_mesh(t: &Triangulation) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{} {} {}", t.dim, t.n_vertices(), t.n_cells());
    for v in &t.vertices {
        let coords: Vec<String> = (0..t.dim).map(|d| format!("{:.16e}", v.0[d])).collect();
        let _ = writeln!(out, "{}", coords.join(" "));
    }
    for c in 0..t.n_cells() {
        let ids: Vec<String> = t.cell(c).iter().map(|v| v.to_string()).collect();
        let _ = writeln!(out, "{}", ids.join(" "));
    }
    out
}

pub fn write_mesh(t: &Triangulation, path: &Path) -> Result<()> {
    std::fs::write(path, format_mesh(t))?;
    Ok(())
}

pub fn parse_mesh(text: &str) -> Result<Triangulation> {
    let mut lines = text.lines().enumerate();
    let (_, header) = lines.next().ok_or(Error::MeshFormat {
        line: 1,
        msg: "missing header".into(),
    })?;
    let head: Vec<&str> = header.split_whitespace().collect();
    if head.len() != 3 {
        return Err(Error::MeshFormat {
            line: 1,
            msg: format!("expected `dim nv nc`, got {header:?}"),
        });
    }
    let parse_count = |s: &str, what: &str| -> Result<usize> {
        s.parse().map_err(|_| Error::MeshFormat {
            line: 1,
            msg: format!("bad {what} {s:?}"),
        })
    };
    let dim = parse_count(head[0], "dimension")?;
    if dim != 2 && dim != 3 {
        return Err(Error::MeshFormat {
            line: 1,
            msg: format!("dimension must be 2 or 3, got {dim}"),
        });
    }
    let nv = parse_count(head[1], "vertex count")?;
    let nc = parse_count(head[2], "cell count")?;

    let mut vertices = Vec::with_capacity(nv);
    for _ in 0..nv {
        let (idx, line) = lines.next().ok_or_else(|| Error::MeshFormat {
            line: nv + 1,
            msg: "unexpected end of file in vertex block".into(),
        })?;
        let lineno = idx + 1;
        let parts: Vec<&str> = line.split_whitespace().collect();
        if parts.len() != dim {
            return Err(Error::MeshFormat {
                line: lineno,
                msg: format!("expected {dim} coordinates, got {}", parts.len()),
            });
        }
        let mut coords = [0.0f64; 3];
        for (d, part) in parts.iter().enumerate() {
            coords[d] = part.parse().map_err(|_| Error::MeshFormat {
                line: lineno,
                msg: format!("bad coordinate {part:?}"),
            })?;
            if !coords[d].is_finite() {
                return Err(Error::MeshFormat {
                    line: lineno,
                    msg: "non-finite coordinate".into(),
                });
            }
        }
        vertices.push(Point(coords));
    }

    let mut cells = Vec::with_capacity(nc * (dim + 1));
    for _ in 0..nc {
        let (idx, line) = lines.next().ok_or_else(|| Error::MeshFormat {
            line: nv + nc + 1,
            msg: "unexpected end of file in cell block".into(),
        })?;
        let lineno = idx + 1;
        let parts: Vec<&str> = line.split_whitespace().collect();
        if parts.len() != dim + 1 {
            return Err(Error::MeshFormat {
                line: lineno,
                msg: format!("expected {} vertex indices, got {}", dim + 1, parts.len()),
            });
        }
        for part in parts {
            let v: usize = part.parse().map_err(|_| Error::MeshFormat {
                line: lineno,
                msg: format!("bad vertex index {part:?}"),
            })?;
            if v >= nv {
                return Err(Error::MeshFormat {
                    line: lineno,
                    msg: format!("vertex index {v} out of range (nv = {nv})"),
                });
            }
            cells.push(v);
        }
        // reject degenerate cells with the offending line number
        let c = cells.len() / (dim + 1) - 1;
        let vol = signed_measure(dim, &vertices, &cells[c * (dim + 1)..]);
        if vol.abs() < GEOM_TOL.powi(dim as i32) {
            return Err(Error::MeshFormat {
                line: lineno,
                msg: "degenerate cell".into(),
            });
        }
    }
    Triangulation::from_cells(dim, vertices, cells)
}

pub fn read_mesh(path: &Path) -> Result<Triangulation> {
    let text = std::fs::read_to_string(path)?;
    parse_mesh(&text)
}
