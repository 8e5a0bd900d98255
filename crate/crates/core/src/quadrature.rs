//! Quadrature on reference simplices.
//!
//! The rules are Duffy-collapsed tensor Gauss-Legendre products.  On the
//! reference triangle the map is x = u, y = v(1-u) with Jacobian (1-u); a
//! monomial x^a y^b with a+b <= 6 pulls back to degree a+b+1 <= 7 in u and
//! b <= 6 in v, so a 4x4 Gauss product (degree 7 per axis) is exact for total
//! degree 6.  On the reference tetrahedron x = u, y = v(1-u),
//! z = w(1-u)(1-v) with Jacobian (1-u)^2 (1-v) needs degrees (8, 7, 6), so a
//! 5x4x4 product suffices.  All weights are positive.

use crate::mesh::{Point, Triangulation};

/// Quadrature points in barycentric coordinates with weights summing to the
/// reference simplex measure (1/2 for triangles, 1/6 for tetrahedra).
#[derive(Debug, Clone)]
pub struct QuadratureRule {
    pub dim: usize,
    /// Barycentric coordinates, `dim + 1` entries used per point.
    pub points: Vec<[f64; 4]>,
    pub weights: Vec<f64>,
}

/// Gauss-Legendre nodes/weights on [0,1] for n = 4 and n = 5 (closed forms).
fn gauss_legendre_01(n: usize) -> (Vec<f64>, Vec<f64>) {
    let (nodes, weights): (Vec<f64>, Vec<f64>) = match n {
        4 => {
            let a = (3.0 - 2.0 * (6.0f64 / 5.0).sqrt()).sqrt() / 7.0f64.sqrt();
            let b = (3.0 + 2.0 * (6.0f64 / 5.0).sqrt()).sqrt() / 7.0f64.sqrt();
            let wa = (18.0 + 30.0f64.sqrt()) / 36.0;
            let wb = (18.0 - 30.0f64.sqrt()) / 36.0;
            (vec![-b, -a, a, b], vec![wb, wa, wa, wb])
        }
        5 => {
            let a = (5.0 - 2.0 * (10.0f64 / 7.0).sqrt()).sqrt() / 3.0;
            let b = (5.0 + 2.0 * (10.0f64 / 7.0).sqrt()).sqrt() / 3.0;
            let wa = (322.0 + 13.0 * 70.0f64.sqrt()) / 900.0;
            let wb = (322.0 - 13.0 * 70.0f64.sqrt()) / 900.0;
            (vec![-b, -a, 0.0, a, b], vec![wb, wa, 128.0 / 225.0, wa, wb])
        }
        _ => unreachable!("only n = 4, 5 are used"),
    };
    (
        nodes.iter().map(|x| 0.5 * (x + 1.0)).collect(),
        weights.iter().map(|w| 0.5 * w).collect(),
    )
}

impl QuadratureRule {
    /// Degree-6 rule on the reference triangle (16 points).
    pub fn triangle_degree6() -> Self {
        let (xu, wu) = gauss_legendre_01(4);
        let (xv, wv) = gauss_legendre_01(4);
        let mut points = Vec::with_capacity(16);
        let mut weights = Vec::with_capacity(16);
        for (u, cu) in xu.iter().zip(&wu) {
            for (v, cv) in xv.iter().zip(&wv) {
                let x = *u;
                let y = v * (1.0 - u);
                points.push([1.0 - x - y, x, y, 0.0]);
                weights.push(cu * cv * (1.0 - u));
            }
        }
        QuadratureRule { dim: 2, points, weights }
    }

    /// Degree-6 rule on the reference tetrahedron (80 points).
    pub fn tetrahedron_degree6() -> Self {
        let (xu, wu) = gauss_legendre_01(5);
        let (xv, wv) = gauss_legendre_01(4);
        let (xw, ww) = gauss_legendre_01(4);
        let mut points = Vec::with_capacity(80);
        let mut weights = Vec::with_capacity(80);
        for (u, cu) in xu.iter().zip(&wu) {
            for (v, cv) in xv.iter().zip(&wv) {
                for (w, cw) in xw.iter().zip(&ww) {
                    let x = *u;
                    let y = v * (1.0 - u);
                    let z = w * (1.0 - u) * (1.0 - v);
                    points.push([1.0 - x - y - z, x, y, z]);
                    weights.push(cu * cv * cw * (1.0 - u) * (1.0 - u) * (1.0 - v));
                }
            }
        }
        QuadratureRule { dim: 3, points, weights }
    }

    pub fn for_dim(dim: usize) -> Self {
        match dim {
            2 => Self::triangle_degree6(),
            3 => Self::tetrahedron_degree6(),
            _ => unreachable!(),
        }
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    /// Physical location of quadrature point `q` in cell `c`.
    pub fn physical_point(&self, t: &Triangulation, c: usize, q: usize) -> Point {
        let cell = t.cell(c);
        let mut coords = [0.0; 3];
        for (k, &v) in cell.iter().enumerate() {
            let lambda = self.points[q][k];
            for d in 0..3 {
                coords[d] += lambda * t.vertices[v].0[d];
            }
        }
        Point(coords)
    }

    /// Physical weight of quadrature point `q` in a cell of measure `measure`.
    pub fn physical_weight(&self, measure: f64, q: usize) -> f64 {
        let ref_measure = if self.dim == 2 { 0.5 } else { 1.0 / 6.0 };
        self.weights[q] * measure / ref_measure
    }
}
