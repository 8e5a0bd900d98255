//! Manufactured Stokes solutions on the unit square / cube.
//!
//! Each solution ships u, grad u, p and the matching source
//! f = -nu * lap(u) + grad(p), with div u = 0 pointwise and u = 0 on the whole
//! boundary, so Dirichlet elimination needs no lifted data.  The pressures
//! have zero mean analytically.

use crate::mesh::Point;
use std::f64::consts::PI;
use std::sync::Arc;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProblemId {
    /// 2D trigonometric vortex pair, p = cos(pi x) cos(pi y).
    Ps2d,
    /// 3D variant with a z cutoff, p = cos(pi x) cos(pi y) cos(pi z).
    Wf3d,
    /// 3D curl of a polynomial potential, p = (1/9) d^2 g / dx dy.
    Wf3dCurl,
}

impl ProblemId {
    pub fn dim(self) -> usize {
        match self {
            ProblemId::Ps2d => 2,
            _ => 3,
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "ps2d" => Some(ProblemId::Ps2d),
            "wf3d" => Some(ProblemId::Wf3d),
            "wf3d-curl" | "wf3d_curl" => Some(ProblemId::Wf3dCurl),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            ProblemId::Ps2d => "ps2d",
            ProblemId::Wf3d => "wf3d",
            ProblemId::Wf3dCurl => "wf3d-curl",
        }
    }
}

type VecFn = Arc<dyn Fn(&Point) -> [f64; 3] + Send + Sync>;
type GradFn = Arc<dyn Fn(&Point) -> [[f64; 3]; 3] + Send + Sync>;
type ScalarFn = Arc<dyn Fn(&Point) -> f64 + Send + Sync>;

#[derive(Clone)]
pub struct ManufacturedSolution {
    pub id: ProblemId,
    pub dim: usize,
    pub nu: f64,
    velocity: VecFn,
    /// grad[i][j] = d u_i / d x_j
    gradient: GradFn,
    pressure: ScalarFn,
    source: VecFn,
}

impl ManufacturedSolution {
    pub fn new(id: ProblemId, nu: f64) -> Self {
        match id {
            ProblemId::Ps2d => ps2d(nu),
            ProblemId::Wf3d => wf3d(nu),
            ProblemId::Wf3dCurl => wf3d_curl(nu),
        }
    }

    pub fn velocity(&self, p: &Point) -> [f64; 3] {
        (self.velocity)(p)
    }

    pub fn gradient(&self, p: &Point) -> [[f64; 3]; 3] {
        (self.gradient)(p)
    }

    pub fn pressure(&self, p: &Point) -> f64 {
        (self.pressure)(p)
    }

    pub fn source(&self, p: &Point) -> [f64; 3] {
        (self.source)(p)
    }

    pub fn divergence(&self, p: &Point) -> f64 {
        let g = self.gradient(p);
        g[0][0] + g[1][1] + g[2][2]
    }
}

fn ps2d(nu: f64) -> ManufacturedSolution {
    let velocity: VecFn = Arc::new(|p: &Point| {
        let (x, y) = (p.0[0], p.0[1]);
        [
            PI * (PI * x).sin().powi(2) * (2.0 * PI * y).sin(),
            -PI * (PI * y).sin().powi(2) * (2.0 * PI * x).sin(),
            0.0,
        ]
    });
    let gradient: GradFn = Arc::new(|p: &Point| {
        let (x, y) = (p.0[0], p.0[1]);
        let pi2 = PI * PI;
        let mut g = [[0.0; 3]; 3];
        g[0][0] = pi2 * (2.0 * PI * x).sin() * (2.0 * PI * y).sin();
        g[0][1] = 2.0 * pi2 * (PI * x).sin().powi(2) * (2.0 * PI * y).cos();
        g[1][0] = -2.0 * pi2 * (PI * y).sin().powi(2) * (2.0 * PI * x).cos();
        g[1][1] = -pi2 * (2.0 * PI * y).sin() * (2.0 * PI * x).sin();
        g
    });
    let pressure: ScalarFn =
        Arc::new(|p: &Point| (PI * p.0[0]).cos() * (PI * p.0[1]).cos());
    let source: VecFn = Arc::new(move |p: &Point| {
        let (x, y) = (p.0[0], p.0[1]);
        let pi3 = PI * PI * PI;
        let lap_u1 = 2.0 * pi3 * (2.0 * PI * y).sin() * (2.0 * (2.0 * PI * x).cos() - 1.0);
        let lap_u2 = -2.0 * pi3 * (2.0 * PI * x).sin() * (2.0 * (2.0 * PI * y).cos() - 1.0);
        let dp_dx = -PI * (PI * x).sin() * (PI * y).cos();
        let dp_dy = -PI * (PI * x).cos() * (PI * y).sin();
        [-nu * lap_u1 + dp_dx, -nu * lap_u2 + dp_dy, 0.0]
    });
    ManufacturedSolution {
        id: ProblemId::Ps2d,
        dim: 2,
        nu,
        velocity,
        gradient,
        pressure,
        source,
    }
}

// The 2D vortex extended to 3D with a sin^2(pi z) cutoff so the velocity
// vanishes on the whole cube boundary (the trace space needs u = 0 on all six
// faces for the divergence constraints to close).
fn wf3d(nu: f64) -> ManufacturedSolution {
    let velocity: VecFn = Arc::new(|p: &Point| {
        let (x, y, z) = (p.0[0], p.0[1], p.0[2]);
        let cz = (PI * z).sin().powi(2);
        [
            PI * (PI * x).sin().powi(2) * (2.0 * PI * y).sin() * cz,
            -PI * (PI * y).sin().powi(2) * (2.0 * PI * x).sin() * cz,
            0.0,
        ]
    });
    let gradient: GradFn = Arc::new(|p: &Point| {
        let (x, y, z) = (p.0[0], p.0[1], p.0[2]);
        let pi2 = PI * PI;
        let cz = (PI * z).sin().powi(2);
        let dz = (2.0 * PI * z).sin();
        let mut g = [[0.0; 3]; 3];
        g[0][0] = pi2 * (2.0 * PI * x).sin() * (2.0 * PI * y).sin() * cz;
        g[0][1] = 2.0 * pi2 * (PI * x).sin().powi(2) * (2.0 * PI * y).cos() * cz;
        g[0][2] = pi2 * (PI * x).sin().powi(2) * (2.0 * PI * y).sin() * dz;
        g[1][0] = -2.0 * pi2 * (PI * y).sin().powi(2) * (2.0 * PI * x).cos() * cz;
        g[1][1] = -pi2 * (2.0 * PI * y).sin() * (2.0 * PI * x).sin() * cz;
        g[1][2] = -pi2 * (PI * y).sin().powi(2) * (2.0 * PI * x).sin() * dz;
        g
    });
    let pressure: ScalarFn = Arc::new(|p: &Point| {
        (PI * p.0[0]).cos() * (PI * p.0[1]).cos() * (PI * p.0[2]).cos()
    });
    let source: VecFn = Arc::new(move |p: &Point| {
        let (x, y, z) = (p.0[0], p.0[1], p.0[2]);
        let pi3 = PI * PI * PI;
        let sx2 = (PI * x).sin().powi(2);
        let sy2 = (PI * y).sin().powi(2);
        let sz2 = (PI * z).sin().powi(2);
        let lap_u1 = 2.0
            * pi3
            * (2.0 * PI * y).sin()
            * ((2.0 * PI * x).cos() * sz2 - 2.0 * sx2 * sz2 + sx2 * (2.0 * PI * z).cos());
        let lap_u2 = -2.0
            * pi3
            * (2.0 * PI * x).sin()
            * ((2.0 * PI * y).cos() * sz2 - 2.0 * sy2 * sz2 + sy2 * (2.0 * PI * z).cos());
        let dp = [
            -PI * (PI * x).sin() * (PI * y).cos() * (PI * z).cos(),
            -PI * (PI * x).cos() * (PI * y).sin() * (PI * z).cos(),
            -PI * (PI * x).cos() * (PI * y).cos() * (PI * z).sin(),
        ];
        [-nu * lap_u1 + dp[0], -nu * lap_u2 + dp[1], dp[2]]
    });
    ManufacturedSolution {
        id: ProblemId::Wf3d,
        dim: 3,
        nu,
        velocity,
        gradient,
        pressure,
        source,
    }
}

// a(t) = (t - t^2)^2 and its derivatives; g = 2^12 a(x) a(y) a(z),
// u = curl (0, g, g) = (g_y - g_z, -g_x, g_x).
fn poly_a(t: f64) -> f64 {
    let w = t - t * t;
    w * w
}

fn poly_da(t: f64) -> f64 {
    2.0 * (t - t * t) * (1.0 - 2.0 * t)
}

fn poly_d2a(t: f64) -> f64 {
    2.0 * (1.0 - 6.0 * t + 6.0 * t * t)
}

fn poly_d3a(t: f64) -> f64 {
    12.0 * (2.0 * t - 1.0)
}

fn wf3d_curl(nu: f64) -> ManufacturedSolution {
    const SCALE: f64 = 4096.0; // 2^12
    let velocity: VecFn = Arc::new(|p: &Point| {
        let (x, y, z) = (p.0[0], p.0[1], p.0[2]);
        let (ax, ay, az) = (poly_a(x), poly_a(y), poly_a(z));
        let (dax, day, daz) = (poly_da(x), poly_da(y), poly_da(z));
        [
            SCALE * (ax * day * az - ax * ay * daz),
            -SCALE * dax * ay * az,
            SCALE * dax * ay * az,
        ]
    });
    let gradient: GradFn = Arc::new(|p: &Point| {
        let (x, y, z) = (p.0[0], p.0[1], p.0[2]);
        let (ax, ay, az) = (poly_a(x), poly_a(y), poly_a(z));
        let (dax, day, daz) = (poly_da(x), poly_da(y), poly_da(z));
        let (d2ax, d2ay, d2az) = (poly_d2a(x), poly_d2a(y), poly_d2a(z));
        let mut g = [[0.0; 3]; 3];
        g[0][0] = SCALE * (dax * day * az - dax * ay * daz);
        g[0][1] = SCALE * (ax * d2ay * az - ax * day * daz);
        g[0][2] = SCALE * (ax * day * daz - ax * ay * d2az);
        g[1][0] = -SCALE * d2ax * ay * az;
        g[1][1] = -SCALE * dax * day * az;
        g[1][2] = -SCALE * dax * ay * daz;
        g[2][0] = SCALE * d2ax * ay * az;
        g[2][1] = SCALE * dax * day * az;
        g[2][2] = SCALE * dax * ay * daz;
        g
    });
    let pressure: ScalarFn = Arc::new(|p: &Point| {
        SCALE / 9.0 * poly_da(p.0[0]) * poly_da(p.0[1]) * poly_a(p.0[2])
    });
    let source: VecFn = Arc::new(move |p: &Point| {
        let (x, y, z) = (p.0[0], p.0[1], p.0[2]);
        let (ax, ay, az) = (poly_a(x), poly_a(y), poly_a(z));
        let (dax, day, daz) = (poly_da(x), poly_da(y), poly_da(z));
        let (d2ax, d2ay, d2az) = (poly_d2a(x), poly_d2a(y), poly_d2a(z));
        let (d3ax, d3ay, d3az) = (poly_d3a(x), poly_d3a(y), poly_d3a(z));
        let lap_u1 = SCALE
            * ((d2ax * day * az - d2ax * ay * daz)
                + (ax * d3ay * az - ax * d2ay * daz)
                + (ax * day * d2az - ax * ay * d3az));
        let lap_u2 = -SCALE * (d3ax * ay * az + dax * d2ay * az + dax * ay * d2az);
        let lap_u3 = -lap_u2;
        let dp = [
            SCALE / 9.0 * d2ax * day * az,
            SCALE / 9.0 * dax * d2ay * az,
            SCALE / 9.0 * dax * day * daz,
        ];
        [
            -nu * lap_u1 + dp[0],
            -nu * lap_u2 + dp[1],
            -nu * lap_u3 + dp[2],
        ]
    });
    ManufacturedSolution {
        id: ProblemId::Wf3dCurl,
        dim: 3,
        nu,
        velocity,
        gradient,
        pressure,
        source,
    }
}
