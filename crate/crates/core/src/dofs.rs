//! Degree-of-freedom maps for the linear-velocity / constant-pressure pair.
//!
//! Velocity: `d` components per split-mesh vertex; Dirichlet (boundary)
//! vertices are excluded from the free set.  Raw pressure: one dof per split
//! cell, numbered by the sigma labeling (features in order, fan position
//! within each feature), which is what the column operations act on.

use crate::split::SplitMesh;

pub const DIRICHLET: usize = usize::MAX;

#[derive(Debug, Clone)]
pub struct DofMap {
    pub dim: usize,
    /// Free velocity dof id per (vertex, component); `DIRICHLET` on the boundary.
    velocity: Vec<usize>,
    pub n_velocity: usize,
    /// sigma(z, j): raw pressure dof of each split cell.
    pub pressure_of_cell: Vec<usize>,
    /// Inverse map: split cell of each raw pressure dof.
    pub cell_of_pressure: Vec<usize>,
    /// Pressure dofs of feature z occupy `feature_offsets[z]..feature_offsets[z+1]`.
    pub feature_offsets: Vec<usize>,
    pub n_pressure_raw: usize,
}

impl DofMap {
    pub fn new(sm: &SplitMesh) -> Self {
        let dim = sm.dim();
        let mesh = &sm.mesh;
        let mut velocity = vec![DIRICHLET; mesh.n_vertices() * dim];
        let mut n_velocity = 0;
        for v in 0..mesh.n_vertices() {
            if mesh.boundary_vertex[v] {
                continue;
            }
            for c in 0..dim {
                velocity[v * dim + c] = n_velocity;
                n_velocity += 1;
            }
        }

        let n_cells = mesh.n_cells();
        let mut pressure_of_cell = vec![usize::MAX; n_cells];
        let mut cell_of_pressure = vec![usize::MAX; n_cells];
        let mut feature_offsets = Vec::with_capacity(sm.n_features() + 1);
        feature_offsets.push(0);
        let mut next = 0;
        for z in 0..sm.n_features() {
            for &cell in sm.feature_fan(z) {
                debug_assert_eq!(pressure_of_cell[cell], usize::MAX, "fan bijection");
                pressure_of_cell[cell] = next;
                cell_of_pressure[next] = cell;
                next += 1;
            }
            feature_offsets.push(next);
        }
        debug_assert_eq!(next, n_cells, "(z, j) -> cell must be onto");

        DofMap {
            dim,
            velocity,
            n_velocity,
            pressure_of_cell,
            cell_of_pressure,
            feature_offsets,
            n_pressure_raw: n_cells,
        }
    }

    /// Free dof id of component `comp` at vertex `v`, or `DIRICHLET`.
    #[inline]
    pub fn velocity_dof(&self, v: usize, comp: usize) -> usize {
        self.velocity[v * self.dim + comp]
    }

    pub fn n_free_vertices(&self) -> usize {
        self.n_velocity / self.dim
    }

    /// Expands free velocity coefficients into per-vertex values (Dirichlet
    /// entries zero).  Output is indexed `vertex * dim + comp`.
    pub fn expand_velocity(&self, coeffs: &[f64]) -> Vec<f64> {
        debug_assert_eq!(coeffs.len(), self.n_velocity);
        let mut full = vec![0.0; self.velocity.len()];
        for (slot, &dof) in self.velocity.iter().enumerate() {
            if dof != DIRICHLET {
                full[slot] = coeffs[dof];
            }
        }
        full
    }

    /// Raw pressure dof range of feature `z`.
    pub fn feature_dofs(&self, z: usize) -> std::ops::Range<usize> {
        self.feature_offsets[z]..self.feature_offsets[z + 1]
    }
}
