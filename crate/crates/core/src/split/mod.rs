//! Powell-Sabin (2D) and Worsey-Farin (3D) refinement with singular-feature
//! bookkeeping.
//!
//! Both refinements place one new vertex at each cell incenter and one split
//! point on each coarse facet (for interior facets, where the segment joining
//! the two adjacent incenters crosses the facet; for boundary facets, the
//! midpoint / barycenter).  The split points are the singular features: in 2D
//! the edges meeting there fall on exactly two lines, in 3D the faces meeting
//! at the three edges from each face split point to the face corners fall on
//! exactly two planes.  Incenters guarantee the incenter-joining segment
//! crosses the shared facet strictly inside it.

mod powell_sabin;
mod verify;
mod worsey_farin;

pub use powell_sabin::powell_sabin_split;
pub use verify::{verify_singularity, SingularityReport};
pub use worsey_farin::worsey_farin_split;

use crate::mesh::Triangulation;
use std::sync::atomic::AtomicU64;

/// Counters used by tests to assert that 2D specs never touch 3D code paths
/// and vice versa.
pub mod telemetry {
    use super::AtomicU64;
    pub static PS_SPLITS: AtomicU64 = AtomicU64::new(0);
    pub static WF_SPLITS: AtomicU64 = AtomicU64::new(0);
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SplitKind {
    PowellSabin,
    WorseyFarin,
}

/// Singular vertex of a Powell-Sabin mesh (an edge split point).
#[derive(Debug, Clone)]
pub struct SingularPoint2d {
    /// Vertex id in the split mesh.
    pub vertex: usize,
    pub interior: bool,
    /// Ordered fan of split cells around the vertex: consecutive cells share
    /// an edge; 4 cells for interior points, 2 for boundary points.
    pub fan: Vec<usize>,
}

/// Singular edge of a Worsey-Farin mesh (from a face split point to a face
/// corner).
#[derive(Debug, Clone)]
pub struct SingularEdge3d {
    /// (face split point vertex, face corner vertex) in the split mesh.
    pub vertices: (usize, usize),
    pub interior: bool,
    /// Ordered fan of tets around the edge: consecutive tets share a face;
    /// 4 tets for interior edges, 2 for boundary edges.
    pub fan: Vec<usize>,
    /// Index of the owning face split point.
    pub face_point: usize,
    /// Which of the three interior edges of the face this is (0, 1, 2 in the
    /// cyclic labeling of the Clough-Tocher triangles).
    pub local_edge: usize,
}

/// Face split point of a Worsey-Farin mesh with its tet fan.
#[derive(Debug, Clone)]
pub struct FaceSplitPoint3d {
    /// Vertex id in the split mesh.
    pub vertex: usize,
    pub interior: bool,
    /// Ordered tets having the split point as a vertex.  For interior points
    /// there are 6, labeled so the first three lie in one coarse tet, the last
    /// three in the other, and fan[j] / fan[j+3] share a common face.  For
    /// boundary points there are 3.
    pub fan: Vec<usize>,
}

/// Clough-Tocher data of one coarse face: its three interior edges and the
/// designated edge used by the velocity degrees of freedom.
#[derive(Debug, Clone)]
pub struct CloughTocherFace {
    /// Index of the face split point this face belongs to.
    pub face_point: usize,
    /// Face corner vertex ids (split-mesh numbering) in the cyclic order that
    /// defines the Clough-Tocher triangles Q_j = (corners[j], corners[j+1]).
    pub corners: [usize; 3],
    /// interior_edges[j] = (split point, corners[(j+1) % 3]) separates Q_j
    /// from Q_{j+1}.
    pub interior_edges: [(usize, usize); 3],
    /// Index into `interior_edges` of the designated edge e_F: the one whose
    /// outer endpoint has the smallest vertex id.
    pub designated: usize,
}

/// A refined mesh together with its parent map and singular features.
#[derive(Debug, Clone)]
pub struct SplitMesh {
    pub mesh: Triangulation,
    pub kind: SplitKind,
    /// Coarse cell id of each split cell.
    pub parent: Vec<usize>,
    /// 2D only.
    pub singular_points: Vec<SingularPoint2d>,
    /// 3D only.
    pub singular_edges: Vec<SingularEdge3d>,
    /// 3D only.
    pub face_points: Vec<FaceSplitPoint3d>,
    /// 3D only, one entry per coarse face.
    pub ct_faces: Vec<CloughTocherFace>,
    pub n_coarse_cells: usize,
    /// Interior / boundary coarse facet counts.
    pub n_interior_facets: usize,
    pub n_boundary_facets: usize,
}

impl SplitMesh {
    pub fn dim(&self) -> usize {
        self.mesh.dim
    }

    /// Number of singular features carrying pressure constraints.
    pub fn n_features(&self) -> usize {
        match self.kind {
            SplitKind::PowellSabin => self.singular_points.len(),
            SplitKind::WorseyFarin => self.face_points.len(),
        }
    }

    /// Fan (ordered cell list) of feature `z` in the sigma labeling.
    pub fn feature_fan(&self, z: usize) -> &[usize] {
        match self.kind {
            SplitKind::PowellSabin => &self.singular_points[z].fan,
            SplitKind::WorseyFarin => &self.face_points[z].fan,
        }
    }

    pub fn feature_interior(&self, z: usize) -> bool {
        match self.kind {
            SplitKind::PowellSabin => self.singular_points[z].interior,
            SplitKind::WorseyFarin => self.face_points[z].interior,
        }
    }
}

/// Checks that consecutive fan cells share a facet in `mesh`; `cyclic` also
/// requires the last and first to be adjacent.
pub fn fan_is_adjacent_chain(mesh: &Triangulation, fan: &[usize], cyclic: bool) -> bool {
    let last = if cyclic { fan.len() } else { fan.len() - 1 };
    for i in 0..last {
        let a = fan[i];
        let b = fan[(i + 1) % fan.len()];
        let adjacent = (0..mesh.dim + 1).any(|k| mesh.neighbor(a, k) == b);
        if !adjacent {
            return false;
        }
    }
    true
}

/// Rotates/reflects a cyclic fan so it starts at the smallest cell id and
/// proceeds toward its smaller neighbor.  Both operations change the
/// alternating-sum functional by at most a sign, so the constraint set is
/// unaffected.
pub(crate) fn canonicalize_cycle(fan: &mut Vec<usize>) {
    let n = fan.len();
    let start = (0..n).min_by_key(|&i| fan[i]).unwrap();
    let prev = fan[(start + n - 1) % n];
    let next = fan[(start + 1) % n];
    let mut out = Vec::with_capacity(n);
    if next <= prev {
        for i in 0..n {
            out.push(fan[(start + i) % n]);
        }
    } else {
        for i in 0..n {
            out.push(fan[(start + n - i) % n]);
        }
    }
    *fan = out;
}
