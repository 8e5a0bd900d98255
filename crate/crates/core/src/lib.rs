//! Low-order divergence-free finite elements for the Stokes problem on
//! Powell-Sabin (2D) and Worsey-Farin (3D) split meshes.
//!
//! The discrete pair is continuous piecewise-linear velocity against a
//! subspace of piecewise constants with weak continuity constraints at
//! singular vertices / singular edges.  The constraints are enforced at the
//! algebraic level by elementary column operations on the raw divergence
//! matrix, which keeps assembly entirely standard.
//!
//! Pipeline: [`mesh`] builds coarse simplicial meshes, [`split`] refines them
//! (6 children per triangle, 12 per tet) while recording singular features,
//! [`assembly`] produces the saddle-point matrices, [`constraints`] reduces
//! the pressure space, and [`solver`] solves the resulting systems directly,
//! with a block-preconditioned Krylov method, or with the iterated penalty
//! method.  [`experiment`] drives full convergence / stability studies.

pub mod assembly;
pub mod constraints;
pub mod dofs;
pub mod error;
pub mod experiment;
pub mod manufactured;
pub mod mesh;
pub mod quadrature;
pub mod solver;
pub mod sparse;
pub mod split;

pub use error::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;
