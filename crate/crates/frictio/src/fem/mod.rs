//! Plane P1 finite elements with unilateral contact nodes.
//!
//! The single-triangle model (one free vertex against a straight obstacle,
//! the opposite edge clamped, a constant traction on the remaining edge)
//! condenses exactly to the 2-DOF model of [`crate::incremental`]; the
//! [`element::condensed_model`] helpers carry data between the two frames.
//! General meshes are solved nodally: the quadratic elastic energy plus a
//! per-contact-node friction term and gap constraint, with the friction
//! bounds updated by an outer fixed point.

mod element;
mod mesh;
mod solve;
mod system;

pub use element::{
    condensed_model, consistent_edge_load, triangle_condensed_stiffness, CondensedModel, LoadMode,
};
pub use mesh::{ContactNode, ElasticMaterial, MeshError, PlaneFormulation, PlaneMesh};
pub use solve::{
    check_fem_incremental, march_fem, solve_incremental_fem, FemIncrementalSolution,
    FemMarchReport, NodeReaction,
};
pub use system::{assemble, assemble_full, assemble_load, FemLoad, FemSystem};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum FemError {
    #[error(transparent)]
    Mesh(#[from] MeshError),
    #[error(transparent)]
    Stiffness(crate::contact::StiffnessError),
    #[error("triangle is degenerate")]
    DegenerateTriangle,
    #[error("boundary conditions leave rigid modes; the system is singular")]
    SingularSystem,
    #[error("no fixed point located within {iterations} iterations (residual {residual:.3e})")]
    NonConvergence { iterations: usize, residual: f64 },
    #[error("initial nodal state is not admissible (max residual {max:.3e})")]
    InadmissibleInitialCondition { max: f64 },
    #[error(transparent)]
    Load(#[from] crate::contact::LoadPathError),
    #[error("{0}")]
    BadInput(String),
}
