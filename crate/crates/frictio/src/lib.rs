//! Solvers and checkers for quasi-static elastic contact with Coulomb friction.
//!
//! The crate is organized around a two-degree-of-freedom contact model in
//! (normal, tangential) coordinates and the machinery needed to evolve it
//! quasi-statically through load histories of bounded variation:
//!
//! - [`contact`] — domain types (stiffness, load paths, trajectories) and
//!   residual checkers for the contact and friction laws.
//! - [`incremental`] — exact solver for one implicit time step: closed-form
//!   Tresca minimization and the Coulomb fixed point on the friction bound.
//! - [`march`] — variation-adaptive time stepping, jump detection and
//!   localization, and the closed-form jumping benchmark scenario.
//! - [`fem`] — plane P1 finite elements with unilateral contact nodes, the
//!   condensed single-triangle reduction, and a nodal evolution solver.
//! - [`oracle`] — independent brute-force verifiers used by the test suite.

pub mod contact;
pub mod fem;
pub mod incremental;
pub mod march;
pub mod oracle;
pub mod rng;

pub use contact::{
    check_incremental_kkt, check_quasistatic, ContactState, CriticalFriction, FrictionCoefficient,
    LoadPath, NtVec2, ResidualReport, StiffnessMatrix2, Trajectory,
};
pub use incremental::{solve_incremental, tresca_minimize, IncrementalSolution, TrescaProblem};
pub use march::{build_subdivision, jump_scenario, march, MarchReport, Subdivision};
