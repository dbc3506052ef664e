//! Domain types and law checkers for the two-degree-of-freedom contact model.
//!
//! Coordinates are fixed as (normal, tangential) with the rigid obstacle at
//! `u_n = 0`, i.e. the admissible displacements satisfy `u_n <= 0`.

mod load;
mod residual;
mod stiffness;
mod trajectory;

pub use load::{LoadJump, LoadPath, LoadPathError, LoadSegment};
pub use residual::{check_incremental_kkt, check_quasistatic, CheckError, ResidualReport};

pub(crate) mod residual_parts {
    pub(crate) use super::residual::{cone_residual, flow_residual, signorini_residual};
}
pub use stiffness::{CriticalFriction, StiffnessError, StiffnessMatrix2};
pub use trajectory::{Interpolation, Trajectory, TrajectoryError, TrajectoryJump};

use serde::{Deserialize, Serialize};

/// A vector in (normal, tangential) coordinates.
///
/// Used for forces, tractions and displacements of the discrete model alike;
/// the units are whatever the surrounding problem uses, SI-consistent.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NtVec2 {
    pub n: f64,
    pub t: f64,
}

impl NtVec2 {
    pub const ZERO: NtVec2 = NtVec2 { n: 0.0, t: 0.0 };

    pub fn new(n: f64, t: f64) -> Self {
        NtVec2 { n, t }
    }

    pub fn norm(self) -> f64 {
        self.n.hypot(self.t)
    }

    pub fn norm_inf(self) -> f64 {
        self.n.abs().max(self.t.abs())
    }

    pub fn dot(self, other: NtVec2) -> f64 {
        self.n * other.n + self.t * other.t
    }

    /// Reverses the tangential axis.
    pub fn flip_t(self) -> Self {
        NtVec2 { n: self.n, t: -self.t }
    }
}

impl From<[f64; 2]> for NtVec2 {
    fn from(v: [f64; 2]) -> Self {
        NtVec2 { n: v[0], t: v[1] }
    }
}

impl From<NtVec2> for [f64; 2] {
    fn from(v: NtVec2) -> Self {
        [v.n, v.t]
    }
}

impl std::ops::Add for NtVec2 {
    type Output = NtVec2;
    fn add(self, rhs: NtVec2) -> NtVec2 {
        NtVec2::new(self.n + rhs.n, self.t + rhs.t)
    }
}

impl std::ops::Sub for NtVec2 {
    type Output = NtVec2;
    fn sub(self, rhs: NtVec2) -> NtVec2 {
        NtVec2::new(self.n - rhs.n, self.t - rhs.t)
    }
}

impl std::ops::Mul<f64> for NtVec2 {
    type Output = NtVec2;
    fn mul(self, rhs: f64) -> NtVec2 {
        NtVec2::new(self.n * rhs, self.t * rhs)
    }
}

impl std::ops::Neg for NtVec2 {
    type Output = NtVec2;
    fn neg(self) -> NtVec2 {
        NtVec2::new(-self.n, -self.t)
    }
}

/// Dimensionless friction coefficient, `f >= 0`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct FrictionCoefficient(f64);

impl FrictionCoefficient {
    pub fn new(f: f64) -> Result<Self, StiffnessError> {
        if !f.is_finite() || f < 0.0 {
            return Err(StiffnessError::InvalidFriction(f));
        }
        Ok(FrictionCoefficient(f))
    }

    pub fn get(self) -> f64 {
        self.0
    }
}

/// Displacement/reaction pair of the particle, split into normal and
/// tangential components.
///
/// No law compliance is implied by the type itself; use
/// [`check_incremental_kkt`] or [`check_quasistatic`] to verify a state
/// against the contact and friction laws.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ContactState {
    /// Displacement (u_n, u_t).
    pub u: NtVec2,
    /// Contact reaction (t_n, t_t).
    pub t: NtVec2,
}

impl ContactState {
    pub const ZERO: ContactState = ContactState { u: NtVec2::ZERO, t: NtVec2::ZERO };

    pub fn new(u_n: f64, u_t: f64, t_n: f64, t_t: f64) -> Self {
        ContactState { u: NtVec2::new(u_n, u_t), t: NtVec2::new(t_n, t_t) }
    }

    /// Reverses the tangential axis of both displacement and reaction.
    pub fn flip_t(self) -> Self {
        ContactState { u: self.u.flip_t(), t: self.t.flip_t() }
    }
}
