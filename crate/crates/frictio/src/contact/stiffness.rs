use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::NtVec2;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StiffnessError {
    #[error("stiffness matrix is not positive definite: k_nn={k_nn}, k_nt={k_nt}, k_tt={k_tt}")]
    NotPositiveDefinite { k_nn: f64, k_nt: f64, k_tt: f64 },
    #[error("stiffness entries must be finite")]
    NonFinite,
    #[error("friction coefficient must be finite and nonnegative, got {0}")]
    InvalidFriction(f64),
}

/// Symmetric positive-definite 2x2 stiffness in (normal, tangential)
/// coordinates.
///
/// The constructor canonicalizes the orientation to `k_nt >= 0` by reversing
/// the tangential axis when necessary; the flip is recorded so callers can
/// map data in and out of the canonical frame.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StiffnessMatrix2 {
    k_nn: f64,
    k_nt: f64,
    k_tt: f64,
    flipped: bool,
}

/// Result of [`StiffnessMatrix2::critical_friction`]: the coupling threshold
/// `k_tt / k_nt`, or unbounded when normal and tangential axes decouple.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum CriticalFriction {
    Finite(f64),
    Unbounded,
}

impl CriticalFriction {
    pub fn finite(self) -> Option<f64> {
        match self {
            CriticalFriction::Finite(v) => Some(v),
            CriticalFriction::Unbounded => None,
        }
    }
}

impl StiffnessMatrix2 {
    /// Builds a stiffness matrix, checking positive definiteness and
    /// canonicalizing the tangential orientation.
    pub fn new(k_nn: f64, k_nt: f64, k_tt: f64) -> Result<Self, StiffnessError> {
        if !(k_nn.is_finite() && k_nt.is_finite() && k_tt.is_finite()) {
            return Err(StiffnessError::NonFinite);
        }
        if !(k_nn > 0.0 && k_tt > 0.0 && k_nn * k_tt - k_nt * k_nt > 0.0) {
            return Err(StiffnessError::NotPositiveDefinite { k_nn, k_nt, k_tt });
        }
        let flipped = k_nt < 0.0;
        Ok(StiffnessMatrix2 { k_nn, k_nt: k_nt.abs(), k_tt, flipped })
    }

    pub fn k_nn(&self) -> f64 {
        self.k_nn
    }

    pub fn k_nt(&self) -> f64 {
        self.k_nt
    }

    pub fn k_tt(&self) -> f64 {
        self.k_tt
    }

    /// True when the constructor reversed the tangential axis to obtain
    /// `k_nt >= 0`. Inputs and outputs expressed in the caller's original
    /// frame must have their tangential components negated accordingly.
    pub fn tangential_flipped(&self) -> bool {
        self.flipped
    }

    pub fn det(&self) -> f64 {
        self.k_nn * self.k_tt - self.k_nt * self.k_nt
    }

    /// Induced infinity norm (max row sum).
    pub fn norm_inf(&self) -> f64 {
        (self.k_nn.abs() + self.k_nt.abs()).max(self.k_nt.abs() + self.k_tt.abs())
    }

    pub fn mul(&self, v: NtVec2) -> NtVec2 {
        NtVec2::new(self.k_nn * v.n + self.k_nt * v.t, self.k_nt * v.n + self.k_tt * v.t)
    }

    /// Solves `K x = rhs` by the 2x2 inverse.
    pub fn solve(&self, rhs: NtVec2) -> NtVec2 {
        let det = self.det();
        NtVec2::new(
            (self.k_tt * rhs.n - self.k_nt * rhs.t) / det,
            (self.k_nn * rhs.t - self.k_nt * rhs.n) / det,
        )
    }

    /// Critical friction coefficient `k_tt / k_nt`.
    ///
    /// Below this threshold the incremental problem has a unique solution and
    /// the evolution admits no spontaneous jumps; at or above it, continua of
    /// incremental solutions and jumping evolutions become possible. With
    /// `k_nt = 0` the two axes decouple and no finite threshold exists.
    pub fn critical_friction(&self) -> CriticalFriction {
        if self.k_nt == 0.0 {
            CriticalFriction::Unbounded
        } else {
            CriticalFriction::Finite(self.k_tt / self.k_nt)
        }
    }

    /// True when `f * k_nt / k_tt < 1`, the uniqueness/stability condition.
    pub fn subcritical(&self, f: super::FrictionCoefficient) -> bool {
        f.get() * self.k_nt < self.k_tt
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::contact::FrictionCoefficient;

    #[test]
    fn rejects_indefinite_matrices() {
        assert!(StiffnessMatrix2::new(1.0, 2.0, 1.0).is_err());
        assert!(StiffnessMatrix2::new(0.0, 0.0, 1.0).is_err());
        assert!(StiffnessMatrix2::new(-1.0, 0.0, 1.0).is_err());
        assert!(StiffnessMatrix2::new(f64::NAN, 0.0, 1.0).is_err());
    }

    #[test]
    fn canonicalizes_negative_coupling() {
        let k = StiffnessMatrix2::new(2.0, -1.0, 2.0).unwrap();
        assert_eq!(k.k_nt(), 1.0);
        assert!(k.tangential_flipped());
        let k = StiffnessMatrix2::new(2.0, 1.0, 2.0).unwrap();
        assert!(!k.tangential_flipped());
    }

    #[test]
    fn critical_friction_ratio() {
        let k = StiffnessMatrix2::new(2.0, 1.0, 2.0).unwrap();
        assert_eq!(k.critical_friction().finite(), Some(2.0));
        assert!(k.subcritical(FrictionCoefficient::new(1.9).unwrap()));
        assert!(!k.subcritical(FrictionCoefficient::new(2.0).unwrap()));

        let diag = StiffnessMatrix2::new(3.0, 0.0, 5.0).unwrap();
        assert_eq!(diag.critical_friction().finite(), None);
        assert!(diag.subcritical(FrictionCoefficient::new(1e9).unwrap()));
    }

    #[test]
    fn solve_inverts_mul() {
        let k = StiffnessMatrix2::new(2.0, 1.0, 2.0).unwrap();
        let v = NtVec2::new(-0.3, 1.7);
        let w = k.solve(k.mul(v));
        assert!((w - v).norm() < 1e-14);
    }
}
