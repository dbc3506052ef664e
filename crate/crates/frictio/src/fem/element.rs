use serde::{Deserialize, Serialize};

use super::mesh::{signed_double_area, ElasticMaterial};
use super::FemError;
use crate::contact::{NtVec2, StiffnessMatrix2};

/// Constant-strain-triangle stiffness, 6x6 over the dofs
/// `(u_x^1, u_y^1, u_x^2, u_y^2, u_x^3, u_y^3)`.
pub(crate) fn element_stiffness(
    p1: [f64; 2],
    p2: [f64; 2],
    p3: [f64; 2],
    mat: &ElasticMaterial,
) -> Result<[[f64; 6]; 6], FemError> {
    let double_area = signed_double_area(p1, p2, p3).abs();
    if double_area < 1e-14 * (p1[0].abs() + p2[0].abs() + p3[0].abs() + 1.0) {
        return Err(FemError::DegenerateTriangle);
    }
    let area = 0.5 * double_area;
    let pts = [p1, p2, p3];
    // Shape-function gradients: b_i = y_j - y_k, c_i = x_k - x_j.
    let mut b = [0.0; 3];
    let mut c = [0.0; 3];
    for i in 0..3 {
        let j = (i + 1) % 3;
        let k = (i + 2) % 3;
        b[i] = pts[j][1] - pts[k][1];
        c[i] = pts[k][0] - pts[j][0];
    }
    let (lambda, mu) = mat.lame();
    // Voigt: [e_xx, e_yy, 2 e_xy], D = [[l+2m, l, 0], [l, l+2m, 0], [0,0,m]].
    let d = [
        [lambda + 2.0 * mu, lambda, 0.0],
        [lambda, lambda + 2.0 * mu, 0.0],
        [0.0, 0.0, mu],
    ];
    let mut bm = [[0.0; 6]; 3];
    for i in 0..3 {
        bm[0][2 * i] = b[i];
        bm[1][2 * i + 1] = c[i];
        bm[2][2 * i] = c[i];
        bm[2][2 * i + 1] = b[i];
    }
    let scale = 1.0 / double_area;
    let mut ke = [[0.0; 6]; 6];
    for r in 0..6 {
        for s in 0..6 {
            let mut acc = 0.0;
            for a in 0..3 {
                for bb in 0..3 {
                    acc += bm[a][r] * d[a][bb] * bm[bb][s];
                }
            }
            ke[r][s] = acc * scale * scale * area;
        }
    }
    Ok(ke)
}

/// Condensed 2x2 stiffness of the single-triangle model: vertex `a` is free
/// against the obstacle line `y = 0` while `b` and `c` are clamped, so the
/// element energy reduces to a quadratic form in the displacement of `a`.
/// Returned in (normal, tangential) = (y, x) coordinates; the constructor
/// may flip the tangential axis (see
/// [`StiffnessMatrix2::tangential_flipped`]).
pub fn triangle_condensed_stiffness(
    a: [f64; 2],
    b: [f64; 2],
    c: [f64; 2],
    mat: &ElasticMaterial,
) -> Result<StiffnessMatrix2, FemError> {
    let ke = element_stiffness(a, b, c, mat)?;
    // Free dofs are (u_x^a, u_y^a) = indices 0, 1; (n, t) = (y, x).
    StiffnessMatrix2::new(ke[1][1], ke[0][1], ke[0][0]).map_err(FemError::Stiffness)
}

/// How a constant edge traction is turned into a nodal force at the free
/// vertex.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum LoadMode {
    /// Work-consistent value `(|AC| / 2) T`: the integral of the linear
    /// shape function (1 at `a`, 0 at `c`) against the traction.
    VirtualWork,
    /// The value `(|AC|^2 / 2) T`, scaling with the squared edge length.
    LengthSquared,
}

/// Nodal force at `a` equivalent to the constant traction `t` on edge `ac`
/// whose far end is clamped.
pub fn consistent_edge_load(
    a: [f64; 2],
    c: [f64; 2],
    traction: [f64; 2],
    mode: LoadMode,
) -> Result<[f64; 2], FemError> {
    let len = (c[0] - a[0]).hypot(c[1] - a[1]);
    if len == 0.0 {
        return Err(FemError::DegenerateTriangle);
    }
    let w = match mode {
        LoadMode::VirtualWork => 0.5 * len,
        LoadMode::LengthSquared => 0.5 * len * len,
    };
    Ok([w * traction[0], w * traction[1]])
}

/// Single-triangle reduction: the condensed stiffness together with the
/// bookkeeping needed to move forces and displacements between the plane
/// (x, y) frame and the canonical (n, t) frame of the 2-DOF model.
#[derive(Clone, Copy, Debug)]
pub struct CondensedModel {
    pub k: StiffnessMatrix2,
    /// Length of the loaded edge `ac`.
    pub edge_len: f64,
}

impl CondensedModel {
    fn orientation(&self) -> f64 {
        if self.k.tangential_flipped() {
            -1.0
        } else {
            1.0
        }
    }

    /// Plane force `[f_x, f_y]` expressed in the (n, t) frame of the model.
    pub fn force_nt(&self, f_xy: [f64; 2]) -> NtVec2 {
        NtVec2::new(f_xy[1], self.orientation() * f_xy[0])
    }

    /// Model displacement back in the plane frame.
    pub fn displacement_xy(&self, u: NtVec2) -> [f64; 2] {
        [self.orientation() * u.t, u.n]
    }

    /// Plane displacement of the free vertex in the (n, t) frame.
    pub fn displacement_nt(&self, u_xy: [f64; 2]) -> NtVec2 {
        NtVec2::new(u_xy[1], self.orientation() * u_xy[0])
    }
}

/// Builds the condensed model of triangle `(a, b, c)` with `b`, `c` clamped
/// and the traction edge `ac`.
pub fn condensed_model(
    a: [f64; 2],
    b: [f64; 2],
    c: [f64; 2],
    mat: &ElasticMaterial,
) -> Result<CondensedModel, FemError> {
    let k = triangle_condensed_stiffness(a, b, c, mat)?;
    Ok(CondensedModel { k, edge_len: (c[0] - a[0]).hypot(c[1] - a[1]) })
}
