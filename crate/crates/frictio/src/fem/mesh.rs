use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MeshError {
    #[error("node index {0} out of range")]
    NodeOutOfRange(usize),
    #[error("triangle {0} is degenerate or negatively oriented")]
    BadTriangle(usize),
    #[error("the clamped node set gamma_u must not be empty")]
    EmptyGammaU,
    #[error("contact node {0} is also clamped")]
    ContactOnClamped(usize),
    #[error("contact normal of node {0} is not a unit vector")]
    BadNormal(usize),
    #[error("boundary edge ({0}, {1}) carries no tag")]
    UntaggedBoundaryEdge(usize, usize),
    #[error("gamma_t edge ({0}, {1}) is not a boundary edge")]
    NotBoundaryEdge(usize, usize),
    #[error("young's modulus must be positive, got {0}")]
    BadModulus(f64),
    #[error("poisson ratio must lie in [0, 0.5), got {0}")]
    BadPoisson(f64),
}

/// Plane linear elasticity reduction used for the 2D model.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum PlaneFormulation {
    PlaneStress,
    PlaneStrain,
}

/// Isotropic material; at `nu = 0` the plane-stress and plane-strain
/// reductions coincide (both Lame lambdas vanish).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ElasticMaterial {
    youngs: f64,
    poisson: f64,
    formulation: PlaneFormulation,
}

impl ElasticMaterial {
    /// Material with the default plane-strain reduction.
    pub fn new(youngs: f64, poisson: f64) -> Result<Self, MeshError> {
        if !(youngs > 0.0) || !youngs.is_finite() {
            return Err(MeshError::BadModulus(youngs));
        }
        if !(0.0..0.5).contains(&poisson) {
            return Err(MeshError::BadPoisson(poisson));
        }
        Ok(ElasticMaterial { youngs, poisson, formulation: PlaneFormulation::PlaneStrain })
    }

    pub fn with_formulation(mut self, formulation: PlaneFormulation) -> Self {
        self.formulation = formulation;
        self
    }

    pub fn youngs(&self) -> f64 {
        self.youngs
    }

    pub fn poisson(&self) -> f64 {
        self.poisson
    }

    pub fn formulation(&self) -> PlaneFormulation {
        self.formulation
    }

    /// Effective Lame constants `(lambda, mu)` of the plane reduction.
    pub fn lame(&self) -> (f64, f64) {
        let e = self.youngs;
        let nu = self.poisson;
        let mu = e / (2.0 * (1.0 + nu));
        let lambda = match self.formulation {
            PlaneFormulation::PlaneStrain => e * nu / ((1.0 + nu) * (1.0 - 2.0 * nu)),
            PlaneFormulation::PlaneStress => e * nu / (1.0 - nu * nu),
        };
        (lambda, mu)
    }
}

/// Unilateral contact node: `u . normal <= gap`, Coulomb friction in the
/// tangential direction.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ContactNode {
    pub node: usize,
    pub gap: f64,
    pub normal: [f64; 2],
}

impl ContactNode {
    /// In-plane tangent, the normal rotated by -90 degrees (so normal
    /// `(0, 1)` gives tangent `(1, 0)`).
    pub fn tangent(&self) -> [f64; 2] {
        [self.normal[1], -self.normal[0]]
    }
}

#[derive(Serialize, Deserialize)]
struct PlaneMeshData {
    nodes: Vec<[f64; 2]>,
    triangles: Vec<[usize; 3]>,
    gamma_u: Vec<usize>,
    gamma_t_edges: Vec<[usize; 2]>,
    gamma_c: Vec<ContactNode>,
}

/// P1 triangle mesh with boundary tags: clamped nodes (gamma_u), traction
/// edges (gamma_t) and unilateral contact nodes (gamma_c).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "PlaneMeshData", into = "PlaneMeshData")]
pub struct PlaneMesh {
    nodes: Vec<[f64; 2]>,
    triangles: Vec<[usize; 3]>,
    gamma_u: Vec<usize>,
    gamma_t_edges: Vec<[usize; 2]>,
    gamma_c: Vec<ContactNode>,
}

impl TryFrom<PlaneMeshData> for PlaneMesh {
    type Error = MeshError;
    fn try_from(d: PlaneMeshData) -> Result<Self, Self::Error> {
        PlaneMesh::new(d.nodes, d.triangles, d.gamma_u, d.gamma_t_edges, d.gamma_c)
    }
}

impl From<PlaneMesh> for PlaneMeshData {
    fn from(m: PlaneMesh) -> Self {
        PlaneMeshData {
            nodes: m.nodes,
            triangles: m.triangles,
            gamma_u: m.gamma_u,
            gamma_t_edges: m.gamma_t_edges,
            gamma_c: m.gamma_c,
        }
    }
}

pub(crate) fn signed_double_area(a: [f64; 2], b: [f64; 2], c: [f64; 2]) -> f64 {
    (b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1])
}

impl PlaneMesh {
    pub fn new(
        nodes: Vec<[f64; 2]>,
        triangles: Vec<[usize; 3]>,
        gamma_u: Vec<usize>,
        gamma_t_edges: Vec<[usize; 2]>,
        gamma_c: Vec<ContactNode>,
    ) -> Result<Self, MeshError> {
        let n = nodes.len();
        let check = |i: usize| if i < n { Ok(()) } else { Err(MeshError::NodeOutOfRange(i)) };
        for (ti, t) in triangles.iter().enumerate() {
            for &i in t {
                check(i)?;
            }
            if signed_double_area(nodes[t[0]], nodes[t[1]], nodes[t[2]]) <= 0.0 {
                return Err(MeshError::BadTriangle(ti));
            }
        }
        if gamma_u.is_empty() {
            return Err(MeshError::EmptyGammaU);
        }
        for &i in &gamma_u {
            check(i)?;
        }
        for c in &gamma_c {
            check(c.node)?;
            if gamma_u.contains(&c.node) {
                return Err(MeshError::ContactOnClamped(c.node));
            }
            let norm = c.normal[0].hypot(c.normal[1]);
            if (norm - 1.0).abs() > 1e-9 {
                return Err(MeshError::BadNormal(c.node));
            }
        }

        // Boundary edges are those used by exactly one triangle; each must
        // be covered by a tag: listed under gamma_t, fully clamped, or a
        // contact edge (every endpoint a contact or clamped node).
        let mut edge_count = std::collections::BTreeMap::new();
        for t in &triangles {
            for (i, j) in [(t[0], t[1]), (t[1], t[2]), (t[2], t[0])] {
                *edge_count.entry((i.min(j), i.max(j))).or_insert(0usize) += 1;
            }
        }
        let is_boundary = |i: usize, j: usize| edge_count.get(&(i.min(j), i.max(j))) == Some(&1);
        for e in &gamma_t_edges {
            check(e[0])?;
            check(e[1])?;
            if !is_boundary(e[0], e[1]) {
                return Err(MeshError::NotBoundaryEdge(e[0], e[1]));
            }
        }
        let tagged_t = |i: usize, j: usize| {
            gamma_t_edges
                .iter()
                .any(|e| (e[0] == i && e[1] == j) || (e[0] == j && e[1] == i))
        };
        let on_u = |i: usize| gamma_u.contains(&i);
        let on_c = |i: usize| gamma_c.iter().any(|c| c.node == i);
        for (&(i, j), &cnt) in &edge_count {
            if cnt != 1 {
                continue;
            }
            let covered = tagged_t(i, j)
                || (on_u(i) && on_u(j))
                || ((on_u(i) || on_c(i)) && (on_u(j) || on_c(j)));
            if !covered {
                return Err(MeshError::UntaggedBoundaryEdge(i, j));
            }
        }
        Ok(PlaneMesh { nodes, triangles, gamma_u, gamma_t_edges, gamma_c })
    }

    pub fn nodes(&self) -> &[[f64; 2]] {
        &self.nodes
    }

    pub fn triangles(&self) -> &[[usize; 3]] {
        &self.triangles
    }

    pub fn gamma_u(&self) -> &[usize] {
        &self.gamma_u
    }

    pub fn gamma_t_edges(&self) -> &[[usize; 2]] {
        &self.gamma_t_edges
    }

    pub fn gamma_c(&self) -> &[ContactNode] {
        &self.gamma_c
    }

    pub fn is_clamped(&self, node: usize) -> bool {
        self.gamma_u.contains(&node)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// The benchmark triangle: contact vertex A on the obstacle line,
    /// clamped edge away from it. Orientation (A, C, B) keeps the area
    /// positive.
    pub(crate) fn single_triangle(c_vertex: [f64; 2]) -> PlaneMesh {
        PlaneMesh::new(
            vec![[-1.0, 0.0], [0.0, 0.0], c_vertex],
            vec![[0, 2, 1]],
            vec![1, 2],
            vec![[2, 0]],
            vec![ContactNode { node: 0, gap: 0.0, normal: [0.0, 1.0] }],
        )
        .unwrap()
    }

    #[test]
    fn accepts_the_benchmark_triangle() {
        let m = single_triangle([1.0, -1.0]);
        assert_eq!(m.gamma_c().len(), 1);
    }

    #[test]
    fn rejects_clockwise_triangles() {
        let r = PlaneMesh::new(
            vec![[-1.0, 0.0], [0.0, 0.0], [0.0, -1.0]],
            vec![[0, 1, 2]],
            vec![1, 2],
            vec![[2, 0]],
            vec![ContactNode { node: 0, gap: 0.0, normal: [0.0, 1.0] }],
        );
        assert!(matches!(r, Err(MeshError::BadTriangle(0))));
    }

    #[test]
    fn rejects_untagged_boundary() {
        let r = PlaneMesh::new(
            vec![[-1.0, 0.0], [0.0, 0.0], [0.0, -1.0]],
            vec![[0, 2, 1]],
            vec![1, 2],
            vec![],
            vec![],
        );
        assert!(matches!(r, Err(MeshError::UntaggedBoundaryEdge(0, _))));
    }

    #[test]
    fn rejects_empty_clamp_and_bad_normal() {
        assert!(matches!(
            PlaneMesh::new(
                vec![[-1.0, 0.0], [0.0, 0.0], [0.0, -1.0]],
                vec![[0, 2, 1]],
                vec![],
                vec![[2, 0], [0, 1], [1, 2]],
                vec![],
            ),
            Err(MeshError::EmptyGammaU)
        ));
        assert!(matches!(
            PlaneMesh::new(
                vec![[-1.0, 0.0], [0.0, 0.0], [0.0, -1.0]],
                vec![[0, 2, 1]],
                vec![1, 2],
                vec![[2, 0]],
                vec![ContactNode { node: 0, gap: 0.0, normal: [0.0, 2.0] }],
            ),
            Err(MeshError::BadNormal(0))
        ));
    }

    #[test]
    fn material_validation_and_lame() {
        assert!(ElasticMaterial::new(0.0, 0.0).is_err());
        assert!(ElasticMaterial::new(1.0, 0.5).is_err());
        let m = ElasticMaterial::new(1.0, 0.0).unwrap();
        let (l_strain, mu) = m.lame();
        assert_eq!(l_strain, 0.0);
        assert_eq!(mu, 0.5);
        let (l_stress, _) = m.with_formulation(PlaneFormulation::PlaneStress).lame();
        assert_eq!(l_stress, 0.0);
    }

    #[test]
    fn mesh_json_round_trip() {
        let m = single_triangle([1.0, -1.0]);
        let s = serde_json::to_string(&m).unwrap();
        let back: PlaneMesh = serde_json::from_str(&s).unwrap();
        assert_eq!(m, back);
        let v: serde_json::Value = serde_json::from_str(&s).unwrap();
        assert!(v["gamma_c"][0]["normal"].is_array());
        assert_eq!(v["gamma_c"][0]["gap"], 0.0);
    }
}
