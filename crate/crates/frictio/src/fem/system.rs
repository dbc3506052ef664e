use super::element::element_stiffness;
use super::mesh::{ContactNode, ElasticMaterial, PlaneMesh};
use super::FemError;

/// Dense symmetric matrix, row-major full storage.
#[derive(Clone, Debug)]
pub(crate) struct DenseSym {
    pub n: usize,
    pub a: Vec<f64>,
}

impl DenseSym {
    fn zeros(n: usize) -> Self {
        DenseSym { n, a: vec![0.0; n * n] }
    }

    #[inline]
    pub fn at(&self, r: usize, c: usize) -> f64 {
        self.a[r * self.n + c]
    }

    fn add(&mut self, r: usize, c: usize, v: f64) {
        self.a[r * self.n + c] += v;
    }

    pub fn mul_vec(&self, x: &[f64], out: &mut [f64]) {
        for r in 0..self.n {
            let row = &self.a[r * self.n..(r + 1) * self.n];
            let mut acc = 0.0;
            let mut comp = 0.0;
            for (a, b) in row.iter().zip(x) {
                // Kahan accumulation keeps residual evaluations trustworthy
                // on larger meshes.
                let y = a * b - comp;
                let t = acc + y;
                comp = (t - acc) - y;
                acc = t;
            }
            out[r] = acc;
        }
    }

    /// In-place Cholesky check of positive definiteness.
    pub fn is_positive_definite(&self) -> bool {
        let n = self.n;
        let mut l = self.a.clone();
        for k in 0..n {
            let mut d = l[k * n + k];
            for j in 0..k {
                d -= l[k * n + j] * l[k * n + j];
            }
            if d <= 0.0 || !d.is_finite() {
                return false;
            }
            let d = d.sqrt();
            l[k * n + k] = d;
            for i in k + 1..n {
                let mut v = l[i * n + k];
                for j in 0..k {
                    v -= l[i * n + j] * l[k * n + j];
                }
                l[i * n + k] = v / d;
            }
        }
        true
    }
}

/// Per-contact-node bookkeeping in the reduced, rotated system.
#[derive(Clone, Copy, Debug)]
pub(crate) struct ContactDof {
    pub node: usize,
    pub gap: f64,
    /// Reduced dof index of the normal component.
    pub dof_n: usize,
    /// Reduced dof index of the tangential component.
    pub dof_t: usize,
}

/// Role of one reduced coordinate, indexed by contact position.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum CoordKind {
    Free,
    ContactNormal(usize),
    ContactTangent(usize),
}

/// Assembled linear system over the free dofs, with contact-node dof pairs
/// rotated into their (normal, tangential) frames.
#[derive(Clone, Debug)]
pub struct FemSystem {
    pub(crate) matrix: DenseSym,
    /// Reduced dof index of each (node, component) in the plane frame basis;
    /// clamped nodes map to none. For contact nodes the pair means (n, t).
    pub(crate) dof_of: Vec<[Option<usize>; 2]>,
    pub(crate) contacts: Vec<ContactDof>,
    pub(crate) coord_kind: Vec<CoordKind>,
    n_nodes: usize,
}

impl FemSystem {
    pub fn n_dofs(&self) -> usize {
        self.matrix.n
    }

    pub(crate) fn contacts(&self) -> &[ContactDof] {
        &self.contacts
    }

    /// Expands a reduced solution vector to plane-frame displacements for
    /// every node (clamped nodes zero, contact nodes rotated back).
    pub(crate) fn expand(&self, mesh: &PlaneMesh, x: &[f64]) -> Vec<[f64; 2]> {
        let mut out = vec![[0.0, 0.0]; self.n_nodes];
        for (node, dofs) in self.dof_of.iter().enumerate() {
            let (Some(d0), Some(d1)) = (dofs[0], dofs[1]) else { continue };
            if let Some(c) = mesh.gamma_c().iter().find(|c| c.node == node) {
                let t = c.tangent();
                out[node] = [
                    x[d0] * c.normal[0] + x[d1] * t[0],
                    x[d0] * c.normal[1] + x[d1] * t[1],
                ];
            } else {
                out[node] = [x[d0], x[d1]];
            }
        }
        out
    }

    /// Reduces plane-frame nodal displacements to the rotated free-dof
    /// vector (inverse of [`FemSystem::expand`] on the free part).
    pub(crate) fn reduce(&self, mesh: &PlaneMesh, u: &[[f64; 2]]) -> Vec<f64> {
        let mut x = vec![0.0; self.matrix.n];
        for (node, dofs) in self.dof_of.iter().enumerate() {
            let (Some(d0), Some(d1)) = (dofs[0], dofs[1]) else { continue };
            if let Some(c) = mesh.gamma_c().iter().find(|c| c.node == node) {
                let t = c.tangent();
                x[d0] = u[node][0] * c.normal[0] + u[node][1] * c.normal[1];
                x[d1] = u[node][0] * t[0] + u[node][1] * t[1];
            } else {
                x[d0] = u[node][0];
                x[d1] = u[node][1];
            }
        }
        x
    }
}

/// Assembles the full stiffness over all plane-frame dofs, without boundary
/// conditions; used by the patch test and the energy-consistency checks.
pub fn assemble_full(mesh: &PlaneMesh, mat: &ElasticMaterial) -> Result<Vec<f64>, FemError> {
    let n = 2 * mesh.nodes().len();
    let mut k = vec![0.0; n * n];
    for tri in mesh.triangles() {
        let ke = element_stiffness(
            mesh.nodes()[tri[0]],
            mesh.nodes()[tri[1]],
            mesh.nodes()[tri[2]],
            mat,
        )?;
        for r in 0..6 {
            for c in 0..6 {
                let gr = 2 * tri[r / 2] + r % 2;
                let gc = 2 * tri[c / 2] + c % 2;
                k[gr * n + gc] += ke[r][c];
            }
        }
    }
    Ok(k)
}

/// Assembles the reduced system: clamped dofs eliminated, contact-node dof
/// pairs rotated into (n, t). Fails with `SingularSystem` when the clamped
/// set leaves rigid modes.
pub fn assemble(mesh: &PlaneMesh, mat: &ElasticMaterial) -> Result<FemSystem, FemError> {
    let n_nodes = mesh.nodes().len();
    let mut dof_of: Vec<[Option<usize>; 2]> = vec![[None, None]; n_nodes];
    let mut next = 0usize;
    for node in 0..n_nodes {
        if mesh.is_clamped(node) {
            continue;
        }
        dof_of[node] = [Some(next), Some(next + 1)];
        next += 2;
    }
    let rotation = |node: usize| -> Option<&ContactNode> {
        mesh.gamma_c().iter().find(|c| c.node == node)
    };
    // Columns of the per-node basis: plane components of the reduced basis
    // vectors (n, t) for contact nodes, (x, y) otherwise.
    let basis = |node: usize| -> [[f64; 2]; 2] {
        match rotation(node) {
            Some(c) => [c.normal, c.tangent()],
            None => [[1.0, 0.0], [0.0, 1.0]],
        }
    };

    let mut m = DenseSym::zeros(next);
    for tri in mesh.triangles() {
        let ke = element_stiffness(
            mesh.nodes()[tri[0]],
            mesh.nodes()[tri[1]],
            mesh.nodes()[tri[2]],
            mat,
        )?;
        for (li, &ni) in tri.iter().enumerate() {
            let Some(di0) = dof_of[ni][0] else { continue };
            let bi = basis(ni);
            for (lj, &nj) in tri.iter().enumerate() {
                let Some(dj0) = dof_of[nj][0] else { continue };
                let bj = basis(nj);
                // Rotate the 2x2 nodal block: B_i^T K_e B_j.
                for a in 0..2 {
                    for b in 0..2 {
                        let mut acc = 0.0;
                        for p in 0..2 {
                            for q in 0..2 {
                                acc += bi[a][p] * ke[2 * li + p][2 * lj + q] * bj[b][q];
                            }
                        }
                        m.add(di0 + a, dj0 + b, acc);
                    }
                }
            }
        }
    }
    if m.n == 0 || !m.is_positive_definite() {
        return Err(FemError::SingularSystem);
    }
    let contacts: Vec<ContactDof> = mesh
        .gamma_c()
        .iter()
        .map(|c| ContactDof {
            node: c.node,
            gap: c.gap,
            dof_n: dof_of[c.node][0].expect("contact nodes are free"),
            dof_t: dof_of[c.node][1].expect("contact nodes are free"),
        })
        .collect();
    let mut coord_kind = vec![CoordKind::Free; next];
    for (j, c) in contacts.iter().enumerate() {
        coord_kind[c.dof_n] = CoordKind::ContactNormal(j);
        coord_kind[c.dof_t] = CoordKind::ContactTangent(j);
    }
    Ok(FemSystem { matrix: m, dof_of, contacts, coord_kind, n_nodes })
}

/// External loading of a mesh: a constant body force, constant tractions on
/// tagged edges, and direct nodal forces, all in the plane frame.
#[derive(Clone, Debug)]
pub struct FemLoad {
    pub volume: [f64; 2],
    pub edge_tractions: Vec<([usize; 2], [f64; 2])>,
    pub nodal: Vec<(usize, [f64; 2])>,
    /// Edge-traction weighting; the length-squared variant exists only to
    /// reproduce the alternative condensed-load convention.
    pub mode: super::LoadMode,
}

impl Default for FemLoad {
    fn default() -> Self {
        FemLoad {
            volume: [0.0, 0.0],
            edge_tractions: Vec::new(),
            nodal: Vec::new(),
            mode: super::LoadMode::VirtualWork,
        }
    }
}

impl FemLoad {
    /// The same constant traction on every gamma_t edge.
    pub fn uniform_traction(mesh: &PlaneMesh, traction: [f64; 2]) -> Self {
        FemLoad {
            edge_tractions: mesh
                .gamma_t_edges()
                .iter()
                .map(|e| (*e, traction))
                .collect(),
            ..FemLoad::default()
        }
    }
}

/// Consistent right-hand side for the reduced system: P1 lumping of the body
/// force (area/3 per vertex), half the traction resultant per edge endpoint,
/// plus nodal forces; contact-node entries rotated into (n, t).
pub fn assemble_load(mesh: &PlaneMesh, sys: &FemSystem, load: &FemLoad) -> Result<Vec<f64>, FemError> {
    let mut f_xy = vec![[0.0f64, 0.0f64]; mesh.nodes().len()];
    if load.volume != [0.0, 0.0] {
        for tri in mesh.triangles() {
            let area = 0.5
                * super::mesh::signed_double_area(
                    mesh.nodes()[tri[0]],
                    mesh.nodes()[tri[1]],
                    mesh.nodes()[tri[2]],
                );
            for &ni in tri {
                f_xy[ni][0] += load.volume[0] * area / 3.0;
                f_xy[ni][1] += load.volume[1] * area / 3.0;
            }
        }
    }
    for (edge, t) in &load.edge_tractions {
        let (a, c) = (mesh.nodes()[edge[0]], mesh.nodes()[edge[1]]);
        let len = (c[0] - a[0]).hypot(c[1] - a[1]);
        if len == 0.0 {
            return Err(FemError::DegenerateTriangle);
        }
        let w = match load.mode {
            super::LoadMode::VirtualWork => 0.5 * len,
            super::LoadMode::LengthSquared => 0.5 * len * len,
        };
        for &ni in edge {
            f_xy[ni][0] += w * t[0];
            f_xy[ni][1] += w * t[1];
        }
    }
    for (node, f) in &load.nodal {
        f_xy[*node][0] += f[0];
        f_xy[*node][1] += f[1];
    }
    Ok(sys.reduce(mesh, &f_xy))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fem::mesh::ContactNode;

    fn mat() -> ElasticMaterial {
        ElasticMaterial::new(1.0, 0.0).unwrap()
    }

    fn single_triangle(c_vertex: [f64; 2]) -> PlaneMesh {
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
    fn single_triangle_system_matches_condensed_stiffness() {
        let mesh = single_triangle([1.0, -1.0]);
        let sys = assemble(&mesh, &mat()).unwrap();
        assert_eq!(sys.n_dofs(), 2);
        let kc = crate::fem::triangle_condensed_stiffness(
            [-1.0, 0.0],
            [0.0, 0.0],
            [1.0, -1.0],
            &mat(),
        )
        .unwrap();
        // Normal dof is index 0 (n = +y), tangential index 1 (t = +x); the
        // reduced matrix is expressed in the unflipped plane tangent, so
        // compare against the raw (y, x) block.
        assert!((sys.matrix.at(0, 0) - kc.k_nn()).abs() < 1e-14);
        assert!((sys.matrix.at(1, 1) - kc.k_tt()).abs() < 1e-14);
        assert!((sys.matrix.at(0, 1).abs() - kc.k_nt()).abs() < 1e-14);
    }

    #[test]
    fn two_disjoint_triangles_are_block_diagonal() {
        let mesh = PlaneMesh::new(
            vec![
                [-1.0, 0.0], [0.0, 0.0], [0.0, -1.0],
                [9.0, 0.0], [10.0, 0.0], [10.0, -1.0],
            ],
            vec![[0, 2, 1], [3, 5, 4]],
            vec![1, 2, 4, 5],
            vec![[2, 0], [0, 1], [5, 3], [3, 4]],
            vec![],
        )
        .unwrap();
        let sys = assemble(&mesh, &mat()).unwrap();
        assert_eq!(sys.n_dofs(), 4);
        for a in 0..2 {
            for b in 2..4 {
                assert_eq!(sys.matrix.at(a, b), 0.0);
            }
        }
    }

    #[test]
    fn underclamped_mesh_is_singular() {
        // One clamped node leaves a rotational rigid mode.
        let mesh = PlaneMesh::new(
            vec![[-1.0, 0.0], [0.0, 0.0], [0.0, -1.0]],
            vec![[0, 2, 1]],
            vec![1],
            vec![[2, 0], [1, 2], [0, 1]],
            vec![],
        )
        .unwrap();
        assert!(matches!(assemble(&mesh, &mat()), Err(FemError::SingularSystem)));
    }

    #[test]
    fn patch_test_constant_strain_equilibrium() {
        // Four triangles around a center node; an affine displacement field
        // produces constant stress, so the interior node must be in
        // equilibrium.
        let nodes = vec![
            [0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0], [0.4, 0.55],
        ];
        let mesh = PlaneMesh::new(
            nodes.clone(),
            vec![[0, 1, 4], [1, 2, 4], [2, 3, 4], [3, 0, 4]],
            vec![0, 1, 2, 3],
            vec![],
            vec![],
        )
        .unwrap();
        let k = assemble_full(&mesh, &ElasticMaterial::new(2.7, 0.3).unwrap()).unwrap();
        let affine = |p: [f64; 2]| [0.3 * p[0] - 0.1 * p[1] + 0.05, 0.2 * p[0] + 0.4 * p[1]];
        let n = 2 * nodes.len();
        let mut u = vec![0.0; n];
        for (i, p) in nodes.iter().enumerate() {
            let v = affine(*p);
            u[2 * i] = v[0];
            u[2 * i + 1] = v[1];
        }
        let mut r = vec![0.0; n];
        for row in 0..n {
            r[row] = (0..n).map(|col| k[row * n + col] * u[col]).sum();
        }
        // Interior node 4: both components at rounding level.
        assert!(r[8].abs() < 1e-12, "{}", r[8]);
        assert!(r[9].abs() < 1e-12, "{}", r[9]);
    }

    #[test]
    fn assembled_energy_matches_element_energy() {
        let mesh = single_triangle([0.7, -1.3]);
        let sys = assemble(&mesh, &mat()).unwrap();
        let u_xy = [[0.3, -0.4], [0.0, 0.0], [0.0, 0.0]];
        let x = sys.reduce(&mesh, &u_xy);
        let mut kx = vec![0.0; sys.n_dofs()];
        sys.matrix.mul_vec(&x, &mut kx);
        let quad = x.iter().zip(&kx).map(|(a, b)| a * b).sum::<f64>();
        let ke = element_stiffness([-1.0, 0.0], [0.7, -1.3], [0.0, 0.0], &mat()).unwrap();
        let ue = [0.3, -0.4, 0.0, 0.0, 0.0, 0.0];
        let direct: f64 = (0..6)
            .map(|r| (0..6).map(|c| ue[r] * ke[r][c] * ue[c]).sum::<f64>())
            .sum();
        assert!((quad - direct).abs() < 1e-13);
        let back = sys.expand(&mesh, &x);
        assert!((back[0][0] - 0.3).abs() < 1e-15);
        assert!((back[0][1] + 0.4).abs() < 1e-15);
    }
}
