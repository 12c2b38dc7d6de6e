use nalgebra::{DVector, Matrix3, Vector3};

use super::hex8::{self, ElementGeometry, ElementMatrix, ElementVector};
use super::material::Material;
use super::mesh::Mesh;
use crate::error::{Error, Result};
use crate::linalg::BandMatrix;

/// Displacement constraints of a full-order model.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Constraints {
    /// `(node, direction)` pairs held at zero.
    pub fixed: Vec<(usize, usize)>,
    /// Node pairs sharing all three displacement components (tied contact).
    pub ties: Vec<(usize, usize)>,
    /// Node pairs that external operators (contact) will couple; widens the band.
    pub coupled: Vec<(usize, usize)>,
}

impl Constraints {
    pub fn fix_nodes(&mut self, nodes: &[usize], directions: &[usize]) {
        for &n in nodes {
            for &d in directions {
                self.fixed.push((n, d));
            }
        }
    }
}

/// Map from `(node, direction)` to equation number; `None` for constrained components.
#[derive(Debug, Clone, PartialEq)]
pub struct DofMap {
    eq: Vec<[Option<usize>; 3]>,
    n_free: usize,
}

impl DofMap {
    pub fn build(n_nodes: usize, constraints: &Constraints) -> Result<Self> {
        let mut parent: Vec<usize> = (0..n_nodes).collect();
        fn find(p: &mut [usize], mut a: usize) -> usize {
            while p[a] != a {
                p[a] = p[p[a]];
                a = p[a];
            }
            a
        }
        for &(a, b) in &constraints.ties {
            if a >= n_nodes || b >= n_nodes {
                return Err(Error::Mesh(format!("tie ({a}, {b}) references a missing node")));
            }
            let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
            if ra != rb {
                parent[ra.max(rb)] = ra.min(rb);
            }
        }
        let mut fixed_root = vec![[false; 3]; n_nodes];
        for &(n, d) in &constraints.fixed {
            if n >= n_nodes || d > 2 {
                return Err(Error::Mesh(format!("constraint ({n}, {d}) is invalid")));
            }
            let r = find(&mut parent, n);
            fixed_root[r][d] = true;
        }
        let mut eq = vec![[None; 3]; n_nodes];
        let mut n_free = 0;
        for node in 0..n_nodes {
            let r = find(&mut parent, node);
            for d in 0..3 {
                if fixed_root[r][d] {
                    continue;
                }
                if r == node {
                    eq[node][d] = Some(n_free);
                    n_free += 1;
                } else {
                    eq[node][d] = eq[r][d];
                }
            }
        }
        Ok(Self { eq, n_free })
    }

    pub fn n_free(&self) -> usize {
        self.n_free
    }

    pub fn n_nodes(&self) -> usize {
        self.eq.len()
    }

    pub fn eq(&self, node: usize, dir: usize) -> Option<usize> {
        self.eq[node][dir]
    }

    pub fn node_eqs(&self, node: usize) -> [Option<usize>; 3] {
        self.eq[node]
    }

    pub fn element_eqs(&self, conn: &[usize; 8]) -> [Option<usize>; 24] {
        let mut out = [None; 24];
        for (a, &n) in conn.iter().enumerate() {
            out[3 * a..3 * a + 3].copy_from_slice(&self.eq[n]);
        }
        out
    }
}

/// Geometrically nonlinear full-order model of one region (or of the whole structure).
///
/// Immutable after construction and `Sync`; static solves keep their own work state.
#[derive(Debug, Clone)]
pub struct FullOrderModel {
    mesh: Mesh,
    material: Material,
    constraints: Constraints,
    geometry: Vec<ElementGeometry>,
    dofs: DofMap,
    half_bandwidth: usize,
    mass: BandMatrix,
    stiffness: BandMatrix,
}

impl FullOrderModel {
    pub fn new(mesh: Mesh, material: Material, constraints: Constraints) -> Result<Self> {
        material.validate()?;
        mesh.validate()?;
        let geometry = (0..mesh.n_elements())
            .map(|e| {
                ElementGeometry::new(&mesh.element_coords(e))
                    .map_err(|det| Error::ElementInversion { element: e, det_f: det })
            })
            .collect::<Result<Vec<_>>>()?;
        let dofs = DofMap::build(mesh.n_nodes(), &constraints)?;
        let mut hb = 0;
        for conn in &mesh.elements {
            let eqs: Vec<usize> = dofs.element_eqs(conn).iter().flatten().copied().collect();
            if let (Some(lo), Some(hi)) = (eqs.iter().min(), eqs.iter().max()) {
                hb = hb.max(hi - lo);
            }
        }
        for &(a, b) in &constraints.coupled {
            let eqs: Vec<usize> = dofs
                .node_eqs(a)
                .iter()
                .chain(dofs.node_eqs(b).iter())
                .flatten()
                .copied()
                .collect();
            if let (Some(lo), Some(hi)) = (eqs.iter().min(), eqs.iter().max()) {
                hb = hb.max(hi - lo);
            }
        }
        let n = dofs.n_free();
        let mut mass = BandMatrix::symmetric_zeros(n, hb);
        let mut stiffness = BandMatrix::symmetric_zeros(n, hb);
        let rho = material.mass_density();
        for (e, conn) in mesh.elements.iter().enumerate() {
            let eqs = dofs.element_eqs(conn);
            scatter_matrix(&mut mass, &eqs, &hex8::consistent_mass(&geometry[e], rho));
            scatter_matrix(&mut stiffness, &eqs, &hex8::linear_stiffness(&geometry[e], &material));
        }
        Ok(Self {
            mesh,
            material,
            constraints,
            geometry,
            dofs,
            half_bandwidth: hb,
            mass,
            stiffness,
        })
    }

    /// Same mesh and material with different constraints.
    pub fn with_constraints(&self, constraints: Constraints) -> Result<Self> {
        Self::new(self.mesh.clone(), self.material, constraints)
    }

    pub fn mesh(&self) -> &Mesh {
        &self.mesh
    }

    pub fn material(&self) -> &Material {
        &self.material
    }

    pub fn constraints(&self) -> &Constraints {
        &self.constraints
    }

    pub fn dofs(&self) -> &DofMap {
        &self.dofs
    }

    pub fn n_dofs(&self) -> usize {
        self.dofs.n_free()
    }

    pub fn half_bandwidth(&self) -> usize {
        self.half_bandwidth
    }

    /// Consistent mass in N·s²/mm.
    pub fn mass(&self) -> &BandMatrix {
        &self.mass
    }

    /// Linear stiffness in N/mm.
    pub fn stiffness(&self) -> &BandMatrix {
        &self.stiffness
    }

    fn check_len(&self, q: &DVector<f64>) -> Result<()> {
        if q.len() != self.n_dofs() {
            return Err(Error::Dimension {
                what: "displacement vector",
                expected: self.n_dofs(),
                got: q.len(),
            });
        }
        Ok(())
    }

    fn element_displacements(&self, q: &DVector<f64>, e: usize) -> [Vector3<f64>; 8] {
        let conn = &self.mesh.elements[e];
        conn.map(|n| self.node_displacement(q, n))
    }

    pub fn node_displacement(&self, q: &DVector<f64>, node: usize) -> Vector3<f64> {
        let eq = self.dofs.node_eqs(node);
        Vector3::from_fn(|d, _| eq[d].map_or(0.0, |i| q[i]))
    }

    /// Nodal displacement field of a free-DOF vector.
    pub fn node_displacements(&self, q: &DVector<f64>) -> Vec<Vector3<f64>> {
        (0..self.mesh.n_nodes()).map(|n| self.node_displacement(q, n)).collect()
    }

    /// Free-DOF vector from a nodal field; constrained components are dropped.
    pub fn gather(&self, u: &[Vector3<f64>]) -> DVector<f64> {
        let mut q = DVector::zeros(self.n_dofs());
        for (n, un) in u.iter().enumerate() {
            for d in 0..3 {
                if let Some(i) = self.dofs.eq(n, d) {
                    q[i] = un[d];
                }
            }
        }
        q
    }

    /// Nodal load vector from per-node forces; forces on constrained components are dropped.
    pub fn load_vector(&self, forces: &[(usize, Vector3<f64>)]) -> DVector<f64> {
        let mut f = DVector::zeros(self.n_dofs());
        for (n, fn_) in forces {
            for d in 0..3 {
                if let Some(i) = self.dofs.eq(*n, d) {
                    f[i] += fn_[d];
                }
            }
        }
        f
    }

    fn evaluate(&self, q: &DVector<f64>, with_tangent: bool) -> Result<(DVector<f64>, Option<BandMatrix>)> {
        self.evaluate_mixed(q, with_tangent, None)
    }

    fn evaluate_mixed(
        &self,
        q: &DVector<f64>,
        with_tangent: bool,
        nonlinear: Option<&[bool]>,
    ) -> Result<(DVector<f64>, Option<BandMatrix>)> {
        self.check_len(q)?;
        let n = self.n_dofs();
        let mut f = DVector::zeros(n);
        let mut kt = with_tangent.then(|| BandMatrix::symmetric_zeros(n, self.half_bandwidth));
        for (e, conn) in self.mesh.elements.iter().enumerate() {
            let u = self.element_displacements(q, e);
            if nonlinear.is_some_and(|nl| !nl[e]) {
                let ke = hex8::linear_stiffness(&self.geometry[e], &self.material);
                let ue = ElementVector::from_fn(|i, _| u[i / 3][i % 3]);
                let eqs = self.dofs.element_eqs(conn);
                scatter_vector(&mut f, &eqs, &(ke * ue));
                if let Some(k) = kt.as_mut() {
                    scatter_matrix(k, &eqs, &ke);
                }
                continue;
            }
            let ev = hex8::svk_element(&self.geometry[e], &u, &self.material, with_tangent);
            if !(ev.min_det_f > 0.0) {
                return Err(Error::ElementInversion {
                    element: e,
                    det_f: ev.min_det_f,
                });
            }
            let eqs = self.dofs.element_eqs(conn);
            scatter_vector(&mut f, &eqs, &ev.force);
            if let (Some(k), Some(ke)) = (kt.as_mut(), ev.tangent.as_ref()) {
                scatter_matrix(k, &eqs, ke);
            }
        }
        Ok((f, kt))
    }

    /// Total internal force `f_int(q)` in N.
    pub fn internal_force(&self, q: &DVector<f64>) -> Result<DVector<f64>> {
        Ok(self.evaluate(q, false)?.0)
    }

    /// Internal force and its exact derivative.
    pub fn internal_force_and_tangent(&self, q: &DVector<f64>) -> Result<(DVector<f64>, BandMatrix)> {
        let (f, k) = self.evaluate(q, true)?;
        Ok((f, k.expect("tangent requested")))
    }

    /// As [`Self::internal_force_and_tangent`] with elements flagged `false` kept linear.
    pub fn internal_force_and_tangent_mixed(
        &self,
        q: &DVector<f64>,
        nonlinear: &[bool],
    ) -> Result<(DVector<f64>, BandMatrix)> {
        if nonlinear.len() != self.mesh.n_elements() {
            return Err(Error::Dimension {
                what: "element nonlinearity flags",
                expected: self.mesh.n_elements(),
                got: nonlinear.len(),
            });
        }
        let (f, k) = self.evaluate_mixed(q, true, Some(nonlinear))?;
        Ok((f, k.expect("tangent requested")))
    }

    /// Geometrically nonlinear part `h = f_int − K q`.
    pub fn geometric_force(&self, q: &DVector<f64>) -> Result<DVector<f64>> {
        Ok(self.internal_force(q)? - self.stiffness.mul_vec(q))
    }

    /// Stored elastic energy in N·mm.
    pub fn strain_energy(&self, q: &DVector<f64>) -> Result<f64> {
        self.check_len(q)?;
        Ok((0..self.mesh.n_elements())
            .map(|e| hex8::svk_energy(&self.geometry[e], &self.element_displacements(q, e), &self.material))
            .sum())
    }

    /// Stored energy with elements flagged `false` kept linear.
    pub fn strain_energy_mixed(&self, q: &DVector<f64>, nonlinear: &[bool]) -> Result<f64> {
        self.check_len(q)?;
        Ok((0..self.mesh.n_elements())
            .map(|e| {
                let u = self.element_displacements(q, e);
                if nonlinear[e] {
                    hex8::svk_energy(&self.geometry[e], &u, &self.material)
                } else {
                    let ue = ElementVector::from_fn(|i, _| u[i / 3][i % 3]);
                    0.5 * ue.dot(&(hex8::linear_stiffness(&self.geometry[e], &self.material) * ue))
                }
            })
            .sum())
    }

    /// Initial-stress stiffness from the small-strain stress of `q_lin`.
    pub fn geometric_stiffness(&self, q_lin: &DVector<f64>) -> Result<BandMatrix> {
        self.check_len(q_lin)?;
        let mut kg = BandMatrix::symmetric_zeros(self.n_dofs(), self.half_bandwidth);
        for (e, conn) in self.mesh.elements.iter().enumerate() {
            let u = self.element_displacements(q_lin, e);
            let geo = &self.geometry[e];
            let stress: [Matrix3<f64>; 8] = std::array::from_fn(|g| {
                hex8::linear_stress(&hex8::displacement_gradient(geo, g, &u), &self.material)
            });
            scatter_matrix(&mut kg, &self.dofs.element_eqs(conn), &hex8::geometric_stiffness(geo, &stress));
        }
        Ok(kg)
    }

    /// Largest quadrature-point von Mises stress of the second Piola–Kirchhoff tensor (MPa),
    /// with the element where it occurs.
    pub fn max_von_mises(&self, q: &DVector<f64>) -> Result<(f64, usize)> {
        self.check_len(q)?;
        let mut best = (0.0, 0);
        for e in 0..self.mesh.n_elements() {
            let u = self.element_displacements(q, e);
            for g in 0..8 {
                let h = hex8::displacement_gradient(&self.geometry[e], g, &u);
                let (_, s) = hex8::svk_stress(&h, &self.material);
                let vm = hex8::von_mises(&s);
                if vm > best.0 {
                    best = (vm, e);
                }
            }
        }
        Ok(best)
    }

    /// Volume of the mesh in mm³.
    pub fn volume(&self) -> f64 {
        self.geometry.iter().map(ElementGeometry::volume).sum()
    }
}

fn scatter_vector(f: &mut DVector<f64>, eqs: &[Option<usize>; 24], fe: &ElementVector) {
    for (a, ia) in eqs.iter().enumerate() {
        if let Some(i) = ia {
            f[*i] += fe[a];
        }
    }
}

fn scatter_matrix(k: &mut BandMatrix, eqs: &[Option<usize>; 24], ke: &ElementMatrix) {
    for (a, ia) in eqs.iter().enumerate() {
        let Some(i) = ia else { continue };
        for (b, jb) in eqs.iter().enumerate() {
            if let Some(j) = jb {
                k.add(*i, *j, ke[(a, b)]);
            }
        }
    }
}
