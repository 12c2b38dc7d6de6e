//! Hurty/Craig–Bampton reduction with polynomial interface modes.
//!
//! Coordinates of a component are ordered `[q_b; η_Γ; η]`: contact gaps (support
//! regions only), interface-mode amplitudes and fixed-interface normal modes.

use std::collections::HashMap;
use std::fs;
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fe::FullOrderModel;
use crate::interface::{InterfaceBasis, InterfaceColumn};
use crate::io;
use crate::linalg::{relative_asymmetry, solve_eigen, symmetrize, BandMatrix, Modes, SysMatrix};

/// Unit mass used for the normal-mode scaling `θᵀ(M_ii/kg)θ = 1` (M is stored in tonnes).
pub const KG: f64 = 1e-3;

/// Paired contact DOFs replaced by gap `g = u_block − u_panel` and mean `m` coordinates.
///
/// The gap takes the panel node's equation slot, the mean the block node's:
/// `u_panel = m − g/2`, `u_block = m + g/2`.
#[derive(Debug, Clone, PartialEq)]
pub struct GapTransform {
    /// `(panel eq, block eq)` per pair and direction, ordered pair-major.
    pub slots: Vec<(usize, usize)>,
}

impl GapTransform {
    /// `pairs` are `(panel node, block node)` in the model's node numbering.
    pub fn build(model: &FullOrderModel, pairs: &[(usize, usize)]) -> Result<Self> {
        let dofs = model.dofs();
        let mut seen = vec![false; model.mesh().n_nodes()];
        let mut slots = Vec::with_capacity(3 * pairs.len());
        for &(p, b) in pairs {
            for n in [p, b] {
                if n >= seen.len() || seen[n] {
                    return Err(Error::UnpairedContactNode(n));
                }
                seen[n] = true;
            }
            for d in 0..3 {
                match (dofs.eq(p, d), dofs.eq(b, d)) {
                    (Some(ep), Some(eb)) if ep != eb => slots.push((ep, eb)),
                    (None, _) | (Some(_), Some(_)) => return Err(Error::UnpairedContactNode(p)),
                    (Some(_), None) => return Err(Error::UnpairedContactNode(b)),
                }
            }
        }
        Ok(Self { slots })
    }

    /// Gap equation slots, pair-major.
    pub fn gap_slots(&self) -> Vec<usize> {
        self.slots.iter().map(|s| s.0).collect()
    }

    /// Absolute DOFs → (gap, mean) coordinates.
    pub fn to_relative(&self, q: &DVector<f64>) -> DVector<f64> {
        let mut r = q.clone();
        for &(p, b) in &self.slots {
            r[p] = q[b] - q[p];
            r[b] = 0.5 * (q[b] + q[p]);
        }
        r
    }

    /// (gap, mean) coordinates → absolute DOFs.
    pub fn to_absolute(&self, r: &DVector<f64>) -> DVector<f64> {
        let mut q = r.clone();
        for &(p, b) in &self.slots {
            q[p] = r[b] - 0.5 * r[p];
            q[b] = r[b] + 0.5 * r[p];
        }
        q
    }

    fn max_distance(&self) -> usize {
        self.slots.iter().map(|&(p, b)| p.abs_diff(b)).max().unwrap_or(0)
    }

    /// `Gᵀ A G` for the change of variables `q = G r`.
    pub fn transform_matrix(&self, a: &BandMatrix) -> BandMatrix {
        let d = self.max_distance();
        let mut w = a.widened(a.lower() + 2 * d, a.upper() + 2 * d);
        let n = w.n();
        for &(p, b) in &self.slots {
            // columns: new_p = −½ a_p + ½ a_b, new_b = a_p + a_b
            for i in 0..n {
                let (ap, ab) = (w.get(i, p), w.get(i, b));
                if ap == 0.0 && ab == 0.0 {
                    continue;
                }
                w.set(i, p, 0.5 * (ab - ap));
                w.set(i, b, ap + ab);
            }
            for j in 0..n {
                let (ap, ab) = (w.get(p, j), w.get(b, j));
                if ap == 0.0 && ab == 0.0 {
                    continue;
                }
                w.set(p, j, 0.5 * (ab - ap));
                w.set(b, j, ap + ab);
            }
        }
        w
    }

    /// `Gᵀ f` for a force vector.
    pub fn transform_force(&self, f: &DVector<f64>) -> DVector<f64> {
        let mut r = f.clone();
        for &(p, b) in &self.slots {
            r[p] = 0.5 * (f[b] - f[p]);
            r[b] = f[p] + f[b];
        }
        r
    }
}

/// Mirror image of free DOFs under reflection `y → −y`.
#[derive(Debug, Clone)]
pub struct DofMirror {
    /// Mirror equation and sign per equation.
    pub map: Vec<(usize, f64)>,
}

impl DofMirror {
    pub fn build(model: &FullOrderModel) -> Result<Self> {
        let mesh = model.mesh();
        let key = |x: &nalgebra::Vector3<f64>| {
            let s = 1e6;
            ((x[0] * s).round() as i64, (x[1] * s).round() as i64, (x[2] * s).round() as i64)
        };
        let lookup: HashMap<_, usize> = mesh.nodes.iter().enumerate().map(|(i, x)| (key(x), i)).collect();
        let dofs = model.dofs();
        let mut map = vec![(usize::MAX, 0.0); model.n_dofs()];
        for (n, x) in mesh.nodes.iter().enumerate() {
            let mut xm = *x;
            xm[1] = -xm[1];
            let m = *lookup
                .get(&key(&xm))
                .ok_or_else(|| Error::Mesh(format!("node {n} has no mirror image")))?;
            for d in 0..3 {
                match (dofs.eq(n, d), dofs.eq(m, d)) {
                    (Some(e), Some(em)) => map[e] = (em, if d == 1 { -1.0 } else { 1.0 }),
                    (None, None) => {}
                    _ => return Err(Error::Mesh(format!("constraints of node {n} are not mirror-symmetric"))),
                }
            }
        }
        Ok(Self { map })
    }

    pub fn apply(&self, v: &DVector<f64>) -> DVector<f64> {
        let mut out = DVector::zeros(v.len());
        for (e, &(m, s)) in self.map.iter().enumerate() {
            out[m] = s * v[e];
        }
        out
    }

    /// `‖Pv − v‖ ≤ ‖v‖/2`, i.e. the field is predominantly even.
    pub fn is_symmetric(&self, v: &DVector<f64>) -> bool {
        (self.apply(v) - v).norm() <= 0.5 * v.norm()
    }
}

/// Disjoint, exhaustive split of component coordinates.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DofPartition {
    pub n: usize,
    pub boundary: Vec<usize>,
    /// Interface equations in interface-node order, three per node.
    pub interface: Vec<usize>,
    /// Remaining equations, ascending.
    pub internal: Vec<usize>,
}

impl DofPartition {
    pub fn new(n: usize, boundary: Vec<usize>, interface: Vec<usize>) -> Result<Self> {
        let mut used = vec![false; n];
        for &e in boundary.iter().chain(&interface) {
            if e >= n || used[e] {
                return Err(Error::Parameter(format!("equation {e} is out of range or listed twice")));
            }
            used[e] = true;
        }
        let internal = (0..n).filter(|&e| !used[e]).collect();
        Ok(Self {
            n,
            boundary,
            interface,
            internal,
        })
    }

    /// Interface equations of `nodes` (all must be free).
    pub fn interface_eqs(model: &FullOrderModel, nodes: &[usize]) -> Result<Vec<usize>> {
        let mut out = Vec::with_capacity(3 * nodes.len());
        for &n in nodes {
            for (d, e) in model.dofs().node_eqs(n).into_iter().enumerate() {
                out.push(e.ok_or_else(|| {
                    Error::InterfaceMismatch(format!("interface node {n} is constrained in direction {d}"))
                })?);
            }
        }
        Ok(out)
    }
}

/// Options for the normal-mode set.
#[derive(Debug, Clone, Copy, Default)]
pub struct ModeSelection {
    pub count: usize,
    /// Optional `(low, high)` band in Hz; modes outside are skipped.
    pub band_hz: Option<(f64, f64)>,
}

/// Reduction basis `T` with the block layout
/// `[I 0 0; 0 Γ 0; Ψ_b Ψ_Γ·Γ Θ]` (rows in `b, Γ, i` partitions).
#[derive(Debug, Clone)]
pub struct ComponentBasis {
    pub partition: DofPartition,
    /// `n × (B + M_Γ + M)`, rows in the component's equation numbering.
    pub t: DMatrix<f64>,
    pub theta: DMatrix<f64>,
    pub psi_b: DMatrix<f64>,
    pub psi_gamma: DMatrix<f64>,
    pub gamma: DMatrix<f64>,
    /// Fixed-interface angular frequencies of the retained modes (rad/s).
    pub omegas: Vec<f64>,
    pub interface_columns: Vec<InterfaceColumn>,
}

impl ComponentBasis {
    pub fn n_boundary(&self) -> usize {
        self.partition.boundary.len()
    }

    pub fn n_interface(&self) -> usize {
        self.gamma.ncols()
    }

    pub fn n_modes(&self) -> usize {
        self.theta.ncols()
    }

    pub fn dim(&self) -> usize {
        self.t.ncols()
    }
}

/// Builds `T` from `K`, `M` in the partition's coordinates.
///
/// `filter` sees each candidate normal mode as a full-length vector (zero on `b` and `Γ`).
pub fn compute_component_basis(
    k: &BandMatrix,
    m: &BandMatrix,
    partition: &DofPartition,
    interface: &InterfaceBasis,
    modes: ModeSelection,
    filter: Option<&dyn Fn(&DVector<f64>) -> bool>,
) -> Result<ComponentBasis> {
    let n = partition.n;
    if k.n() != n || m.n() != n {
        return Err(Error::Dimension {
            what: "component matrices",
            expected: n,
            got: k.n(),
        });
    }
    let gamma = &interface.gamma;
    if gamma.nrows() != partition.interface.len() {
        return Err(Error::Dimension {
            what: "interface basis rows",
            expected: partition.interface.len(),
            got: gamma.nrows(),
        });
    }
    let ii = &partition.internal;
    let kii = k.submatrix(ii);
    let lu = kii.lu()?;
    let nb = partition.boundary.len();
    let ng = gamma.ncols();
    let mut rhs = DMatrix::zeros(ii.len(), nb + ng);
    if nb > 0 {
        rhs.columns_mut(0, nb).copy_from(&(-k.block(ii, &partition.boundary)));
    }
    if ng > 0 {
        rhs.columns_mut(nb, ng)
            .copy_from(&(-(k.block(ii, &partition.interface) * gamma)));
    }
    let psi = lu.solve_matrix(&rhs);
    let psi_b = psi.columns(0, nb).into_owned();
    let psi_gamma = psi.columns(nb, ng).into_owned();

    let theta_modes = normal_modes(&kii, &m.submatrix(ii), ii, n, modes, filter)?;
    let nm = theta_modes.len();
    let theta = &theta_modes.shapes * KG.sqrt();

    let mut t = DMatrix::zeros(n, nb + ng + nm);
    for (c, &e) in partition.boundary.iter().enumerate() {
        t[(e, c)] = 1.0;
    }
    for (r, &e) in partition.interface.iter().enumerate() {
        for c in 0..ng {
            t[(e, nb + c)] = gamma[(r, c)];
        }
    }
    for (r, &e) in ii.iter().enumerate() {
        for c in 0..nb {
            t[(e, c)] = psi_b[(r, c)];
        }
        for c in 0..ng {
            t[(e, nb + c)] = psi_gamma[(r, c)];
        }
        for c in 0..nm {
            t[(e, nb + ng + c)] = theta[(r, c)];
        }
    }
    Ok(ComponentBasis {
        partition: partition.clone(),
        t,
        omegas: theta_modes.omegas(),
        theta,
        psi_b,
        psi_gamma,
        gamma: gamma.clone(),
        interface_columns: interface.columns.clone(),
    })
}

fn normal_modes(
    kii: &BandMatrix,
    mii: &BandMatrix,
    ii: &[usize],
    n: usize,
    sel: ModeSelection,
    filter: Option<&dyn Fn(&DVector<f64>) -> bool>,
) -> Result<Modes> {
    let ni = ii.len();
    if sel.count > ni {
        return Err(Error::Parameter(format!(
            "requested {} normal modes, internal partition has {ni} DOFs",
            sel.count
        )));
    }
    let (ks, ms) = (SysMatrix::Band(kii.clone()), SysMatrix::Band(mii.clone()));
    let unfiltered = filter.is_none() && sel.band_hz.is_none();
    let mut request = if unfiltered { sel.count } else { (2 * sel.count + 8).min(ni) };
    loop {
        let mut modes = solve_eigen(&ks, &ms, request)?;
        let full = |v: &DVector<f64>| {
            let mut x = DVector::zeros(n);
            for (r, &e) in ii.iter().enumerate() {
                x[e] = v[r];
            }
            x
        };
        let two_pi = 2.0 * std::f64::consts::PI;
        let omegas = modes.omegas();
        let top = omegas.last().copied().unwrap_or(0.0) / two_pi;
        modes.retain(|j, v| {
            let f = omegas[j] / two_pi;
            let in_band = sel.band_hz.is_none_or(|(lo, hi)| f >= lo && f <= hi);
            in_band && filter.is_none_or(|keep| keep(&full(v)))
        });
        let band_exhausted = sel.band_hz.is_some_and(|(_, hi)| top > hi);
        if modes.len() >= sel.count || request == ni || band_exhausted {
            if modes.len() < sel.count {
                return Err(Error::Parameter(format!(
                    "only {} normal modes pass the selection, {} requested",
                    modes.len(),
                    sel.count
                )));
            }
            modes.truncate(sel.count);
            return Ok(modes);
        }
        request = (2 * request).min(ni);
    }
}

/// Region kind of a reduced component.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RegionKind {
    Support,
    ThinWalled,
}

/// `M̃ = TᵀMT`, `K̃ = TᵀKT` together with the basis.
#[derive(Debug, Clone)]
pub struct ReducedComponent {
    pub kind: RegionKind,
    pub basis: ComponentBasis,
    pub mass: DMatrix<f64>,
    pub stiffness: DMatrix<f64>,
}

pub fn reduce_component(
    kind: RegionKind,
    k: &BandMatrix,
    m: &BandMatrix,
    basis: ComponentBasis,
) -> Result<ReducedComponent> {
    if k.n() != basis.t.nrows() {
        return Err(Error::Dimension {
            what: "basis rows",
            expected: k.n(),
            got: basis.t.nrows(),
        });
    }
    let t = &basis.t;
    let mut mass = t.transpose() * m.mul_dense(t);
    let mut stiffness = t.transpose() * k.mul_dense(t);
    debug_assert!(relative_asymmetry(&mass) < 1e-8 && relative_asymmetry(&stiffness) < 1e-8);
    symmetrize(&mut mass);
    symmetrize(&mut stiffness);
    Ok(ReducedComponent {
        kind,
        basis,
        mass,
        stiffness,
    })
}

impl ReducedComponent {
    pub fn dim(&self) -> usize {
        self.mass.nrows()
    }

    /// `Tᵀ f` for a force on the component's equations.
    pub fn project_force(&self, f: &DVector<f64>) -> DVector<f64> {
        self.basis.t.tr_mul(f)
    }

    /// `T q̃` back on the component's equations.
    pub fn expand(&self, q: &DVector<f64>) -> DVector<f64> {
        &self.basis.t * q
    }

    /// Writes `metadata.toml` plus Matrix Market files into `dir`.
    pub fn save(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir)?;
        let b = &self.basis;
        let meta = ContainerMeta {
            kind: self.kind,
            n_dofs: b.partition.n,
            boundary: b.partition.boundary.clone(),
            interface: b.partition.interface.clone(),
            omegas: b.omegas.clone(),
            interface_columns: b.interface_columns.iter().map(ColumnMeta::from).collect(),
        };
        let text = toml::to_string(&meta).map_err(|e| Error::Parameter(e.to_string()))?;
        io::write_text(
            &dir.join("metadata.toml"),
            &format!("# reduced component; lengths mm, forces N, mass t, frequencies rad/s\n{text}"),
        )?;
        io::write_text(&dir.join("t.mtx"), &io::dense_to_mtx(&b.t))?;
        io::write_text(&dir.join("gamma.mtx"), &io::dense_to_mtx(&b.gamma))?;
        io::write_text(&dir.join("mass.mtx"), &io::dense_to_mtx(&self.mass))?;
        io::write_text(&dir.join("stiffness.mtx"), &io::dense_to_mtx(&self.stiffness))?;
        Ok(())
    }

    pub fn load(dir: &Path) -> Result<Self> {
        let path = dir.join("metadata.toml");
        let text = fs::read_to_string(&path)?;
        let meta: ContainerMeta = toml::from_str(&text).map_err(|e| Error::Parse {
            path: path.clone(),
            message: e.to_string(),
        })?;
        let t = io::read_mtx(&dir.join("t.mtx"))?;
        let gamma = io::read_mtx(&dir.join("gamma.mtx"))?;
        let mass = io::read_mtx(&dir.join("mass.mtx"))?;
        let stiffness = io::read_mtx(&dir.join("stiffness.mtx"))?;
        let partition = DofPartition::new(meta.n_dofs, meta.boundary, meta.interface)?;
        let (nb, ng) = (partition.boundary.len(), gamma.ncols());
        if t.nrows() != meta.n_dofs || t.ncols() < nb + ng || mass.nrows() != t.ncols() {
            return Err(Error::Parse {
                path,
                message: "matrix sizes disagree with metadata".into(),
            });
        }
        let nm = t.ncols() - nb - ng;
        let ii = &partition.internal;
        let rows = |c0: usize, nc: usize| DMatrix::from_fn(ii.len(), nc, |r, c| t[(ii[r], c0 + c)]);
        let basis = ComponentBasis {
            psi_b: rows(0, nb),
            psi_gamma: rows(nb, ng),
            theta: rows(nb + ng, nm),
            t: t.clone(),
            gamma,
            omegas: meta.omegas,
            interface_columns: meta.interface_columns.iter().map(|c| c.into()).collect(),
            partition,
        };
        Ok(Self {
            kind: meta.kind,
            basis,
            mass,
            stiffness,
        })
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct ColumnMeta {
    a: usize,
    b: usize,
    direction: usize,
    rigid: bool,
}

impl From<&InterfaceColumn> for ColumnMeta {
    fn from(c: &InterfaceColumn) -> Self {
        Self {
            a: c.a,
            b: c.b,
            direction: c.direction,
            rigid: c.rigid,
        }
    }
}

impl From<&ColumnMeta> for InterfaceColumn {
    fn from(c: &ColumnMeta) -> Self {
        Self {
            a: c.a,
            b: c.b,
            direction: c.direction,
            rigid: c.rigid,
        }
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct ContainerMeta {
    kind: RegionKind,
    n_dofs: usize,
    boundary: Vec<usize>,
    interface: Vec<usize>,
    omegas: Vec<f64>,
    interface_columns: Vec<ColumnMeta>,
}
