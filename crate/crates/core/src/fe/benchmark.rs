//! Clamped thin panel benchmark.
//!
//! The panel occupies `x ∈ [0, Lf + Lc]`, `y ∈ [−W/2, W/2]`, `z ∈ [0, t]`, with
//! `x = 0` a symmetry plane. Over `x ∈ [Lf, Lf + Lc]` it rests on a support block
//! `z ∈ [−H, 0]` whose base is fixed. Panel bottom and block top carry distinct,
//! coincident nodes forming the contact pairs. The substructure interface is the
//! panel cross-section `interface_rows` element rows before the clamp edge; the
//! thin-walled region lies on the symmetry-plane side of it, the support region
//! (remaining panel plus block) on the other.
//!
//! Global nodes are ordered lexicographically by `(ix, iy, level)` where the
//! block z-levels precede the panel z-levels at every `ix`.

use nalgebra::Vector3;

use super::material::Material;
use super::mesh::{sets, Mesh};
use super::model::{Constraints, FullOrderModel};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct BenchmarkParams {
    /// Panel thickness t (mm).
    pub thickness: f64,
    /// Panel width W (mm).
    pub width: f64,
    /// Free half-length Lf from the symmetry plane to the clamp edge (mm).
    pub free_length: f64,
    /// Clamped length Lc (mm).
    pub clamp_length: f64,
    /// Support block height H (mm).
    pub block_height: f64,
    pub nx_free: usize,
    pub nx_clamp: usize,
    /// Elements across the width; must be even so a node row lies on y = 0.
    pub ny: usize,
    pub nz: usize,
    pub nz_block: usize,
    /// Element rows of the free panel assigned to the support region.
    pub interface_rows: usize,
    /// Size of the first free-panel element over the last (1 = uniform; > 1 refines towards the clamp).
    pub grading_ratio: f64,
}

impl Default for BenchmarkParams {
    fn default() -> Self {
        Self {
            thickness: 1.5,
            width: 20.0,
            free_length: 60.0,
            clamp_length: 15.0,
            block_height: 10.0,
            nx_free: 16,
            nx_clamp: 4,
            ny: 2,
            nz: 1,
            nz_block: 2,
            interface_rows: 1,
            grading_ratio: 1.0,
        }
    }
}

impl BenchmarkParams {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("thickness", self.thickness),
            ("width", self.width),
            ("free_length", self.free_length),
            ("clamp_length", self.clamp_length),
            ("block_height", self.block_height),
            ("grading_ratio", self.grading_ratio),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Geometry(format!("{name} must be positive, got {v}")));
            }
        }
        for (name, v) in [
            ("nx_free", self.nx_free),
            ("nx_clamp", self.nx_clamp),
            ("ny", self.ny),
            ("nz", self.nz),
            ("nz_block", self.nz_block),
            ("interface_rows", self.interface_rows),
        ] {
            if v < 1 {
                return Err(Error::Mesh(format!("{name} must be at least 1")));
            }
        }
        if !self.ny.is_multiple_of(2) {
            return Err(Error::Mesh("ny must be even".into()));
        }
        if self.interface_rows + 2 > self.nx_free {
            return Err(Error::Mesh(format!(
                "interface_rows = {} leaves fewer than two thin-walled element rows",
                self.interface_rows
            )));
        }
        Ok(())
    }

    /// x-coordinates of the panel node rows.
    pub fn x_coords(&self) -> Vec<f64> {
        let n = self.nx_free;
        let q = if n > 1 {
            self.grading_ratio.powf(-1.0 / (n as f64 - 1.0))
        } else {
            1.0
        };
        let sizes: Vec<f64> = (0..n).map(|k| q.powi(k as i32)).collect();
        let total: f64 = sizes.iter().sum();
        let mut xs = vec![0.0];
        let mut acc = 0.0;
        for s in &sizes[..n - 1] {
            acc += s / total * self.free_length;
            xs.push(acc);
        }
        xs.push(self.free_length);
        for k in 1..=self.nx_clamp {
            xs.push(self.free_length + self.clamp_length * k as f64 / self.nx_clamp as f64);
        }
        xs
    }

    pub fn y_coords(&self) -> Vec<f64> {
        (0..=self.ny)
            .map(|j| -0.5 * self.width + self.width * j as f64 / self.ny as f64)
            .collect()
    }

    /// Row index of the substructure interface.
    pub fn interface_row(&self) -> usize {
        self.nx_free - self.interface_rows
    }
}

/// One region of the benchmark with its own node numbering.
#[derive(Debug, Clone)]
pub struct Region {
    pub mesh: Mesh,
    /// Global node id of each local node.
    pub to_global: Vec<usize>,
}

impl Region {
    /// Local id of a global node, if present.
    pub fn local(&self, global: usize) -> Option<usize> {
        self.to_global.binary_search(&global).ok()
    }
}

/// Contact pairs between panel bottom and block top.
#[derive(Debug, Clone)]
pub struct ContactLayout {
    /// `(panel node, block node)` in global numbering.
    pub pairs: Vec<(usize, usize)>,
    /// Tributary area of each pair (mm²).
    pub weights: Vec<f64>,
    /// In-plane coordinates `(x, y)` of each pair (mm).
    pub xy: Vec<[f64; 2]>,
}

#[derive(Debug, Clone)]
pub struct Benchmark {
    pub params: BenchmarkParams,
    pub material: Material,
    /// Whole structure in global numbering.
    pub mesh: Mesh,
    pub thin: Region,
    pub support: Region,
    pub contact: ContactLayout,
    /// Panel-centre probe node (symmetry plane, y = 0, top surface).
    pub probe: usize,
}

impl Benchmark {
    pub fn build(params: BenchmarkParams, material: Material) -> Result<Self> {
        params.validate()?;
        material.validate()?;
        let p = &params;
        let xs = p.x_coords();
        let ys = p.y_coords();
        let zp: Vec<f64> = (0..=p.nz).map(|k| p.thickness * k as f64 / p.nz as f64).collect();
        let zb: Vec<f64> = (0..=p.nz_block)
            .map(|k| -p.block_height + p.block_height * k as f64 / p.nz_block as f64)
            .collect();
        let nx = xs.len() - 1;
        let (ny, nz, nzb) = (p.ny, p.nz, p.nz_block);
        let clamp0 = p.nx_free;

        let mut nodes = Vec::new();
        let mut panel = vec![vec![vec![0usize; nz + 1]; ny + 1]; nx + 1];
        let mut block = vec![vec![vec![0usize; nzb + 1]; ny + 1]; nx + 1 - clamp0];
        for i in 0..=nx {
            for j in 0..=ny {
                if i >= clamp0 {
                    for (k, &z) in zb.iter().enumerate() {
                        block[i - clamp0][j][k] = nodes.len();
                        nodes.push(Vector3::new(xs[i], ys[j], z));
                    }
                }
                for (k, &z) in zp.iter().enumerate() {
                    panel[i][j][k] = nodes.len();
                    nodes.push(Vector3::new(xs[i], ys[j], z));
                }
            }
        }
        let hexa = |g: &dyn Fn(usize, usize, usize) -> usize, i: usize, j: usize, k: usize| {
            [
                g(i, j, k),
                g(i + 1, j, k),
                g(i + 1, j + 1, k),
                g(i, j + 1, k),
                g(i, j, k + 1),
                g(i + 1, j, k + 1),
                g(i + 1, j + 1, k + 1),
                g(i, j + 1, k + 1),
            ]
        };
        let gp = |i: usize, j: usize, k: usize| panel[i][j][k];
        let gb = |i: usize, j: usize, k: usize| block[i - clamp0][j][k];
        let i_gamma = p.interface_row();
        let mut elements = Vec::new();
        let (mut thin_el, mut support_el, mut panel_el, mut block_el) = (vec![], vec![], vec![], vec![]);
        for i in 0..nx {
            if i >= clamp0 {
                for j in 0..ny {
                    for k in 0..nzb {
                        block_el.push(elements.len());
                        support_el.push(elements.len());
                        elements.push(hexa(&gb, i, j, k));
                    }
                }
            }
            for j in 0..ny {
                for k in 0..nz {
                    panel_el.push(elements.len());
                    if i < i_gamma {
                        thin_el.push(elements.len());
                    } else {
                        support_el.push(elements.len());
                    }
                    elements.push(hexa(&gp, i, j, k));
                }
            }
        }

        let mut mesh = Mesh {
            nodes,
            elements,
            ..Default::default()
        };
        let all_j = 0..=ny;
        let symmetry: Vec<usize> = all_j
            .clone()
            .flat_map(|j| (0..=nz).map(move |k| (j, k)))
            .map(|(j, k)| panel[0][j][k])
            .collect();
        let interface: Vec<usize> = all_j
            .clone()
            .flat_map(|j| (0..=nz).map(move |k| (j, k)))
            .map(|(j, k)| panel[i_gamma][j][k])
            .collect();
        let fixed: Vec<usize> = (clamp0..=nx)
            .flat_map(|i| (0..=ny).map(move |j| (i, j)))
            .map(|(i, j)| block[i - clamp0][j][0])
            .collect();
        let jc = ny / 2;
        let gauge_y: Vec<usize> = (0..=i_gamma)
            .flat_map(|i| (0..=nz).map(move |k| (i, k)))
            .map(|(i, k)| panel[i][jc][k])
            .collect();
        let gauge_z = vec![panel[i_gamma - 1][0][nz], panel[i_gamma - 1][ny][nz]];
        let probe = panel[0][jc][nz];

        let mut pairs = Vec::new();
        let mut weights = Vec::new();
        let mut xy = Vec::new();
        let trib = |c: &[f64], i: usize, lo: usize, hi: usize| {
            let left = if i > lo { c[i] - c[i - 1] } else { 0.0 };
            let right = if i < hi { c[i + 1] - c[i] } else { 0.0 };
            0.5 * (left + right)
        };
        for i in clamp0..=nx {
            for j in 0..=ny {
                pairs.push((panel[i][j][0], block[i - clamp0][j][nzb]));
                weights.push(trib(&xs, i, clamp0, nx) * trib(&ys, j, 0, ny));
                xy.push([xs[i], ys[j]]);
            }
        }
        let mut contact_nodes: Vec<usize> = pairs.iter().flat_map(|&(a, b)| [a, b]).collect();
        contact_nodes.sort_unstable();

        mesh.node_sets.insert(sets::SYMMETRY.into(), symmetry);
        mesh.node_sets.insert(sets::INTERFACE.into(), interface);
        mesh.node_sets.insert(sets::FIXED.into(), fixed);
        mesh.node_sets.insert(sets::CONTACT_BOUNDARY.into(), contact_nodes);
        mesh.node_sets.insert(sets::LOADED.into(), vec![probe]);
        mesh.node_sets.insert(sets::GAUGE_Y.into(), gauge_y);
        mesh.node_sets.insert(sets::GAUGE_Z.into(), gauge_z);
        mesh.element_sets.insert("thin".into(), thin_el.clone());
        mesh.element_sets.insert("support".into(), support_el.clone());
        mesh.element_sets.insert("panel".into(), panel_el);
        mesh.element_sets.insert("block".into(), block_el);
        mesh.validate()?;

        let (thin_mesh, thin_nodes) = mesh.extract(&thin_el);
        let (support_mesh, support_nodes) = mesh.extract(&support_el);
        let bench = Self {
            params,
            material,
            thin: Region {
                mesh: thin_mesh,
                to_global: thin_nodes,
            },
            support: Region {
                mesh: support_mesh,
                to_global: support_nodes,
            },
            mesh,
            contact: ContactLayout { pairs, weights, xy },
            probe,
        };
        bench.check_interface()?;
        Ok(bench)
    }

    fn check_interface(&self) -> Result<()> {
        let a = self.thin.mesh.node_set(sets::INTERFACE)?;
        let b = self.support.mesh.node_set(sets::INTERFACE)?;
        if a.is_empty() || a.len() != b.len() {
            return Err(Error::InterfaceMismatch(format!(
                "interface node counts differ: {} vs {}",
                a.len(),
                b.len()
            )));
        }
        for (&na, &nb) in a.iter().zip(b) {
            let (xa, xb) = (self.thin.mesh.nodes[na], self.support.mesh.nodes[nb]);
            if (xa - xb).norm() > 1e-9 * self.params.width {
                return Err(Error::InterfaceMismatch(format!(
                    "interface nodes at {xa:?} and {xb:?} do not coincide"
                )));
            }
        }
        Ok(())
    }

    /// Copy whose nodal coordinates are shifted by a thin-region field (local numbering).
    /// Interface nodes must not move.
    pub fn with_thin_imperfection(&self, offsets: &[Vector3<f64>]) -> Result<Self> {
        if offsets.len() != self.thin.mesh.n_nodes() {
            return Err(Error::Dimension {
                what: "thin-region imperfection",
                expected: self.thin.mesh.n_nodes(),
                got: offsets.len(),
            });
        }
        let mut global = vec![Vector3::zeros(); self.mesh.n_nodes()];
        let iface = self.thin.mesh.node_set(sets::INTERFACE)?;
        for (l, &g) in self.thin.to_global.iter().enumerate() {
            if !iface.contains(&l) {
                global[g] = offsets[l];
            }
        }
        let mut out = self.clone();
        out.mesh = self.mesh.perturbed(&global)?;
        for r in [&mut out.thin, &mut out.support] {
            for (l, &g) in r.to_global.iter().enumerate() {
                r.mesh.nodes[l] = out.mesh.nodes[g];
            }
            r.mesh.validate()?;
        }
        Ok(out)
    }

    /// Contact pairs in support-region numbering.
    pub fn support_pairs(&self) -> Vec<(usize, usize)> {
        self.contact
            .pairs
            .iter()
            .map(|&(a, b)| {
                (
                    self.support.local(a).expect("contact nodes are in the support region"),
                    self.support.local(b).expect("contact nodes are in the support region"),
                )
            })
            .collect()
    }

    fn local_set(region: &Region, name: &str) -> Vec<usize> {
        region.mesh.node_sets.get(name).cloned().unwrap_or_default()
    }

    /// Thin-walled region with the symmetry constraint and a free interface.
    pub fn thin_model(&self) -> Result<FullOrderModel> {
        let mut c = Constraints::default();
        c.fix_nodes(&Self::local_set(&self.thin, sets::SYMMETRY), &[0]);
        FullOrderModel::new(self.thin.mesh.clone(), self.material, c)
    }

    /// Thin-walled region with the minimal static gauge (y = 0 line held in y, two
    /// second-row edge nodes held in z) replacing rigid-body suppression by inertia relief.
    pub fn thin_gauged_model(&self) -> Result<FullOrderModel> {
        let mut c = Constraints::default();
        c.fix_nodes(&Self::local_set(&self.thin, sets::SYMMETRY), &[0]);
        c.fix_nodes(&Self::local_set(&self.thin, sets::GAUGE_Y), &[1]);
        c.fix_nodes(&Self::local_set(&self.thin, sets::GAUGE_Z), &[2]);
        FullOrderModel::new(self.thin.mesh.clone(), self.material, c)
    }

    /// Support region with fixed block base; contact pairs tied or left as coupled pairs.
    pub fn support_model(&self, tied: bool) -> Result<FullOrderModel> {
        let mut c = Constraints::default();
        c.fix_nodes(&Self::local_set(&self.support, sets::FIXED), &[0, 1, 2]);
        let pairs = self.support_pairs();
        if tied {
            c.ties = pairs;
        } else {
            c.coupled = pairs;
        }
        FullOrderModel::new(self.support.mesh.clone(), self.material, c)
    }

    /// Monolithic model of the whole structure.
    pub fn full_model(&self, tied: bool) -> Result<FullOrderModel> {
        let mut c = Constraints::default();
        c.fix_nodes(self.mesh.node_set(sets::SYMMETRY)?, &[0]);
        c.fix_nodes(self.mesh.node_set(sets::FIXED)?, &[0, 1, 2]);
        if tied {
            c.ties = self.contact.pairs.clone();
        } else {
            c.coupled = self.contact.pairs.clone();
        }
        FullOrderModel::new(self.mesh.clone(), self.material, c)
    }
}

/// Thin-walled and support models of the default benchmark layout.
pub fn build_benchmark_model(
    params: BenchmarkParams,
    material: Material,
) -> Result<(FullOrderModel, FullOrderModel)> {
    let b = Benchmark::build(params, material)?;
    Ok((b.thin_model()?, b.support_model(false)?))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_layout_counts() {
        let b = Benchmark::build(BenchmarkParams::default(), Material::steel()).unwrap();
        let p = &b.params;
        assert_eq!(b.contact.pairs.len(), (p.nx_clamp + 1) * (p.ny + 1));
        let area: f64 = b.contact.weights.iter().sum();
        assert!((area - p.clamp_length * p.width).abs() < 1e-9);
        assert_eq!(b.thin.mesh.node_set(sets::INTERFACE).unwrap().len(), (p.ny + 1) * (p.nz + 1));
        assert!((b.mesh.nodes[b.probe] - Vector3::new(0.0, 0.0, p.thickness)).norm() < 1e-12);
    }

    #[test]
    fn graded_coordinates_refine_towards_clamp() {
        let p = BenchmarkParams {
            grading_ratio: 3.0,
            ..Default::default()
        };
        let xs = p.x_coords();
        let first = xs[1] - xs[0];
        let last = xs[p.nx_free] - xs[p.nx_free - 1];
        assert!((first / last - 3.0).abs() < 1e-9);
        assert!((xs[p.nx_free] - p.free_length).abs() < 1e-12);
    }

    #[test]
    fn zero_thickness_rejected() {
        let p = BenchmarkParams {
            thickness: 0.0,
            ..Default::default()
        };
        assert!(matches!(Benchmark::build(p, Material::steel()), Err(Error::Geometry(_))));
    }
}
