use std::collections::{BTreeMap, HashSet};

use nalgebra::Vector3;

use super::hex8::ElementGeometry;
use crate::error::{Error, Result};

/// Names of the node sets produced by the benchmark generator.
pub mod sets {
    pub const CONTACT_BOUNDARY: &str = "contact-boundary";
    pub const INTERFACE: &str = "substructure-interface";
    pub const SYMMETRY: &str = "symmetry";
    pub const LOADED: &str = "loaded";
    pub const FIXED: &str = "fixed";
    pub const GAUGE_Y: &str = "gauge-y";
    pub const GAUGE_Z: &str = "gauge-z";
}

/// Hexahedral mesh with named node and element sets. Coordinates in mm.
#[derive(Debug, Clone, Default)]
pub struct Mesh {
    pub nodes: Vec<Vector3<f64>>,
    pub elements: Vec<[usize; 8]>,
    pub node_sets: BTreeMap<String, Vec<usize>>,
    pub element_sets: BTreeMap<String, Vec<usize>>,
}

impl Mesh {
    /// Structured block of hexahedra on a tensor grid; nodes ordered lexicographically
    /// by `(ix, iy, iz)` with `iz` fastest.
    pub fn grid(xs: &[f64], ys: &[f64], zs: &[f64]) -> Result<Self> {
        for (name, c) in [("x", xs), ("y", ys), ("z", zs)] {
            if c.len() < 2 {
                return Err(Error::Mesh(format!("{name} grid needs at least two coordinates")));
            }
            if c.windows(2).any(|w| !(w[1] > w[0])) {
                return Err(Error::Geometry(format!("{name} grid must be strictly increasing")));
            }
        }
        let (ny, nz) = (ys.len(), zs.len());
        let id = |i: usize, j: usize, k: usize| (i * ny + j) * nz + k;
        let mut nodes = Vec::with_capacity(xs.len() * ny * nz);
        for &x in xs {
            for &y in ys {
                for &z in zs {
                    nodes.push(Vector3::new(x, y, z));
                }
            }
        }
        let mut elements = Vec::new();
        for i in 0..xs.len() - 1 {
            for j in 0..ny - 1 {
                for k in 0..nz - 1 {
                    elements.push([
                        id(i, j, k),
                        id(i + 1, j, k),
                        id(i + 1, j + 1, k),
                        id(i, j + 1, k),
                        id(i, j, k + 1),
                        id(i + 1, j, k + 1),
                        id(i + 1, j + 1, k + 1),
                        id(i, j + 1, k + 1),
                    ]);
                }
            }
        }
        let mesh = Self {
            nodes,
            elements,
            ..Default::default()
        };
        mesh.validate()?;
        Ok(mesh)
    }

    pub fn n_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn n_elements(&self) -> usize {
        self.elements.len()
    }

    pub fn node_set(&self, name: &str) -> Result<&[usize]> {
        self.node_sets
            .get(name)
            .map(Vec::as_slice)
            .ok_or_else(|| Error::Mesh(format!("missing node set '{name}'")))
    }

    pub fn element_coords(&self, e: usize) -> [Vector3<f64>; 8] {
        self.elements[e].map(|n| self.nodes[n])
    }

    /// Node ids whose coordinates satisfy `pred`, ascending.
    pub fn select_nodes(&self, pred: impl Fn(&Vector3<f64>) -> bool) -> Vec<usize> {
        (0..self.nodes.len()).filter(|&i| pred(&self.nodes[i])).collect()
    }

    /// Checks connectivity, element validity and set references.
    pub fn validate(&self) -> Result<()> {
        let n = self.nodes.len();
        for (e, conn) in self.elements.iter().enumerate() {
            let distinct: HashSet<_> = conn.iter().collect();
            if distinct.len() != 8 {
                return Err(Error::Mesh(format!("element {e} repeats a node")));
            }
            if let Some(&bad) = conn.iter().find(|&&a| a >= n) {
                return Err(Error::Mesh(format!("element {e} references missing node {bad}")));
            }
            if let Err(det) = ElementGeometry::new(&self.element_coords(e)) {
                return Err(Error::Mesh(format!(
                    "element {e} has non-positive Jacobian {det:e} at a quadrature point"
                )));
            }
        }
        for (name, ids) in &self.node_sets {
            if let Some(&bad) = ids.iter().find(|&&a| a >= n) {
                return Err(Error::Mesh(format!("node set '{name}' references missing node {bad}")));
            }
        }
        let ne = self.elements.len();
        for (name, ids) in &self.element_sets {
            if let Some(&bad) = ids.iter().find(|&&a| a >= ne) {
                return Err(Error::Mesh(format!(
                    "element set '{name}' references missing element {bad}"
                )));
            }
        }
        Ok(())
    }

    /// Copy with nodal coordinates shifted by `offsets`.
    pub fn perturbed(&self, offsets: &[Vector3<f64>]) -> Result<Self> {
        if offsets.len() != self.nodes.len() {
            return Err(Error::Dimension {
                what: "nodal perturbation",
                expected: self.nodes.len(),
                got: offsets.len(),
            });
        }
        let mut m = self.clone();
        for (x, d) in m.nodes.iter_mut().zip(offsets) {
            *x += d;
        }
        m.validate()?;
        Ok(m)
    }

    /// Sub-mesh made of the listed elements. Returns the mesh and the old id of every new node.
    /// Node order follows the old numbering, so lexicographic orderings are preserved.
    pub fn extract(&self, elements: &[usize]) -> (Mesh, Vec<usize>) {
        let mut used = vec![false; self.nodes.len()];
        for &e in elements {
            for &a in &self.elements[e] {
                used[a] = true;
            }
        }
        let old: Vec<usize> = (0..self.nodes.len()).filter(|&i| used[i]).collect();
        let mut new_id = vec![usize::MAX; self.nodes.len()];
        for (k, &o) in old.iter().enumerate() {
            new_id[o] = k;
        }
        let mesh = Mesh {
            nodes: old.iter().map(|&o| self.nodes[o]).collect(),
            elements: elements
                .iter()
                .map(|&e| self.elements[e].map(|a| new_id[a]))
                .collect(),
            node_sets: self
                .node_sets
                .iter()
                .map(|(k, ids)| {
                    let v: Vec<usize> = ids
                        .iter()
                        .filter(|&&a| used[a])
                        .map(|&a| new_id[a])
                        .collect();
                    (k.clone(), v)
                })
                .filter(|(_, v)| !v.is_empty())
                .collect(),
            element_sets: BTreeMap::new(),
        };
        (mesh, old)
    }
}
