//! Orthogonal-polynomial interface modes on a flat substructure interface.
//!
//! Elementary terms `x^a y^b` (`a + b ≤ P`, ordered by total degree, then by `a`)
//! are orthogonalized by modified Gram–Schmidt under the nodal-area inner product
//! and expanded to three translations per node, `Γ = {v_{ℓ,k}} ⊗ I₃`.

use std::fmt::Write as _;

use nalgebra::{DMatrix, DVector, Vector3};

use crate::error::{Error, Result};
use crate::fe::Mesh;

/// Relative tolerance for the rigid-body span test of a column.
pub const RIGID_TOL: f64 = 1e-8;

/// Interface nodes with centred in-plane coordinates and tributary areas.
#[derive(Debug, Clone)]
pub struct InterfacePatch {
    /// Node ids in the owning mesh.
    pub nodes: Vec<usize>,
    /// Original 3D positions (mm).
    pub positions: Vec<Vector3<f64>>,
    /// In-plane coordinates `(x, y)` with the weighted centroid at the origin (mm).
    pub coords: Vec<[f64; 2]>,
    /// Tributary areas (mm²).
    pub weights: Vec<f64>,
}

impl InterfacePatch {
    /// Builds the patch from the element faces whose four corners all lie in `nodes`.
    /// `axes` selects the global directions used as in-plane `(x, y)`.
    pub fn from_mesh(mesh: &Mesh, nodes: &[usize], axes: [usize; 2]) -> Result<Self> {
        if nodes.is_empty() {
            return Err(Error::Mesh("interface node set is empty".into()));
        }
        const FACES: [[usize; 4]; 6] = [
            [0, 1, 2, 3],
            [4, 5, 6, 7],
            [0, 1, 5, 4],
            [1, 2, 6, 5],
            [2, 3, 7, 6],
            [3, 0, 4, 7],
        ];
        let local = |n: usize| nodes.iter().position(|&m| m == n);
        let mut weights = vec![0.0; nodes.len()];
        let g = 1.0 / 3.0_f64.sqrt();
        for conn in &mesh.elements {
            for face in FACES {
                let ids: Vec<Option<usize>> = face.iter().map(|&c| local(conn[c])).collect();
                if ids.iter().any(Option::is_none) {
                    continue;
                }
                let p: Vec<Vector3<f64>> = face.iter().map(|&c| mesh.nodes[conn[c]]).collect();
                // bilinear quad, 2×2 Gauss: ∫ N_a dA
                for (s, t) in [(-g, -g), (g, -g), (g, g), (-g, g)] {
                    let n = [
                        0.25 * (1.0 - s) * (1.0 - t),
                        0.25 * (1.0 + s) * (1.0 - t),
                        0.25 * (1.0 + s) * (1.0 + t),
                        0.25 * (1.0 - s) * (1.0 + t),
                    ];
                    let ds = (p[1] - p[0]) * (1.0 - t) + (p[2] - p[3]) * (1.0 + t);
                    let dt = (p[3] - p[0]) * (1.0 - s) + (p[2] - p[1]) * (1.0 + s);
                    let ja = ds.cross(&dt).norm() / 16.0;
                    for a in 0..4 {
                        weights[ids[a].expect("checked")] += n[a] * ja;
                    }
                }
            }
        }
        if let Some(i) = weights.iter().position(|&w| !(w > 0.0)) {
            return Err(Error::Mesh(format!(
                "interface node {} is not on any interface face",
                nodes[i]
            )));
        }
        let positions: Vec<Vector3<f64>> = nodes.iter().map(|&n| mesh.nodes[n]).collect();
        let raw: Vec<[f64; 2]> = positions.iter().map(|x| [x[axes[0]], x[axes[1]]]).collect();
        Ok(Self::centred(nodes.to_vec(), positions, raw, weights))
    }

    /// Patch from explicit coordinates and weights; coordinates are re-centred.
    pub fn centred(
        nodes: Vec<usize>,
        positions: Vec<Vector3<f64>>,
        coords: Vec<[f64; 2]>,
        weights: Vec<f64>,
    ) -> Self {
        let area: f64 = weights.iter().sum();
        let mut c = [0.0; 2];
        for (x, w) in coords.iter().zip(&weights) {
            c[0] += w * x[0] / area;
            c[1] += w * x[1] / area;
        }
        let coords = coords.iter().map(|x| [x[0] - c[0], x[1] - c[1]]).collect();
        Self {
            nodes,
            positions,
            coords,
            weights,
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn area(&self) -> f64 {
        self.weights.iter().sum()
    }

    fn inner(&self, u: &DVector<f64>, v: &DVector<f64>) -> f64 {
        u.iter().zip(v.iter()).zip(&self.weights).map(|((a, b), w)| a * b * w).sum()
    }
}

/// Exponents `(a, b)` with `a + b ≤ degree`, ordered by total degree then by `a`.
pub fn polynomial_terms(degree: usize) -> Vec<(usize, usize)> {
    let mut t = Vec::new();
    for d in 0..=degree {
        for a in 0..=d {
            t.push((a, d - a));
        }
    }
    t
}

/// Gram–Schmidt-orthogonalized scalar functions (one column per term), unit weighted norm.
pub fn orthogonal_polynomials(patch: &InterfacePatch, terms: &[(usize, usize)]) -> Result<DMatrix<f64>> {
    let n = patch.len();
    let mut v = DMatrix::zeros(n, terms.len());
    for (k, &(a, b)) in terms.iter().enumerate() {
        let mut col = DVector::from_fn(n, |l, _| {
            let [x, y] = patch.coords[l];
            x.powi(a as i32) * y.powi(b as i32)
        });
        let norm0 = patch.inner(&col, &col).sqrt();
        if norm0 == 0.0 {
            return Err(Error::RankDeficientTerm { a, b });
        }
        for _ in 0..2 {
            for j in 0..k {
                let vj = v.column(j).into_owned();
                let c = patch.inner(&col, &vj);
                col -= vj * c;
            }
        }
        let norm = patch.inner(&col, &col).sqrt();
        if norm <= 1e-10 * norm0 {
            return Err(Error::RankDeficientTerm { a, b });
        }
        v.set_column(k, &(col / norm));
    }
    Ok(v)
}

/// Which expanded columns to keep.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SymmetryFilter {
    #[default]
    None,
    /// Keep fields that are even under reflection of the in-plane `x` axis,
    /// which is global direction `mirror_dir`.
    EvenIn { mirror_dir: usize },
}

/// Descriptor of one column of Γ.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct InterfaceColumn {
    pub a: usize,
    pub b: usize,
    /// Global displacement direction (0 = x, 1 = y, 2 = z).
    pub direction: usize,
    /// Lies in the span of the interface rigid-body fields.
    pub rigid: bool,
}

#[derive(Debug, Clone)]
pub struct InterfaceBasis {
    pub degree: usize,
    /// Orthonormal scalar functions, one column per term.
    pub scalar: DMatrix<f64>,
    pub terms: Vec<(usize, usize)>,
    /// `3·nodes × columns`, each column max-abs normalized.
    pub gamma: DMatrix<f64>,
    pub columns: Vec<InterfaceColumn>,
}

/// Builds Γ for a patch; the filter is applied after the 3-DOF expansion.
pub fn build_interface_basis(
    patch: &InterfacePatch,
    degree: usize,
    filter: SymmetryFilter,
) -> Result<InterfaceBasis> {
    build_interface_basis_with_terms(patch, degree, &polynomial_terms(degree), filter)
}

/// As [`build_interface_basis`] with an explicit list of elementary terms.
pub fn build_interface_basis_with_terms(
    patch: &InterfacePatch,
    degree: usize,
    terms: &[(usize, usize)],
    filter: SymmetryFilter,
) -> Result<InterfaceBasis> {
    let terms = terms.to_vec();
    let mut distinct: Vec<[f64; 2]> = Vec::new();
    for c in &patch.coords {
        if !distinct.iter().any(|d| (d[0] - c[0]).abs() + (d[1] - c[1]).abs() < 1e-12) {
            distinct.push(*c);
        }
    }
    if distinct.len() < terms.len() {
        return Err(Error::Parameter(format!(
            "degree {degree} needs {} distinct interface locations, patch has {}",
            terms.len(),
            distinct.len()
        )));
    }
    let scalar = orthogonal_polynomials(patch, &terms)?;
    let n = patch.len();
    let rigid = rigid_fields(patch);
    let mut cols = Vec::new();
    let mut columns = Vec::new();
    for (k, &(a, b)) in terms.iter().enumerate() {
        for d in 0..3 {
            let keep = match filter {
                SymmetryFilter::None => true,
                SymmetryFilter::EvenIn { mirror_dir } => (a % 2 == 1) == (d == mirror_dir),
            };
            if !keep {
                continue;
            }
            let mut col = DVector::zeros(3 * n);
            for l in 0..n {
                col[3 * l + d] = scalar[(l, k)];
            }
            let m = col.amax();
            col /= m;
            let imax = col.iamax();
            if col[imax] < 0.0 {
                col.neg_mut();
            }
            columns.push(InterfaceColumn {
                a,
                b,
                direction: d,
                rigid: in_span(&rigid, &col),
            });
            cols.push(col);
        }
    }
    let gamma = if cols.is_empty() {
        DMatrix::zeros(3 * n, 0)
    } else {
        DMatrix::from_columns(&cols)
    };
    Ok(InterfaceBasis {
        degree,
        scalar,
        terms,
        gamma,
        columns,
    })
}

/// Translations and infinitesimal rotations of the patch nodes, one per column.
pub fn rigid_fields(patch: &InterfacePatch) -> DMatrix<f64> {
    let n = patch.len();
    let area = patch.area();
    let c: Vector3<f64> = patch
        .positions
        .iter()
        .zip(&patch.weights)
        .map(|(x, w)| x * (w / area))
        .sum();
    DMatrix::from_fn(3 * n, 6, |r, j| {
        let (l, d) = (r / 3, r % 3);
        if j < 3 {
            f64::from(d == j)
        } else {
            let axis = Vector3::ith(j - 3, 1.0);
            axis.cross(&(patch.positions[l] - c))[d]
        }
    })
}

fn in_span(basis: &DMatrix<f64>, v: &DVector<f64>) -> bool {
    let svd = basis.clone().svd(true, false);
    let u = svd.u.expect("u requested");
    let smax = svd.singular_values.max();
    let mut proj = DVector::zeros(v.len());
    for (k, &s) in svd.singular_values.iter().enumerate() {
        if s > 1e-12 * smax {
            let uk = u.column(k);
            proj += uk * uk.dot(v);
        }
    }
    (v - proj).norm() <= RIGID_TOL * v.norm()
}

impl InterfaceBasis {
    pub fn n_columns(&self) -> usize {
        self.columns.len()
    }

    /// Keeps the first `m` columns.
    pub fn truncated(&self, m: usize) -> Result<Self> {
        if m > self.n_columns() {
            return Err(Error::Parameter(format!(
                "requested {m} interface modes, basis has {}",
                self.n_columns()
            )));
        }
        Ok(Self {
            gamma: self.gamma.columns(0, m).into_owned(),
            columns: self.columns[..m].to_vec(),
            ..self.clone()
        })
    }

    /// Whitespace table: header `a b direction` per column, then one row per DOF.
    pub fn to_table(&self) -> String {
        let mut s = String::from("# interface modes; columns labelled a:b:direction\n#");
        for c in &self.columns {
            let _ = write!(s, " {}:{}:{}", c.a, c.b, ["x", "y", "z"][c.direction]);
        }
        s.push('\n');
        for r in 0..self.gamma.nrows() {
            let row: Vec<String> = self.gamma.row(r).iter().map(|v| format!("{v:.17e}")).collect();
            s.push_str(&row.join(" "));
            s.push('\n');
        }
        s
    }
}
