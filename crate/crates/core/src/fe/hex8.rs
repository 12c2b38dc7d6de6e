//! Trilinear 8-node hexahedron in a total-Lagrangian St. Venant–Kirchhoff setting.
//!
//! Node numbering follows the usual counter-clockwise convention:
//! ```text
//!        7-------6
//!       /|      /|
//!      4-------5 |
//!      | 3-----|-2
//!      |/      |/
//!      0-------1
//! ```
//! With `F = I + ∇u`, `E = ½(FᵀF − I)` and `S = λ tr(E) I + 2μE`, the nodal force
//! `f_a = Σ_gp F S ∇N_a w det J` is an exact cubic polynomial in the nodal
//! displacements for any fixed quadrature rule.

use nalgebra::{Matrix3, SMatrix, Vector3};

use super::material::Material;

pub const NODES: usize = 8;
pub const DOFS: usize = 24;

/// Natural coordinates of the element corners.
pub const CORNERS: [[f64; 3]; 8] = [
    [-1.0, -1.0, -1.0],
    [1.0, -1.0, -1.0],
    [1.0, 1.0, -1.0],
    [-1.0, 1.0, -1.0],
    [-1.0, -1.0, 1.0],
    [1.0, -1.0, 1.0],
    [1.0, 1.0, 1.0],
    [-1.0, 1.0, 1.0],
];

pub type ElementMatrix = SMatrix<f64, DOFS, DOFS>;
pub type ElementVector = SMatrix<f64, DOFS, 1>;

/// Shape function values at a natural point.
pub fn shape(xi: [f64; 3]) -> [f64; 8] {
    let mut n = [0.0; 8];
    for (a, c) in CORNERS.iter().enumerate() {
        n[a] = 0.125 * (1.0 + c[0] * xi[0]) * (1.0 + c[1] * xi[1]) * (1.0 + c[2] * xi[2]);
    }
    n
}

/// Shape function derivatives with respect to natural coordinates.
pub fn shape_derivatives(xi: [f64; 3]) -> [Vector3<f64>; 8] {
    let mut d = [Vector3::zeros(); 8];
    for (a, c) in CORNERS.iter().enumerate() {
        let (p, q, r) = (1.0 + c[0] * xi[0], 1.0 + c[1] * xi[1], 1.0 + c[2] * xi[2]);
        d[a] = Vector3::new(c[0] * q * r, p * c[1] * r, p * q * c[2]) * 0.125;
    }
    d
}

/// 2×2×2 Gauss points (weights are all one).
pub fn gauss_points() -> [[f64; 3]; 8] {
    let g = 1.0 / 3.0_f64.sqrt();
    let mut pts = [[0.0; 3]; 8];
    for (k, c) in CORNERS.iter().enumerate() {
        pts[k] = [c[0] * g, c[1] * g, c[2] * g];
    }
    pts
}

/// Reference-configuration data at the quadrature points of one element.
#[derive(Debug, Clone)]
pub struct ElementGeometry {
    /// `∂N_a/∂X` per quadrature point.
    pub grads: [[Vector3<f64>; 8]; 8],
    /// `N_a` per quadrature point.
    pub shapes: [[f64; 8]; 8],
    /// Quadrature weight times `det J` per point (mm³).
    pub wdet: [f64; 8],
}

impl ElementGeometry {
    /// Returns the smallest Jacobian determinant as the error payload when it is not positive.
    pub fn new(coords: &[Vector3<f64>; 8]) -> Result<Self, f64> {
        let mut grads = [[Vector3::zeros(); 8]; 8];
        let mut shapes = [[0.0; 8]; 8];
        let mut wdet = [0.0; 8];
        for (g, xi) in gauss_points().iter().enumerate() {
            let dn = shape_derivatives(*xi);
            let mut j = Matrix3::zeros();
            for a in 0..8 {
                j += coords[a] * dn[a].transpose();
            }
            let det = j.determinant();
            if !(det > 0.0) {
                return Err(det);
            }
            let jinv_t = j.try_inverse().ok_or(det)?.transpose();
            for a in 0..8 {
                grads[g][a] = jinv_t * dn[a];
            }
            shapes[g] = shape(*xi);
            wdet[g] = det;
        }
        Ok(Self {
            grads,
            shapes,
            wdet,
        })
    }

    pub fn volume(&self) -> f64 {
        self.wdet.iter().sum()
    }
}

/// Displacement gradient `∇u` at quadrature point `g`.
#[inline]
pub fn displacement_gradient(geo: &ElementGeometry, g: usize, u: &[Vector3<f64>; 8]) -> Matrix3<f64> {
    let mut h = Matrix3::zeros();
    for a in 0..8 {
        h += u[a] * geo.grads[g][a].transpose();
    }
    h
}

/// Green–Lagrange strain and second Piola–Kirchhoff stress from `∇u`.
#[inline]
pub fn svk_stress(h: &Matrix3<f64>, mat: &Material) -> (Matrix3<f64>, Matrix3<f64>) {
    let (lambda, mu) = mat.lame();
    let e = 0.5 * (h + h.transpose() + h.transpose() * h);
    let s = Matrix3::identity() * (lambda * e.trace()) + e * (2.0 * mu);
    (e, s)
}

/// Small-strain Cauchy stress from `∇u`.
#[inline]
pub fn linear_stress(h: &Matrix3<f64>, mat: &Material) -> Matrix3<f64> {
    let (lambda, mu) = mat.lame();
    let eps = 0.5 * (h + h.transpose());
    Matrix3::identity() * (lambda * eps.trace()) + eps * (2.0 * mu)
}

pub fn von_mises(s: &Matrix3<f64>) -> f64 {
    let d = (s[(0, 0)] - s[(1, 1)]).powi(2)
        + (s[(1, 1)] - s[(2, 2)]).powi(2)
        + (s[(2, 2)] - s[(0, 0)]).powi(2);
    let sh = s[(0, 1)].powi(2) + s[(1, 2)].powi(2) + s[(0, 2)].powi(2);
    (0.5 * d + 3.0 * sh).sqrt()
}

/// Outcome of a nonlinear element evaluation.
pub struct NonlinearElement {
    pub force: ElementVector,
    pub tangent: Option<ElementMatrix>,
    /// Smallest `det F` over the quadrature points.
    pub min_det_f: f64,
}

/// Internal force and (optionally) consistent tangent of one SVK element.
pub fn svk_element(
    geo: &ElementGeometry,
    u: &[Vector3<f64>; 8],
    mat: &Material,
    with_tangent: bool,
) -> NonlinearElement {
    let (lambda, mu) = mat.lame();
    let mut force = ElementVector::zeros();
    let mut tangent = with_tangent.then(ElementMatrix::zeros);
    let mut min_det_f = f64::INFINITY;
    for g in 0..8 {
        let h = displacement_gradient(geo, g, u);
        let f = Matrix3::identity() + h;
        min_det_f = min_det_f.min(f.determinant());
        let (_, s) = svk_stress(&h, mat);
        let w = geo.wdet[g];
        let grads = &geo.grads[g];
        let fs = f * s;
        let mut fg = [Vector3::zeros(); 8];
        let mut sg = [Vector3::zeros(); 8];
        for a in 0..8 {
            let fa = fs * grads[a] * w;
            force[3 * a] += fa[0];
            force[3 * a + 1] += fa[1];
            force[3 * a + 2] += fa[2];
            fg[a] = f * grads[a];
            sg[a] = s * grads[a];
        }
        if let Some(k) = tangent.as_mut() {
            let ff = f * f.transpose();
            for a in 0..8 {
                for b in 0..8 {
                    let geo_term = grads[a].dot(&sg[b]);
                    let gab = grads[a].dot(&grads[b]);
                    for i in 0..3 {
                        for kk in 0..3 {
                            let mut v = lambda * fg[a][i] * fg[b][kk]
                                + mu * (ff[(i, kk)] * gab + fg[b][i] * fg[a][kk]);
                            if i == kk {
                                v += geo_term;
                            }
                            k[(3 * a + i, 3 * b + kk)] += v * w;
                        }
                    }
                }
            }
        }
    }
    NonlinearElement {
        force,
        tangent,
        min_det_f,
    }
}

/// Linear (small-strain) stiffness; equals the SVK tangent at zero displacement.
pub fn linear_stiffness(geo: &ElementGeometry, mat: &Material) -> ElementMatrix {
    let zero = [Vector3::zeros(); 8];
    svk_element(geo, &zero, mat, true)
        .tangent
        .expect("tangent requested")
}

/// Consistent mass with density in consistent mass units per mm³.
pub fn consistent_mass(geo: &ElementGeometry, density: f64) -> ElementMatrix {
    let mut m = ElementMatrix::zeros();
    for g in 0..8 {
        let n = &geo.shapes[g];
        let w = geo.wdet[g] * density;
        for a in 0..8 {
            for b in 0..8 {
                let v = n[a] * n[b] * w;
                for i in 0..3 {
                    m[(3 * a + i, 3 * b + i)] += v;
                }
            }
        }
    }
    m
}

/// Initial-stress (geometric) stiffness for a given stress at each quadrature point.
pub fn geometric_stiffness(geo: &ElementGeometry, stress: &[Matrix3<f64>; 8]) -> ElementMatrix {
    let mut k = ElementMatrix::zeros();
    for g in 0..8 {
        let grads = &geo.grads[g];
        let w = geo.wdet[g];
        for a in 0..8 {
            let sa = stress[g] * grads[a];
            for b in 0..8 {
                let v = sa.dot(&grads[b]) * w;
                for i in 0..3 {
                    k[(3 * a + i, 3 * b + i)] += v;
                }
            }
        }
    }
    k
}

/// Stored SVK energy `∫ ½ S:E dV`.
pub fn svk_energy(geo: &ElementGeometry, u: &[Vector3<f64>; 8], mat: &Material) -> f64 {
    (0..8)
        .map(|g| {
            let h = displacement_gradient(geo, g, u);
            let (e, s) = svk_stress(&h, mat);
            0.5 * s.component_mul(&e).sum() * geo.wdet[g]
        })
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_cube() -> [Vector3<f64>; 8] {
        let mut c = [Vector3::zeros(); 8];
        for (a, k) in CORNERS.iter().enumerate() {
            c[a] = Vector3::new(0.5 * (k[0] + 1.0), 0.5 * (k[1] + 1.0), 0.5 * (k[2] + 1.0));
        }
        c
    }

    #[test]
    fn partition_of_unity() {
        let n = shape([0.2, -0.3, 0.7]);
        assert!((n.iter().sum::<f64>() - 1.0).abs() < 1e-15);
        let d = shape_derivatives([0.2, -0.3, 0.7]);
        let s: Vector3<f64> = d.iter().sum();
        assert!(s.norm() < 1e-15);
    }

    #[test]
    fn cube_volume_and_mass() {
        let geo = ElementGeometry::new(&unit_cube()).unwrap();
        assert!((geo.volume() - 1.0).abs() < 1e-14);
        let m = consistent_mass(&geo, 2.0);
        assert!((m.sum() / 3.0 - 2.0).abs() < 1e-13);
    }

    #[test]
    fn inverted_element_rejected() {
        let mut c = unit_cube();
        c.swap(0, 1);
        c.swap(2, 3);
        c.swap(4, 5);
        c.swap(6, 7);
        assert!(ElementGeometry::new(&c).is_err());
    }

    #[test]
    fn uniaxial_von_mises() {
        let mut s = Matrix3::zeros();
        s[(0, 0)] = 123.0;
        assert!((von_mises(&s) - 123.0).abs() < 1e-12);
    }

    #[test]
    fn tangent_matches_finite_differences() {
        let mat = Material::steel();
        let geo = ElementGeometry::new(&unit_cube()).unwrap();
        let mut u = [Vector3::zeros(); 8];
        for a in 0..8 {
            u[a] = Vector3::new(
                0.01 * (a as f64).sin(),
                0.02 * (1.3 * a as f64).cos(),
                -0.015 * (0.7 * a as f64).sin(),
            );
        }
        let ev = svk_element(&geo, &u, &mat, true);
        let k = ev.tangent.unwrap();
        let h = 1e-6;
        let mut fd = ElementMatrix::zeros();
        for b in 0..8 {
            for j in 0..3 {
                let mut up = u;
                let mut um = u;
                up[b][j] += h;
                um[b][j] -= h;
                let col = (svk_element(&geo, &up, &mat, false).force
                    - svk_element(&geo, &um, &mat, false).force)
                    / (2.0 * h);
                fd.set_column(3 * b + j, &col);
            }
        }
        let rel = (k - fd).norm() / k.norm();
        assert!(rel < 1e-7, "relative error {rel}");
    }
}
