//! Linear-algebra kernels shared by the full-order and reduced models.

mod band;
mod eigen;
mod matrix;

pub use band::{BandLu, BandMatrix};
pub use eigen::{
    dense_generalized, lanczos_pencil_extremes, lanczos_shift_invert, solve_eigen, Modes, EIGEN_RESIDUAL_TOL,
};
pub use matrix::{Factorized, SysMatrix};

use nalgebra::{DMatrix, DVector};

/// Moore–Penrose inverse via SVD, truncating singular values below `rel_tol · σ_max`.
pub fn pseudo_inverse(a: &DMatrix<f64>, rel_tol: f64) -> DMatrix<f64> {
    let svd = a.clone().svd(true, true);
    let smax = svd.singular_values.max();
    let cut = rel_tol * smax;
    let u = svd.u.as_ref().expect("u requested");
    let vt = svd.v_t.as_ref().expect("v_t requested");
    let mut out = DMatrix::zeros(a.ncols(), a.nrows());
    for (k, &s) in svd.singular_values.iter().enumerate() {
        if s > cut {
            out += vt.row(k).transpose() * u.column(k).transpose() / s;
        }
    }
    out
}

/// `‖x‖∞`.
pub fn inf_norm(x: &DVector<f64>) -> f64 {
    x.amax()
}

/// Makes a dense square matrix exactly symmetric by averaging with its transpose.
pub fn symmetrize(a: &mut DMatrix<f64>) {
    let n = a.nrows();
    for i in 0..n {
        for j in (i + 1)..n {
            let v = 0.5 * (a[(i, j)] + a[(j, i)]);
            a[(i, j)] = v;
            a[(j, i)] = v;
        }
    }
}

/// Largest `|a_ij − a_ji|` relative to `max |a_ij|`.
pub fn relative_asymmetry(a: &DMatrix<f64>) -> f64 {
    let scale = a.amax().max(f64::MIN_POSITIVE);
    (a - a.transpose()).amax() / scale
}
