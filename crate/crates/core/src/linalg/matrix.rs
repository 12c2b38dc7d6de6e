use nalgebra::{DMatrix, DVector};

use super::band::{BandLu, BandMatrix};
use crate::error::{Error, Result};

/// Square operator stored either densely (reduced models) or banded (full-order models).
#[derive(Debug, Clone)]
pub enum SysMatrix {
    Dense(DMatrix<f64>),
    Band(BandMatrix),
}

/// Factorization of a [`SysMatrix`].
#[derive(Debug, Clone)]
pub enum Factorized {
    Dense(nalgebra::LU<f64, nalgebra::Dyn, nalgebra::Dyn>),
    Band(BandLu),
}

impl SysMatrix {
    pub fn n(&self) -> usize {
        match self {
            SysMatrix::Dense(a) => a.nrows(),
            SysMatrix::Band(b) => b.n(),
        }
    }

    pub fn mul_vec(&self, x: &DVector<f64>) -> DVector<f64> {
        match self {
            SysMatrix::Dense(a) => a * x,
            SysMatrix::Band(b) => b.mul_vec(x),
        }
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        match self {
            SysMatrix::Dense(a) => a.clone(),
            SysMatrix::Band(b) => b.to_dense(),
        }
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        match self {
            SysMatrix::Dense(a) => a[(i, j)],
            SysMatrix::Band(b) => b.get(i, j),
        }
    }

    /// `self += alpha * other`. Mixed storage promotes to dense.
    pub fn add_scaled(&mut self, alpha: f64, other: &SysMatrix) {
        match (&mut *self, other) {
            (SysMatrix::Dense(a), SysMatrix::Dense(b)) => *a += b * alpha,
            (SysMatrix::Band(a), SysMatrix::Band(b)) => a.add_scaled(alpha, b),
            (SysMatrix::Dense(a), SysMatrix::Band(b)) => *a += b.to_dense() * alpha,
            (SysMatrix::Band(a), SysMatrix::Dense(b)) => {
                let d = a.to_dense() + b * alpha;
                *self = SysMatrix::Dense(d);
            }
        }
    }

    pub fn scaled(&self, alpha: f64) -> SysMatrix {
        match self {
            SysMatrix::Dense(a) => SysMatrix::Dense(a * alpha),
            SysMatrix::Band(b) => {
                let mut c = b.clone();
                c.scale(alpha);
                SysMatrix::Band(c)
            }
        }
    }

    pub fn factor(&self) -> Result<Factorized> {
        match self {
            SysMatrix::Dense(a) => {
                let lu = a.clone().lu();
                if !lu.is_invertible() {
                    return Err(Error::Singular { row: 0 });
                }
                let u = lu.u();
                let scale = u.diagonal().amax().max(f64::MIN_POSITIVE);
                if let Some(row) = (0..u.nrows()).find(|&i| u[(i, i)].abs() <= 1e-14 * scale) {
                    return Err(Error::Singular { row });
                }
                Ok(Factorized::Dense(lu))
            }
            SysMatrix::Band(b) => Ok(Factorized::Band(b.lu()?)),
        }
    }

    /// Quadratic form `xᵀ A y`.
    pub fn form(&self, x: &DVector<f64>, y: &DVector<f64>) -> f64 {
        x.dot(&self.mul_vec(y))
    }
}

impl Factorized {
    pub fn solve(&self, b: &DVector<f64>) -> DVector<f64> {
        match self {
            Factorized::Dense(lu) => lu.solve(b).expect("factorization checked invertible"),
            Factorized::Band(lu) => lu.solve(b),
        }
    }

    pub fn solve_matrix(&self, b: &DMatrix<f64>) -> DMatrix<f64> {
        match self {
            Factorized::Dense(lu) => lu.solve(b).expect("factorization checked invertible"),
            Factorized::Band(lu) => lu.solve_matrix(b),
        }
    }
}
