use nalgebra::{DMatrix, DVector, SymmetricEigen};

use super::model::FullOrderModel;
use crate::error::{Error, Result};
use crate::linalg::lanczos_pencil_extremes;

/// Problems up to this size use a dense eigen-decomposition.
const DENSE_LIMIT: usize = 400;

/// Load factors above this are reported as "no buckling".
pub const BUCKLING_CUTOFF: f64 = 100.0;

/// Critical load factors of `(K + γ K_G(f_ref)) φ = 0` for both load signs.
#[derive(Debug, Clone)]
pub struct Buckling {
    /// Smallest positive γ for `+f_ref` with its mode.
    pub positive: Option<(f64, DVector<f64>)>,
    /// Smallest positive γ for `−f_ref` with its mode.
    pub negative: Option<(f64, DVector<f64>)>,
}

impl Buckling {
    pub fn positive_factor(&self) -> Option<f64> {
        self.positive.as_ref().map(|p| p.0)
    }

    pub fn negative_factor(&self) -> Option<f64> {
        self.negative.as_ref().map(|p| p.0)
    }

    /// Smallest factor over both signs.
    pub fn critical(&self) -> Option<f64> {
        match (self.positive_factor(), self.negative_factor()) {
            (Some(a), Some(b)) => Some(a.min(b)),
            (a, b) => a.or(b),
        }
    }
}

/// Linear buckling analysis about the linear pre-stress state `K⁻¹ f_ref`.
pub fn buckling_analysis(model: &FullOrderModel, f_ref: &DVector<f64>) -> Result<Buckling> {
    if f_ref.len() != model.n_dofs() {
        return Err(Error::Dimension {
            what: "buckling reference load",
            expected: model.n_dofs(),
            got: f_ref.len(),
        });
    }
    if f_ref.amax() == 0.0 {
        return Err(Error::Parameter("buckling reference load is zero".into()));
    }
    let k_lu = model.stiffness().lu()?;
    let q_lin = k_lu.solve(f_ref);
    let kg = model.geometric_stiffness(&q_lin)?;
    // K_G φ = μ K φ  ⇒  γ = −1/μ
    let ((mu_min, phi_min), (mu_max, phi_max)) = if model.n_dofs() > DENSE_LIMIT {
        lanczos_pencil_extremes(&kg, model.stiffness(), &k_lu)?
    } else {
        dense_extremes(&kg.to_dense(), &model.stiffness().to_dense())?
    };
    let positive = (mu_min < 0.0 && -1.0 / mu_min <= BUCKLING_CUTOFF).then(|| (-1.0 / mu_min, sign_fixed(phi_min)));
    let negative = (mu_max > 0.0 && 1.0 / mu_max <= BUCKLING_CUTOFF).then(|| (1.0 / mu_max, sign_fixed(phi_max)));
    Ok(Buckling { positive, negative })
}

type Pair = (f64, DVector<f64>);

fn dense_extremes(kg: &DMatrix<f64>, k: &DMatrix<f64>) -> Result<(Pair, Pair)> {
    let chol = nalgebra::Cholesky::new((k + k.transpose()) * 0.5).ok_or(Error::Singular { row: 0 })?;
    let l = chol.l();
    let a = l.solve_lower_triangular(kg).expect("nonsingular factor");
    let c = l.solve_lower_triangular(&a.transpose()).expect("nonsingular factor");
    let eig = SymmetricEigen::new((&c + c.transpose()) * 0.5);
    let lt = l.transpose();
    let pair = |j: usize| -> Pair {
        let y = eig.eigenvectors.column(j).into_owned();
        (eig.eigenvalues[j], lt.solve_upper_triangular(&y).expect("nonsingular factor"))
    };
    Ok((pair(eig.eigenvalues.argmin().0), pair(eig.eigenvalues.argmax().0)))
}

fn sign_fixed(mut phi: DVector<f64>) -> DVector<f64> {
    let imax = phi.iamax();
    if phi[imax] < 0.0 {
        phi.neg_mut();
    }
    phi
}

/// Smallest positive buckling factor for `f_ref`, `None` when no buckling occurs.
pub fn linear_buckling(model: &FullOrderModel, f_ref: &DVector<f64>) -> Result<Option<f64>> {
    Ok(buckling_analysis(model, f_ref)?.positive_factor())
}
